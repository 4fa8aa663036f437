//! Classical baselines: one communicated bit plus one shared bit per party.
//!
//! Alice holds `r_a`, Bob holds `r_b`, drawn from an arbitrary joint
//! distribution `p(r_a, r_b)`. For fixed tables, the success of each `(x, k)`
//! is `Σ p(r_a, r_b) [d_k(e(x, r_a), r_b) = x_k]`, a 0/1 row over the four
//! outcomes dotted with `p`. The worst-case LP for a strategy therefore only
//! depends on which of the 16 possible rows occur, and a superset of rows can
//! never do better. Enumeration runs over all decoder tables and, per
//! decoder, builds the inclusion-minimal row sets reachable by encoders one
//! dataset at a time. Each surviving row set gets an exact rational LP.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{q, LinearProgram, LpSolution, Q};

/// Outcome index of `(r_a, r_b)` in the source distribution.
fn outcome(ra: usize, rb: usize) -> usize {
    ra * 2 + rb
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Unrestricted,
    /// Bob's shared bit is uniformly distributed.
    BobMaximallyMixed,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::Unrestricted => "unrestricted",
            Constraint::BobMaximallyMixed => "bob_maximally_mixed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    /// `encoder[x][r_a]`, the bit Alice sends.
    pub encoder: Vec<[u8; 2]>,
    /// `decoders[k][c][r_b]`, Bob's guess for `x_k`.
    pub decoders: Vec<[[u8; 2]; 2]>,
    /// `source[r_a][r_b]`.
    pub source: [[f64; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpResult {
    pub n: usize,
    pub constraint: Constraint,
    pub value: f64,
    /// `value` as an exact fraction.
    pub exact: String,
    pub witness: ClassicalStrategy,
    /// Exact LP optimum verified against its dual.
    pub certified: bool,
    /// Optimum when the parties share unlimited randomness. Upper bound on
    /// `value`.
    pub shared_randomness_bound: f64,
}

/// Worst-case success of a strategy over all `(x, k)`.
pub fn strategy_worstcase(n: usize, strat: &ClassicalStrategy) -> Result<f64> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedN(n));
    }
    if strat.encoder.len() != 1 << n {
        return Err(Error::SizeMismatch { what: "encoder rows", expected: 1 << n, got: strat.encoder.len() });
    }
    if strat.decoders.len() != n {
        return Err(Error::SizeMismatch { what: "decoder tables", expected: n, got: strat.decoders.len() });
    }
    let flat = strat.source.concat();
    if flat.iter().any(|p| !(*p >= 0.0)) || (flat.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("source is not a distribution: {:?}", strat.source)));
    }
    if strat.encoder.iter().flatten().chain(strat.decoders.iter().flatten().flatten()).any(|b| *b > 1) {
        return Err(Error::InvalidConfig("strategy tables must contain bits".into()));
    }
    let mut worst = f64::INFINITY;
    for x in 0..1usize << n {
        for k in 0..n {
            let xk = ((x >> (n - 1 - k)) & 1) as u8;
            let mut s = 0.0;
            for ra in 0..2 {
                let c = strat.encoder[x][ra] as usize;
                for rb in 0..2 {
                    if strat.decoders[k][c][rb] == xk {
                        s += strat.source[ra][rb];
                    }
                }
            }
            worst = worst.min(s);
        }
    }
    Ok(worst)
}

/// A one-bit function `{0,1} → {0,1}` by index: `f(c) = (i >> (1 - c)) & 1`.
fn apply(f: usize, c: usize) -> usize {
    (f >> (1 - c)) & 1
}

/// Success row over the four outcomes for message pair `cp = (c(r_a=0), c(r_a=1))`
/// packed as `2·c0 + c1`, decoder pair `dp = 4·f(r_b=0) + f(r_b=1)`, target bit `b`.
fn success_row(cp: usize, dp: usize, b: usize) -> usize {
    let msg = [cp >> 1, cp & 1];
    let dec = [dp >> 2, dp & 3];
    let mut row = 0;
    for ra in 0..2 {
        for rb in 0..2 {
            if apply(dec[rb], msg[ra]) == b {
                row |= 1 << outcome(ra, rb);
            }
        }
    }
    row
}

/// A reachable set of rows (bit `r` set when row pattern `r` occurs) with the
/// tables producing it.
#[derive(Clone, Debug)]
struct RowSet {
    key: u16,
    decoders: Vec<usize>,
    encoder: Vec<usize>,
}

/// Keeps inclusion-minimal keys; ties broken by popcount then key, first wins.
fn minimal(mut sets: Vec<RowSet>) -> Vec<RowSet> {
    sets.sort_by_key(|s| (s.key.count_ones(), s.key));
    let mut out: Vec<RowSet> = Vec::new();
    for s in sets {
        if !out.iter().any(|o| o.key & s.key == o.key) {
            out.push(s);
        }
    }
    out
}

fn minimal_row_sets(n: usize) -> Vec<RowSet> {
    let num_dec = 16usize.pow(n as u32);
    let per_decoder: Vec<Vec<RowSet>> = (0..num_dec)
        .into_par_iter()
        .map(|code| {
            let decoders: Vec<usize> = (0..n).map(|k| (code >> (4 * (n - 1 - k))) & 15).collect();
            let mut sets = vec![RowSet { key: 0, decoders: decoders.clone(), encoder: Vec::new() }];
            for x in 0..1usize << n {
                let options: Vec<u16> = (0..4)
                    .map(|cp| {
                        (0..n).fold(0u16, |acc, k| acc | 1 << success_row(cp, decoders[k], (x >> (n - 1 - k)) & 1))
                    })
                    .collect();
                let grown = sets
                    .iter()
                    .flat_map(|s| {
                        options.iter().enumerate().map(move |(cp, o)| {
                            let mut encoder = s.encoder.clone();
                            encoder.push(cp);
                            RowSet { key: s.key | o, decoders: s.decoders.clone(), encoder }
                        })
                    })
                    .collect();
                sets = minimal(grown);
            }
            sets
        })
        .collect();
    minimal(per_decoder.into_iter().flatten().collect())
}

/// `max t` subject to `row·p ≥ t` for each row in `key`, `p` a distribution.
fn row_set_lp(key: u16, constraint: Constraint) -> LinearProgram {
    let mut lp = LinearProgram::new(vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1), q(1, 1)]);
    for r in (0..16).filter(|r| key >> r & 1 == 1) {
        let mut row: Vec<Q> = (0..4).map(|j| q(-((r >> j) & 1), 1)).collect();
        row.push(q(1, 1));
        lp.add_le(row, q(0, 1));
    }
    lp.add_eq(vec![q(1, 1), q(1, 1), q(1, 1), q(1, 1), q(0, 1)], q(1, 1));
    if constraint == Constraint::BobMaximallyMixed {
        let mut row = vec![q(0, 1); 5];
        row[outcome(0, 0)] = q(1, 1);
        row[outcome(1, 0)] = q(1, 1);
        lp.add_eq(row, q(1, 2));
    }
    lp
}

fn to_f64(v: &Q) -> f64 {
    v.to_f64().expect("small rationals convert")
}

fn witness(n: usize, set: &RowSet, sol: &LpSolution) -> ClassicalStrategy {
    let encoder = set.encoder.iter().map(|&cp| [(cp >> 1) as u8, (cp & 1) as u8]).collect();
    let decoders = set
        .decoders
        .iter()
        .map(|&dp| {
            let dec = [dp >> 2, dp & 3];
            let mut table = [[0u8; 2]; 2];
            for (c, row) in table.iter_mut().enumerate() {
                for (rb, cell) in row.iter_mut().enumerate() {
                    *cell = apply(dec[rb], c) as u8;
                }
            }
            table
        })
        .collect();
    let mut source = [[0.0; 2]; 2];
    for (ra, row) in source.iter_mut().enumerate() {
        for (rb, cell) in row.iter_mut().enumerate() {
            *cell = to_f64(&sol.x[outcome(ra, rb)]);
        }
    }
    debug_assert_eq!(set.encoder.len(), 1 << n);
    ClassicalStrategy { encoder, decoders, source }
}

/// Exact optimum of `max_λ min_{x,k} Σ_s λ_s [strategy s succeeds on (x, k)]`
/// over deterministic strategies `s` with no shared bits.
pub fn shared_randomness_maxmin(n: usize) -> Result<Q> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedN(n));
    }
    let pairs: Vec<(usize, usize)> = (0..1usize << n).flat_map(|x| (0..n).map(move |k| (x, k))).collect();
    let mut columns: Vec<u32> = Vec::new();
    for enc in 0..1usize << (1 << n) {
        for dec in 0..4usize.pow(n as u32) {
            let mut mask = 0u32;
            for (i, &(x, k)) in pairs.iter().enumerate() {
                let c = (enc >> x) & 1;
                let f = (dec >> (2 * k)) & 3;
                if apply(f, c) == (x >> (n - 1 - k)) & 1 {
                    mask |= 1 << i;
                }
            }
            columns.push(mask);
        }
    }
    // Drop duplicates and columns dominated by another column.
    columns.sort_unstable();
    columns.dedup();
    let kept: Vec<u32> = columns
        .iter()
        .filter(|&&c| !columns.iter().any(|&d| d != c && d & c == c))
        .copied()
        .collect();
    let m = kept.len();
    let mut c = vec![q(0, 1); m + 1];
    c[m] = q(1, 1);
    let mut lp = LinearProgram::new(c);
    for i in 0..pairs.len() {
        let mut row: Vec<Q> = kept.iter().map(|col| q(-(((col >> i) & 1) as i64), 1)).collect();
        row.push(q(1, 1));
        lp.add_le(row, q(0, 1));
    }
    let mut sum = vec![q(1, 1); m + 1];
    sum[m] = q(0, 1);
    lp.add_eq(sum, q(1, 1));
    Ok(lp.solve()?.value)
}

/// Best worst-case success with one shared bit per party.
pub fn classical_maxmin(n: usize, constraint: Constraint) -> Result<LpResult> {
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedN(n));
    }
    let mut best: Option<(Q, RowSet, LpSolution, bool)> = None;
    // Table of solved keys keeps the result independent of thread scheduling.
    let mut solved: BTreeMap<u16, ()> = BTreeMap::new();
    for set in minimal_row_sets(n) {
        if solved.insert(set.key, ()).is_some() {
            continue;
        }
        let lp = row_set_lp(set.key, constraint);
        let sol = match lp.solve() {
            Ok(s) => s,
            Err(Error::Infeasible) => continue,
            Err(e) => return Err(e),
        };
        let certified = sol.certify(&lp);
        if best.as_ref().is_none_or(|b| sol.value > b.0) {
            best = Some((sol.value.clone(), set, sol, certified));
        }
    }
    let (value, set, sol, certified) = best.ok_or(Error::Infeasible)?;
    Ok(LpResult {
        n,
        constraint,
        value: to_f64(&value),
        exact: value.to_string(),
        witness: witness(n, &set, &sol),
        certified,
        shared_randomness_bound: to_f64(&shared_randomness_maxmin(n)?),
    })
}
