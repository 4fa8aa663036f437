//! The n→1 random access code task under XOR decoding.
//!
//! Alice holds `x ∈ {0,1}ⁿ` and measures her qubit along `Â_x`, sending the
//! outcome `A_x`. Bob, asked for bit `k`, measures along `B̂_k` and outputs
//! `A_x ⊕ B_k`. Datasets are indexed by integers with `x_0` as the most
//! significant bit, so index 1 for `n = 2` is the string "01".

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optimal::OptimalResult;
use crate::pauli_bloch::{joint_outcome_prob, parity_prob, RotationPair, TwoQubitBloch, UnitVector3};

/// Orthogonality tolerance for decoding sets.
pub const ORTHO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RacTask {
    n: usize,
}

impl RacTask {
    pub fn new(n: usize) -> Result<Self> {
        match n {
            2 | 3 => Ok(Self { n }),
            _ => Err(Error::UnsupportedN(n)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_strings(&self) -> usize {
        1 << self.n
    }

    pub fn num_pairs(&self) -> usize {
        self.n << self.n
    }

    /// `x_k` of dataset `x`.
    #[inline]
    pub fn bit(&self, x: usize, k: usize) -> u8 {
        ((x >> (self.n - 1 - k)) & 1) as u8
    }

    pub fn bit_string(&self, x: usize) -> String {
        (0..self.n).map(|k| if self.bit(x, k) == 1 { '1' } else { '0' }).collect()
    }

    /// Bitwise complement of dataset `x`.
    pub fn complement(&self, x: usize) -> usize {
        !x & (self.num_strings() - 1)
    }
}

/// Alice's measurement directions, one per dataset `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EncodingSet(Vec<UnitVector3>);

impl EncodingSet {
    pub fn new(directions: Vec<UnitVector3>) -> Self {
        Self(directions)
    }

    pub fn directions(&self) -> &[UnitVector3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_canonical(&self, rot: &RotationPair) -> Self {
        Self(self.0.iter().map(|v| rot.alice_to_canonical(v)).collect())
    }

    pub fn from_canonical(&self, rot: &RotationPair) -> Self {
        Self(self.0.iter().map(|v| rot.alice_from_canonical(v)).collect())
    }
}

/// Bob's measurement directions, one per requested index `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DecodingSet(Vec<UnitVector3>);

impl DecodingSet {
    pub fn new(directions: Vec<UnitVector3>) -> Self {
        Self(directions)
    }

    /// `x̂, ŷ[, ẑ]`.
    pub fn principal_axes(n: usize) -> Self {
        Self([UnitVector3::x(), UnitVector3::y(), UnitVector3::z()][..n.min(3)].to_vec())
    }

    pub fn directions(&self) -> &[UnitVector3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.0.iter().enumerate().all(|(i, a)| {
            self.0[i + 1..].iter().all(|b| a.dot(b).abs() <= ORTHO_TOL)
        })
    }

    pub fn to_canonical(&self, rot: &RotationPair) -> Self {
        Self(self.0.iter().map(|v| rot.bob_to_canonical(v)).collect())
    }

    pub fn from_canonical(&self, rot: &RotationPair) -> Self {
        Self(self.0.iter().map(|v| rot.bob_from_canonical(v)).collect())
    }
}

pub(crate) fn check_sizes(task: &RacTask, enc: Option<&EncodingSet>, dec: &DecodingSet) -> Result<()> {
    if dec.len() != task.n() {
        return Err(Error::SizeMismatch {
            what: "decoding directions",
            expected: task.n(),
            got: dec.len(),
        });
    }
    if let Some(enc) = enc {
        if enc.len() != task.num_strings() {
            return Err(Error::SizeMismatch {
                what: "encoding directions",
                expected: task.num_strings(),
                got: enc.len(),
            });
        }
    }
    Ok(())
}

/// Success statistics for every `(x, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RacReport {
    task: RacTask,
    probs: Vec<f64>,
    trials_per_pair: Option<Vec<u64>>,
    p_min: f64,
    p_avg: f64,
    worst_pair: (usize, usize),
    optimal: Option<OptimalResult>,
}

impl RacReport {
    /// `probs[x * n + k]` holds `P(A_x ⊕ B_k = x_k)`.
    pub fn from_probabilities(task: RacTask, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), task.num_pairs());
        let mut worst = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p < probs[worst] {
                worst = i;
            }
        }
        let p_avg = probs.iter().sum::<f64>() / probs.len() as f64;
        Self {
            task,
            p_min: probs[worst],
            p_avg,
            worst_pair: (worst / task.n(), worst % task.n()),
            probs,
            trials_per_pair: None,
            optimal: None,
        }
    }

    pub fn task(&self) -> RacTask {
        self.task
    }

    pub fn prob(&self, x: usize, k: usize) -> f64 {
        self.probs[x * self.task.n() + k]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_avg(&self) -> f64 {
        self.p_avg
    }

    pub fn worst_pair(&self) -> (usize, usize) {
        self.worst_pair
    }

    pub fn trials(&self, x: usize, k: usize) -> Option<u64> {
        self.trials_per_pair
            .as_ref()
            .map(|t| t[x * self.task.n() + k])
    }

    pub fn optimal(&self) -> Option<&OptimalResult> {
        self.optimal.as_ref()
    }

    pub fn with_optimal(mut self, optimal: OptimalResult) -> Self {
        self.optimal = Some(optimal);
        self
    }

    /// One row per `(x, k)`: `x` as a bit string, `k`, probability.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["x", "k", "probability"]).map_err(io_err)?;
        for x in 0..self.task.num_strings() {
            for k in 0..self.task.n() {
                w.write_record([
                    self.task.bit_string(x),
                    k.to_string(),
                    self.prob(x, k).to_string(),
                ])
                .map_err(io_err)?;
            }
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Serialize)]
struct PairRow {
    x: String,
    k: usize,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
}

#[derive(Serialize)]
struct WorstPair {
    x: String,
    k: usize,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    n: usize,
    per_pair: Vec<PairRow>,
    p_min: f64,
    p_avg: f64,
    worst_pair: WorstPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal: Option<&'a OptimalResult>,
}

impl Serialize for RacReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.task.n();
        let per_pair = (0..self.task.num_strings())
            .flat_map(|x| (0..n).map(move |k| (x, k)))
            .map(|(x, k)| PairRow {
                x: self.task.bit_string(x),
                k,
                probability: self.prob(x, k),
                trials: self.trials(x, k),
            })
            .collect();
        ReportJson {
            n,
            per_pair,
            p_min: self.p_min,
            p_avg: self.p_avg,
            worst_pair: WorstPair {
                x: self.task.bit_string(self.worst_pair.0),
                k: self.worst_pair.1,
            },
            optimal: self.optimal.as_ref(),
        }
        .serialize(serializer)
    }
}

/// Exact success probabilities from the Born rule.
pub fn evaluate(
    task: &RacTask,
    s: &TwoQubitBloch,
    enc: &EncodingSet,
    dec: &DecodingSet,
) -> Result<RacReport> {
    check_sizes(task, Some(enc), dec)?;
    let n = task.n();
    let probs = (0..task.num_pairs())
        .map(|i| {
            let (x, k) = (i / n, i % n);
            parity_prob(s, &enc.0[x], &dec.0[k], task.bit(x, k))
        })
        .collect();
    Ok(RacReport::from_probabilities(*task, probs))
}

/// Monte Carlo estimate of the same table.
///
/// Trials are stratified: every `(x, k)` gets `trials / (n·2ⁿ)` shots, the
/// remainder going to the lowest pair indices. Pair `i` draws from a
/// ChaCha8 stream seeded with `seed` and stream id `i`, so results do not
/// depend on thread scheduling or platform.
pub fn simulate(
    task: &RacTask,
    s: &TwoQubitBloch,
    enc: &EncodingSet,
    dec: &DecodingSet,
    trials: u64,
    seed: u64,
) -> Result<RacReport> {
    check_sizes(task, Some(enc), dec)?;
    let pairs = task.num_pairs() as u64;
    if trials < pairs {
        return Err(Error::InvalidConfig(format!(
            "need at least {pairs} trials (one per (x, k) pair), got {trials}"
        )));
    }
    let n = task.n();
    let base = trials / pairs;
    let extra = trials % pairs;
    let shots: Vec<u64> = (0..pairs).map(|i| base + u64::from(i < extra)).collect();

    let probs = (0..task.num_pairs())
        .into_par_iter()
        .map(|i| {
            let (x, k) = (i / n, i % n);
            let xk = task.bit(x, k);
            let (a_dir, b_dir) = (&enc.0[x], &dec.0[k]);
            let mut cumulative = [0.0; 4];
            let mut acc = 0.0;
            for (j, (a, b)) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                acc += joint_outcome_prob(s, a_dir, b_dir, a, b).max(0.0);
                cumulative[j] = acc;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut wins = 0u64;
            for _ in 0..shots[i] {
                let u: f64 = rng.random::<f64>() * acc;
                let outcome = cumulative.iter().position(|c| u < *c).unwrap_or(3) as u8;
                let (a, b) = (outcome >> 1, outcome & 1);
                if a ^ b == xk {
                    wins += 1;
                }
            }
            wins as f64 / shots[i] as f64
        })
        .collect();

    let mut report = RacReport::from_probabilities(*task, probs);
    report.trials_per_pair = Some(shots);
    Ok(report)
}
