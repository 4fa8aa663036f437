//! Dense two-phase simplex over exact rationals.
//!
//! Solves `max cᵀx` subject to `A_ub x ≤ b_ub`, `A_eq x = b_eq`, `x ≥ 0` and
//! returns the primal optimum together with dual multipliers, so optimality
//! can be certified by [`LpSolution::certify`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// `max cᵀx` with `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub c: Vec<Q>,
    pub a_ub: Vec<Vec<Q>>,
    pub b_ub: Vec<Q>,
    pub a_eq: Vec<Vec<Q>>,
    pub b_eq: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: Q,
    pub x: Vec<Q>,
    /// Multipliers for the `≤` rows (nonnegative).
    pub y_ub: Vec<Q>,
    /// Multipliers for the equality rows (free).
    pub y_eq: Vec<Q>,
}

impl LinearProgram {
    pub fn new(c: Vec<Q>) -> Self {
        Self { c, ..Default::default() }
    }

    pub fn add_le(&mut self, row: Vec<Q>, rhs: Q) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<Q>, rhs: Q) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.c.len();
        for row in self.a_ub.iter().chain(&self.a_eq) {
            if row.len() != n {
                return Err(Error::SizeMismatch {
                    what: "constraint coefficients",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        Ok(())
    }

    /// Errors with [`Error::Infeasible`] for an empty feasible set. Unbounded
    /// programs are reported as [`Error::InvalidConfig`].
    pub fn solve(&self) -> Result<LpSolution> {
        self.check_shape()?;
        Tableau::build(self).run(self)
    }
}

impl LpSolution {
    /// Checks primal and dual feasibility and equality of objectives.
    pub fn certify(&self, lp: &LinearProgram) -> bool {
        let dot = |a: &[Q], b: &[Q]| a.iter().zip(b).fold(Q::zero(), |s, (p, q)| s + p * q);
        if self.x.iter().any(|v| v.is_negative()) || self.y_ub.iter().any(|v| v.is_negative()) {
            return false;
        }
        let primal_ok = lp.a_ub.iter().zip(&lp.b_ub).all(|(r, b)| dot(r, &self.x) <= *b)
            && lp.a_eq.iter().zip(&lp.b_eq).all(|(r, b)| dot(r, &self.x) == *b);
        let dual_ok = (0..lp.c.len()).all(|j| {
            let col = lp.a_ub.iter().zip(&self.y_ub).chain(lp.a_eq.iter().zip(&self.y_eq));
            col.fold(Q::zero(), |s, (r, y)| s + &r[j] * y) >= lp.c[j]
        });
        let dual_value = dot(&lp.b_ub, &self.y_ub) + dot(&lp.b_eq, &self.y_eq);
        primal_ok && dual_ok && dual_value == self.value && dot(&lp.c, &self.x) == self.value
    }
}

struct Tableau {
    /// `m` constraint rows, each `cols` coefficients followed by the rhs.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    n_orig: usize,
    /// Column that held the identity for each row initially, and the sign the
    /// row was scaled by.
    unit_col: Vec<usize>,
    row_sign: Vec<Q>,
    artificial: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.c.len();
        let m_ub = lp.a_ub.len();
        let m = m_ub + lp.a_eq.len();
        // Columns: originals, one slack per ≤ row, one artificial per row that needs it.
        let mut needs_art = Vec::with_capacity(m);
        for b in &lp.b_ub {
            needs_art.push(b.is_negative());
        }
        needs_art.extend(std::iter::repeat_n(true, lp.a_eq.len()));
        let n_art = needs_art.iter().filter(|v| **v).count();
        let cols = n + m_ub + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_col = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        let mut artificial = vec![false; cols];
        let mut next_art = n + m_ub;
        for i in 0..m {
            let (a, b) = if i < m_ub {
                (&lp.a_ub[i], &lp.b_ub[i])
            } else {
                (&lp.a_eq[i - m_ub], &lp.b_eq[i - m_ub])
            };
            let sign = if b.is_negative() { -Q::one() } else { Q::one() };
            let mut row = vec![Q::zero(); cols + 1];
            for (j, v) in a.iter().enumerate() {
                row[j] = v * &sign;
            }
            if i < m_ub {
                row[n + i] = sign.clone();
            }
            row[cols] = b * &sign;
            if needs_art[i] {
                row[next_art] = Q::one();
                artificial[next_art] = true;
                basis.push(next_art);
                unit_col.push(next_art);
                next_art += 1;
            } else {
                basis.push(n + i);
                unit_col.push(n + i);
            }
            row_sign.push(sign);
            rows.push(row);
        }
        Self { rows, basis, n_orig: n, unit_col, row_sign, artificial }
    }

    fn cols(&self) -> usize {
        self.artificial.len()
    }

    /// Reduced costs `c_j - c_Bᵀ B⁻¹ A_j` for a maximization with costs `cost`.
    fn reduced(&self, cost: &[Q]) -> Vec<Q> {
        let mut r = cost.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if cost[b].is_zero() {
                continue;
            }
            for (j, rj) in r.iter_mut().enumerate() {
                *rj -= &cost[b] * &row[j];
            }
        }
        r
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let p = self.rows[pr][pc].clone();
        for v in self.rows[pr].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr || row[pc].is_zero() {
                continue;
            }
            let f = row[pc].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
        self.basis[pr] = pc;
    }

    fn objective(&self, cost: &[Q]) -> Q {
        let rhs = self.cols();
        self.rows.iter().zip(&self.basis).fold(Q::zero(), |s, (r, &b)| s + &cost[b] * &r[rhs])
    }

    /// Maximizes `cost` from the current basis; `allowed` masks entering columns.
    ///
    /// Enters the largest reduced cost, switching to Bland's rule for good
    /// after a run of degenerate pivots.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> Result<()> {
        const STALL_LIMIT: usize = 50;
        let rhs = self.cols();
        let mut bland = false;
        let mut stalled = 0;
        let mut last = self.objective(cost);
        loop {
            let red = self.reduced(cost);
            let candidates = (0..self.cols()).filter(|&j| allowed[j] && red[j].is_positive());
            let entering = if bland {
                candidates.min()
            } else {
                candidates.fold(None, |best: Option<usize>, j| match best {
                    Some(b) if red[b] >= red[j] => Some(b),
                    _ => Some(j),
                })
            };
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[pc].is_positive() {
                    let ratio = &row[rhs] / &row[pc];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((pr, _)) => self.pivot(pr, pc),
                None => return Err(Error::InvalidConfig("linear program is unbounded".into())),
            }
            let now = self.objective(cost);
            if now > last {
                stalled = 0;
                last = now;
            } else {
                stalled += 1;
                bland |= stalled >= STALL_LIMIT;
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let cols = self.cols();
        let rhs = cols;
        if self.artificial.iter().any(|a| *a) {
            let cost: Vec<Q> = self.artificial.iter().map(|&a| if a { -Q::one() } else { Q::zero() }).collect();
            self.optimize(&cost, &vec![true; cols])?;
            let infeasibility = self
                .rows
                .iter()
                .zip(&self.basis)
                .filter(|(_, b)| self.artificial[**b])
                .fold(Q::zero(), |s, (r, _)| s + &r[rhs]);
            if infeasibility.is_positive() {
                return Err(Error::Infeasible);
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.rows.len() {
                if self.artificial[self.basis[i]] {
                    if let Some(pc) = (0..cols).find(|&j| !self.artificial[j] && !self.rows[i][j].is_zero()) {
                        self.pivot(i, pc);
                    }
                }
            }
        }
        let mut cost = vec![Q::zero(); cols];
        cost[..self.n_orig].clone_from_slice(&lp.c);
        let allowed: Vec<bool> = self.artificial.iter().map(|a| !a).collect();
        self.optimize(&cost, &allowed)?;

        let mut x = vec![Q::zero(); self.n_orig];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_orig {
                x[b] = row[rhs].clone();
            }
        }
        let value = lp.c.iter().zip(&x).fold(Q::zero(), |s, (c, v)| s + c * v);
        // y_i = c_Bᵀ B⁻¹ e_i, read off the column that started as e_i.
        let red = self.reduced(&cost);
        let y: Vec<Q> = self
            .unit_col
            .iter()
            .zip(&self.row_sign)
            .map(|(&j, s)| -&red[j] * s)
            .collect();
        let m_ub = lp.a_ub.len();
        Ok(LpSolution {
            value,
            x,
            y_ub: y[..m_ub].to_vec(),
            y_eq: y[m_ub..].to_vec(),
        })
    }
}
