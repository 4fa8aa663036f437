//! Brute-force max-min search over Alice's encoding directions.
//!
//! Nothing here uses the closed forms in [`crate::optimal`]. For each dataset
//! `x` the worst-case success `f_x(â) = min_k ½(1 + (-1)^{x_k} âᵀ T B̂_k)` is
//! maximized over the sphere by a deterministic polar grid followed by a
//! pattern search in the tangent plane. The poll directions rotate by the
//! golden angle between iterations so narrow ridges (where two forms tie) are
//! eventually probed from every side.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimal::{orthogonal_pair, principal_axes, Method, OptimalResult};
use crate::pauli_bloch::{sign, TwoQubitBloch, UnitVector3};
use crate::rac::{check_sizes, DecodingSet, EncodingSet, RacTask};

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
const POLL_DIRECTIONS: usize = 48;
const ANGLE_GRID: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSearchConfig {
    /// Grid points per angle.
    pub coarse_grid: usize,
    pub refine_iters: usize,
    pub refine_shrink: f64,
    /// Refinement stops once the step falls below this (radians).
    pub tolerance: f64,
}

impl Default for SphereSearchConfig {
    fn default() -> Self {
        Self {
            coarse_grid: 180,
            refine_iters: 200,
            refine_shrink: 0.7,
            tolerance: 1e-6,
        }
    }
}

impl SphereSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_grid < 8 {
            return Err(Error::InvalidConfig(format!(
                "coarse_grid must be at least 8, got {}",
                self.coarse_grid
            )));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "refine_shrink must lie in (0, 1), got {}",
                self.refine_shrink
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Signed correlation vectors `u_k = (-1)^{x_k} T B̂_k`; `f_x(â) = ½(1 + min_k â·u_k)`.
fn signed_targets(task: &RacTask, s: &TwoQubitBloch, dec: &DecodingSet, x: usize) -> Vec<Vector3<f64>> {
    dec.directions()
        .iter()
        .enumerate()
        .map(|(k, b)| s.t() * b.into_inner() * sign(task.bit(x, k)))
        .collect()
}

#[inline]
fn min_projection(targets: &[Vector3<f64>], a: &Vector3<f64>) -> f64 {
    targets.iter().map(|u| a.dot(u)).fold(f64::INFINITY, f64::min)
}

fn tangent_basis(a: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let (i, _) = a
        .iter()
        .enumerate()
        .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
        .expect("three components");
    let mut axis = Vector3::zeros();
    axis[i] = 1.0;
    let e1 = a.cross(&axis).normalize();
    let e2 = a.cross(&e1);
    (e1, e2)
}

/// Pattern-search maximization of `f` on the unit sphere from `start`.
pub fn maximize_on_sphere<F>(f: F, start: Vector3<f64>, step: f64, cfg: &SphereSearchConfig) -> (Vector3<f64>, f64)
where
    F: Fn(&Vector3<f64>) -> f64,
{
    let mut a = start.normalize();
    let mut best = f(&a);
    let mut h = step;
    for it in 0..cfg.refine_iters {
        if h < cfg.tolerance {
            break;
        }
        let (e1, e2) = tangent_basis(&a);
        let offset = it as f64 * GOLDEN_ANGLE;
        let mut improved: Option<(Vector3<f64>, f64)> = None;
        for d in 0..POLL_DIRECTIONS {
            let psi = offset + 2.0 * PI * d as f64 / POLL_DIRECTIONS as f64;
            let cand = (a + (e1 * psi.cos() + e2 * psi.sin()) * h).normalize();
            let v = f(&cand);
            if v > improved.map_or(best, |p| p.1) {
                improved = Some((cand, v));
            }
        }
        match improved {
            Some((cand, v)) => {
                a = cand;
                best = v;
                h = (h / cfg.refine_shrink).min(1.0);
            }
            None => h *= cfg.refine_shrink,
        }
    }
    (a, best)
}

/// Compass search minimizing `f` over `R^3` (used for angle parameterizations).
pub fn pattern_search_min<F>(f: F, start: [f64; 3], step: f64, iters: usize, shrink: f64, tol: f64) -> ([f64; 3], f64)
where
    F: Fn([f64; 3]) -> f64,
{
    let mut p = start;
    let mut best = f(p);
    let mut h = step;
    for it in 0..iters {
        if h < tol {
            break;
        }
        // Coordinate axes plus a rotating diagonal pair.
        let phase = it as f64 * GOLDEN_ANGLE;
        let diag = [phase.cos() * FRAC_1_SQRT_2, phase.sin() * FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let dirs = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], diag];
        let mut improved: Option<([f64; 3], f64)> = None;
        for dir in dirs {
            for sgn in [1.0, -1.0] {
                let cand = [p[0] + sgn * h * dir[0], p[1] + sgn * h * dir[1], p[2] + sgn * h * dir[2]];
                let v = f(cand);
                if v < improved.map_or(best, |q| q.1) {
                    improved = Some((cand, v));
                }
            }
        }
        match improved {
            Some((cand, v)) => {
                p = cand;
                best = v;
            }
            None => h *= shrink,
        }
    }
    (p, best)
}

/// `-τ ln Σ exp(-z_k/τ)`: a smooth lower bound on `min_k z_k`, within `τ ln n`.
fn soft_min(targets: &[Vector3<f64>], a: &Vector3<f64>, tau: f64) -> f64 {
    let m = min_projection(targets, a);
    let sum: f64 = targets.iter().map(|u| (-(a.dot(u) - m) / tau).exp()).sum();
    m - tau * sum.ln()
}

/// Grid search followed by refinement for one dataset's targets.
///
/// The maximum sits on a ridge where several projections tie, and there the
/// ascent cone of the raw objective collapses. Refinement therefore runs on
/// [`soft_min`] with a shrinking temperature and scores the result on the
/// true objective.
fn maximize_min_projection(targets: &[Vector3<f64>], cfg: &SphereSearchConfig) -> (Vector3<f64>, f64) {
    let g = cfg.coarse_grid;
    let mut best = (Vector3::z(), f64::NEG_INFINITY);
    for i in 0..g {
        let theta = PI * (i as f64 + 0.5) / g as f64;
        for j in 0..g {
            let phi = 2.0 * PI * j as f64 / g as f64;
            let a = UnitVector3::from_angles(theta, phi).into_inner();
            let v = min_projection(targets, &a);
            if v > best.1 {
                best = (a, v);
            }
        }
    }
    let mut a = best.0;
    let mut step = 2.0 * PI / g as f64;
    let mut tau = 1e-2;
    while tau >= cfg.tolerance * 1e-3 {
        a = maximize_on_sphere(|p| soft_min(targets, p, tau), a, step, cfg).0;
        step = step.min(10.0 * tau.sqrt());
        tau *= 0.1;
    }
    let v = min_projection(targets, &a);
    if v > best.1 {
        (a, v)
    } else {
        best
    }
}

/// Brute-force optimal worst-case success for a fixed decoding set.
pub fn oracle_pmax(
    task: &RacTask,
    s: &TwoQubitBloch,
    dec: &DecodingSet,
    cfg: &SphereSearchConfig,
) -> Result<OptimalResult> {
    cfg.validate()?;
    s.require_diagonal()?;
    check_sizes(task, None, dec)?;
    // f_x̄(-â) = f_x(â), so only strings with x_0 = 0 are searched.
    let half = task.num_strings() / 2;
    let per_x: Vec<(Vector3<f64>, f64)> = (0..half)
        .into_par_iter()
        .map(|x| maximize_min_projection(&signed_targets(task, s, dec, x), cfg))
        .collect();
    let worst = per_x.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let encodings = (0..task.num_strings())
        .map(|x| {
            let a = if x < half { per_x[x].0 } else { -per_x[task.complement(x)].0 };
            UnitVector3::new(a).expect("normalized")
        })
        .collect();
    Ok(OptimalResult {
        p_max: 0.5 * (1.0 + worst),
        method: Method::OracleFallback,
        degenerate: false,
        encodings: EncodingSet::new(encodings),
    })
}

/// Coarser inner search used while scanning decoding pairs.
fn inner_config(cfg: &SphereSearchConfig) -> SphereSearchConfig {
    SphereSearchConfig {
        coarse_grid: cfg.coarse_grid.min(24),
        refine_iters: cfg.refine_iters.min(60),
        tolerance: cfg.tolerance.max(1e-4),
        ..*cfg
    }
}

/// Brute-force minimum of [`oracle_pmax`] over orthogonal decoding pairs for
/// the 2→1 code.
///
/// Pairs are parameterized by the polar angles `(α, β)` of `B̂+ = (B̂0+B̂1)/√2`
/// relative to Bob's principal axes and a rotation `γ` within the pair's
/// plane. The angle space is gridded in steps of π/4 and the best cell
/// refined by compass search; the minimizer is then re-evaluated with the
/// full `cfg`.
pub fn oracle_orthogonal_min(s: &TwoQubitBloch, cfg: &SphereSearchConfig) -> Result<f64> {
    cfg.validate()?;
    s.require_diagonal()?;
    let task = RacTask::new(2)?;
    let t = Vector3::from(s.correlations());
    let axes = principal_axes(&t);
    let inner = inner_config(cfg);
    let value = |p: [f64; 3], c: &SphereSearchConfig| -> f64 {
        let pair = orthogonal_pair(&axes, p[0], p[1], p[2]);
        let dec = DecodingSet::new(pair.iter().map(|b| UnitVector3::new(*b).expect("unit")).collect());
        oracle_pmax(&task, s, &dec, c).map(|r| r.p_max).unwrap_or(f64::INFINITY)
    };

    let g = ANGLE_GRID;
    let cells: Vec<[f64; 3]> = (0..=g)
        .flat_map(|i| (0..2 * g).flat_map(move |j| (0..g).map(move |l| [i, j, l])))
        .map(|[i, j, l]| [PI * i as f64 / g as f64, PI * j as f64 / g as f64, PI * l as f64 / g as f64])
        .collect();
    let scored: Vec<f64> = cells.par_iter().map(|p| value(*p, &inner)).collect();
    let mut best = 0;
    for (i, v) in scored.iter().enumerate() {
        if *v < scored[best] {
            best = i;
        }
    }
    let (p, _) = pattern_search_min(|p| value(p, &inner), cells[best], PI / g as f64, 60, cfg.refine_shrink, 1e-7);
    Ok(value(p, cfg).min(value(cells[best], cfg)))
}
