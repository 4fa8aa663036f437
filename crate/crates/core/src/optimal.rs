//! Closed-form optimal encodings for a fixed set of decoding directions.
//!
//! For dataset `x` the success probabilities are `½(1 + Â_x·u_k)` with
//! `u_k = (-1)^{x_k} T B̂_k`, so Alice's best encoding maximizes the smallest
//! projection of a unit vector onto the `u_k`. Every function here works in
//! the diagonal frame (see [`crate::pauli_bloch::canonicalize`]).
//!
//! 3→1: for non-coplanar decodings the projections can be equalized by
//! `Â_x ∝ T⁻¹[(-1)^{x0} B̂1×B̂2 + (-1)^{x1} B̂2×B̂0 + (-1)^{x2} B̂0×B̂1]`, giving
//! `p_max = ½[1 + |(B̂0×B̂1)·B̂2| / max_x ‖T⁻¹[…]‖]`.
//!
//! 2→1: the optimum for each sign pattern is the distance from the origin to
//! the line through `u_0` and `u_1`,
//! `‖adj(T)(B̂0×B̂1)‖ / ‖T(B̂0 ∓ B̂1)‖`, attained by the unit foot of the
//! perpendicular. This matches `½[1 + min (1 ± B̂0·B̂1)/‖T⁻¹(±B̂0 ± B̂1)‖]`
//! whenever `T⁻¹(±B̂0 ± B̂1)` lies in the plane of `u_0, u_1` (decodings along
//! principal axes, for instance), and exceeds it otherwise. The latter
//! expression is available as [`equalized_bound_2to1`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{self, SphereSearchConfig};
use crate::pauli_bloch::{sign, TwoQubitBloch, UnitVector3};
use crate::rac::{DecodingSet, EncodingSet, RacTask};

/// Triple products at or below this magnitude count as coplanar.
pub const COPLANAR_TOL: f64 = 1e-9;
/// Correlation entries at or below this magnitude count as zero.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Cross products at or below this magnitude count as parallel decodings.
const PARALLEL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    OracleFallback,
}

/// Optimal worst-case success probability and encodings achieving it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalResult {
    pub p_max: f64,
    pub method: Method,
    /// Singular `T` or coplanar decodings.
    pub degenerate: bool,
    pub encodings: EncodingSet,
}

fn diag(s: &TwoQubitBloch) -> Vector3<f64> {
    Vector3::from(s.correlations())
}

fn is_singular(t: &Vector3<f64>) -> bool {
    t.iter().any(|v| v.abs() <= SINGULAR_TOL)
}

/// Some unit vector orthogonal to both `a` and `b`.
fn orthogonal_to(a: &Vector3<f64>, b: &Vector3<f64>) -> UnitVector3 {
    if let Ok(v) = UnitVector3::new(a.cross(b)) {
        if a.cross(b).norm() > 1e-14 {
            return v;
        }
    }
    let seed = if a.norm() > b.norm() { a } else { b };
    if seed.norm() <= 1e-300 {
        return UnitVector3::z();
    }
    // Cross with the axis least aligned with `seed`.
    let (i, _) = seed
        .iter()
        .enumerate()
        .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
        .expect("three components");
    let mut axis = Vector3::zeros();
    axis[i] = 1.0;
    UnitVector3::new(seed.cross(&axis)).expect("seed is nonzero and not along axis")
}

fn expect_len(dec: &DecodingSet, n: usize) -> Result<()> {
    if dec.len() != n {
        return Err(Error::SizeMismatch {
            what: "decoding directions",
            expected: n,
            got: dec.len(),
        });
    }
    Ok(())
}

/// Optimal worst-case success of the 2→1 code for decodings `dec`.
pub fn pmax_2to1(s: &TwoQubitBloch, dec: &DecodingSet) -> Result<OptimalResult> {
    s.require_diagonal()?;
    expect_len(dec, 2)?;
    let task = RacTask::new(2)?;
    let t = diag(s);
    let b = dec.directions();
    if b[0].cross(&b[1]).norm() <= PARALLEL_TOL {
        return Err(Error::DegenerateDecodings);
    }

    let mut worst = f64::INFINITY;
    let mut encodings = Vec::with_capacity(4);
    for x in 0..task.num_strings() {
        let u0 = t.component_mul(&b[0]) * sign(task.bit(x, 0));
        let u1 = t.component_mul(&b[1]) * sign(task.bit(x, 1));
        let d = u1 - u0;
        let foot = if d.norm_squared() <= 1e-300 {
            u0
        } else {
            u0 - d * (u0.dot(&d) / d.norm_squared())
        };
        let dist = foot.norm();
        worst = worst.min(dist);
        let enc = if dist > 1e-14 {
            UnitVector3::new(foot).expect("nonzero foot")
        } else {
            orthogonal_to(&u0, &u1)
        };
        encodings.push(enc);
    }

    Ok(OptimalResult {
        p_max: 0.5 * (1.0 + worst.max(0.0)),
        method: Method::ClosedForm,
        degenerate: is_singular(&t),
        encodings: EncodingSet::new(encodings),
    })
}

/// `½[1 + min_x (1 + (-1)^{x0⊕x1} B̂0·B̂1) / ‖T⁻¹[(-1)^{x0} B̂0 + (-1)^{x1} B̂1]‖]`.
///
/// A lower bound on [`pmax_2to1`], tight for principal-axis decodings. A sign
/// pattern whose bracket has weight on an axis with `T_i = 0` contributes 0.
pub fn equalized_bound_2to1(s: &TwoQubitBloch, dec: &DecodingSet) -> Result<f64> {
    s.require_diagonal()?;
    expect_len(dec, 2)?;
    let t = diag(s);
    let b = dec.directions();
    if b[0].cross(&b[1]).norm() <= PARALLEL_TOL {
        return Err(Error::DegenerateDecodings);
    }
    let mut worst = f64::INFINITY;
    for (s0, s1) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let v = b[0].into_inner() * s0 + b[1].into_inner() * s1;
        let blocked = (0..3).any(|i| t[i].abs() <= SINGULAR_TOL && v[i].abs() > 1e-12);
        let term = if blocked {
            0.0
        } else {
            let inv = Vector3::from_fn(|i, _| if t[i].abs() > SINGULAR_TOL { v[i] / t[i] } else { 0.0 });
            (1.0 + s0 * s1 * b[0].dot(&b[1])) / inv.norm()
        };
        worst = worst.min(term);
    }
    Ok(0.5 * (1.0 + worst))
}

/// Optimal worst-case success of the 3→1 code for non-coplanar decodings.
pub fn pmax_3to1(s: &TwoQubitBloch, dec: &DecodingSet) -> Result<OptimalResult> {
    s.require_diagonal()?;
    expect_len(dec, 3)?;
    let task = RacTask::new(3)?;
    let t = diag(s);
    let b = dec.directions();
    let triple = b[0].cross(&b[1]).dot(&b[2]);
    if triple.abs() <= COPLANAR_TOL {
        return Err(Error::CoplanarDecodings(triple));
    }

    if is_singular(&t) {
        // Every u_k lies in the range of T, which has dimension < 3; some sign
        // pattern then surrounds the origin, so ½ is optimal and a null axis of
        // T achieves it for every x.
        let (null_axis, _) = t
            .iter()
            .enumerate()
            .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
            .expect("three entries");
        let mut axis = Vector3::zeros();
        axis[null_axis] = 1.0;
        let a = UnitVector3::new(axis).expect("axis");
        return Ok(OptimalResult {
            p_max: 0.5,
            method: Method::ClosedForm,
            degenerate: true,
            encodings: EncodingSet::new(vec![a; task.num_strings()]),
        });
    }

    let cross = [b[1].cross(&b[2]), b[2].cross(&b[0]), b[0].cross(&b[1])];
    let orient = triple.signum();
    let mut largest: f64 = 0.0;
    let mut encodings = Vec::with_capacity(8);
    for x in 0..task.num_strings() {
        let w: Vector3<f64> = (0..3).map(|k| cross[k] * sign(task.bit(x, k))).sum();
        let a = w.component_div(&t);
        largest = largest.max(a.norm());
        encodings.push(UnitVector3::new(a * orient).expect("T invertible and w nonzero"));
    }

    Ok(OptimalResult {
        p_max: 0.5 * (1.0 + triple.abs() / largest),
        method: Method::ClosedForm,
        degenerate: false,
        encodings: EncodingSet::new(encodings),
    })
}

/// [`pmax_3to1`], falling back to the sphere search for coplanar decodings.
pub fn pmax_3to1_or_oracle(
    s: &TwoQubitBloch,
    dec: &DecodingSet,
    cfg: &SphereSearchConfig,
) -> Result<OptimalResult> {
    match pmax_3to1(s, dec) {
        Err(Error::CoplanarDecodings(_)) => {
            let mut r = oracle::oracle_pmax(&RacTask::new(3)?, s, dec, cfg)?;
            r.degenerate = true;
            Ok(r)
        }
        other => other,
    }
}

/// Dispatches on the number of decodings.
pub fn pmax(s: &TwoQubitBloch, dec: &DecodingSet) -> Result<OptimalResult> {
    match dec.len() {
        2 => pmax_2to1(s, dec),
        3 => pmax_3to1(s, dec),
        n => Err(Error::UnsupportedN(n)),
    }
}

/// Largest spread, over datasets, of the signed projections
/// `(-1)^{x_k} Â_xᵀ T B̂_k`. Zero means every encoding projects equally.
pub fn equal_projection_residual(
    s: &TwoQubitBloch,
    enc: &EncodingSet,
    dec: &DecodingSet,
) -> Result<f64> {
    let task = RacTask::new(dec.len())?;
    crate::rac::check_sizes(&task, Some(enc), dec)?;
    let mut residual: f64 = 0.0;
    for (x, a) in enc.directions().iter().enumerate() {
        let proj = dec
            .directions()
            .iter()
            .enumerate()
            .map(|(k, b)| sign(task.bit(x, k)) * a.dot(&(s.t() * b.into_inner())));
        let (lo, hi) = proj.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
        residual = residual.max(hi - lo);
    }
    Ok(residual)
}

/// Worst case over orthogonal decoding pairs of the 2→1 optimum:
/// `½(1 + |T3|/√2)` with `|T3|` the smallest correlation magnitude.
pub fn orthogonal_min_2to1(s: &TwoQubitBloch) -> Result<f64> {
    s.require_diagonal()?;
    let smallest = s.correlations().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    Ok(0.5 * (1.0 + smallest * FRAC_1_SQRT_2))
}

/// Outcome of [`verify_orthogonal_min_2to1`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrthogonalCheck {
    pub closed_form: f64,
    pub numeric: f64,
    pub agrees: bool,
}

/// Orthonormal decoding pair from the `(α, β)` angles of `B̂±` in the frame of
/// Bob's principal axes `r` (largest |T| first), plus a rotation `γ` within
/// `span{B̂+, B̂−}`.
pub fn orthogonal_pair(r: &[Vector3<f64>; 3], alpha: f64, beta: f64, gamma: f64) -> [Vector3<f64>; 2] {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let plus = r[0] * (sa * cb) + r[1] * (sa * sb) + r[2] * ca;
    let minus = -r[0] * (ca * cb) - r[1] * (ca * sb) + r[2] * sa;
    let (sg, cg) = gamma.sin_cos();
    let p = plus * cg + minus * sg;
    let m = -plus * sg + minus * cg;
    [(p + m) * FRAC_1_SQRT_2, (p - m) * FRAC_1_SQRT_2]
}

/// Principal axes of `T` ordered by decreasing |T_i| (stable).
pub(crate) fn principal_axes(t: &Vector3<f64>) -> [Vector3<f64>; 3] {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| t[j].abs().total_cmp(&t[i].abs()));
    order.map(|i| {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        e
    })
}

/// `min_x 1/‖T⁻¹[(-1)^{x0}B̂0 + (-1)^{x1}B̂1]‖` for an orthonormal pair, with
/// an infinite norm (term 0) when the bracket has weight on a zero axis.
fn orthogonal_pair_term(t: &Vector3<f64>, pair: &[Vector3<f64>; 2]) -> f64 {
    let mut worst = f64::INFINITY;
    for s1 in [1.0, -1.0] {
        let v = pair[0] + pair[1] * s1;
        let mut norm2 = 0.0;
        for i in 0..3 {
            if t[i].abs() <= SINGULAR_TOL {
                if v[i].abs() > 1e-12 {
                    return 0.0;
                }
            } else {
                norm2 += (v[i] / t[i]).powi(2);
            }
        }
        worst = worst.min(1.0 / norm2.sqrt());
    }
    worst
}

/// Numerically minimizes the orthogonal-decoding 2→1 value over the
/// `(α, β, γ)` parameterization and compares it with [`orthogonal_min_2to1`]
/// at tolerance 1e-6.
pub fn verify_orthogonal_min_2to1(s: &TwoQubitBloch, grid: usize) -> Result<OrthogonalCheck> {
    let closed_form = orthogonal_min_2to1(s)?;
    if grid < 4 {
        return Err(Error::InvalidConfig("grid must be at least 4".into()));
    }
    let t = diag(s);
    let r = principal_axes(&t);
    let objective = |p: [f64; 3]| 0.5 * (1.0 + orthogonal_pair_term(&t, &orthogonal_pair(&r, p[0], p[1], p[2])));

    let mut best = ([0.0; 3], f64::INFINITY);
    for i in 0..=grid {
        let alpha = PI * i as f64 / grid as f64;
        for j in 0..2 * grid {
            let beta = PI * j as f64 / grid as f64;
            for l in 0..grid {
                let gamma = PI * l as f64 / grid as f64;
                let v = objective([alpha, beta, gamma]);
                if v < best.1 {
                    best = ([alpha, beta, gamma], v);
                }
            }
        }
    }
    let numeric = oracle::pattern_search_min(objective, best.0, PI / grid as f64, 400, 0.7, 1e-12).1;
    Ok(OrthogonalCheck {
        closed_form,
        numeric,
        agrees: (numeric - closed_form).abs() <= 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_bloch::BellDiagonal;
    use crate::rac::evaluate;
    use std::f64::consts::SQRT_2;

    fn bd(t: [f64; 3]) -> TwoQubitBloch {
        BellDiagonal::new(t[0], t[1], t[2]).unwrap().to_bloch()
    }

    fn dec(v: &[[f64; 3]]) -> DecodingSet {
        DecodingSet::new(v.iter().map(|a| UnitVector3::from_array(*a).unwrap()).collect())
    }

    #[test]
    fn example_state_with_xy_decodings() {
        let s = bd([0.5, 0.5, 0.0]);
        let d = DecodingSet::principal_axes(2);
        let r = pmax_2to1(&s, &d).unwrap();
        let want = 0.5 * (1.0 + 1.0 / (2.0 * SQRT_2));
        assert!((r.p_max - want).abs() < 1e-15);
        assert!(r.degenerate);
        assert!((equalized_bound_2to1(&s, &d).unwrap() - want).abs() < 1e-15);
        let report = evaluate(&RacTask::new(2).unwrap(), &s, &r.encodings, &d).unwrap();
        assert!((report.p_min() - want).abs() < 1e-15);
    }

    #[test]
    fn example_state_with_yz_decodings_has_no_advantage() {
        let s = bd([0.5, 0.5, 0.0]);
        let d = dec(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(pmax_2to1(&s, &d).unwrap().p_max, 0.5);
        assert_eq!(equalized_bound_2to1(&s, &d).unwrap(), 0.5);
    }

    #[test]
    fn bell_state_values() {
        let s = bd([1.0, -1.0, 1.0]);
        let r2 = pmax_2to1(&s, &DecodingSet::principal_axes(2)).unwrap();
        assert!((r2.p_max - 0.5 * (1.0 + FRAC_1_SQRT_2)).abs() < 1e-15);
        let r3 = pmax_3to1(&s, &DecodingSet::principal_axes(3)).unwrap();
        assert!((r3.p_max - 0.5 * (1.0 + 1.0 / 3f64.sqrt())).abs() < 1e-15);
        assert!(!r3.degenerate);
    }

    #[test]
    fn coplanar_and_parallel_decodings() {
        let s = bd([1.0, -1.0, 1.0]);
        let d = dec(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        assert!(matches!(pmax_3to1(&s, &d), Err(Error::CoplanarDecodings(_))));
        let d = dec(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert_eq!(pmax_2to1(&s, &d), Err(Error::DegenerateDecodings));
    }

    #[test]
    fn singular_three_to_one() {
        let s = bd([0.5, 0.5, 0.0]);
        let d = DecodingSet::principal_axes(3);
        let r = pmax_3to1(&s, &d).unwrap();
        assert_eq!(r.p_max, 0.5);
        assert!(r.degenerate);
        let report = evaluate(&RacTask::new(3).unwrap(), &s, &r.encodings, &d).unwrap();
        assert_eq!(report.p_min(), 0.5);
    }

    #[test]
    fn singular_two_to_one_off_axis_beats_equalized_bound() {
        // Bracket always has weight on ẑ, but u_0, u_1 still avoid the origin.
        let s = bd([0.5, 0.5, 0.0]);
        let d = dec(&[[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]);
        let exact = pmax_2to1(&s, &d).unwrap();
        // u0 = (½,0,0), u1 = (0,½/√2,0): distance ½·(½/√2)/√(¼ + ⅛) = 1/(2√3).
        let want = 0.5 * (1.0 + 1.0 / (2.0 * 3f64.sqrt()));
        assert!((exact.p_max - want).abs() < 1e-15);
        assert_eq!(equalized_bound_2to1(&s, &d).unwrap(), 0.5);
    }

    #[test]
    fn residual_examples() {
        let s = bd([1.0, -1.0, 1.0 - 1e-9]);
        let d = DecodingSet::principal_axes(3);
        let enc = EncodingSet::new(vec![UnitVector3::z(); 8]);
        let r = equal_projection_residual(&s, &enc, &d).unwrap();
        assert!((r - 1.0).abs() < 1e-8);
        let opt = pmax_3to1(&s, &d).unwrap();
        assert!(equal_projection_residual(&s, &opt.encodings, &d).unwrap() <= 1e-9);
    }

    #[test]
    fn orthogonal_min_examples() {
        let cases = [
            ([1.0, -1.0, 1.0], 0.5 * (1.0 + FRAC_1_SQRT_2)),
            ([0.5, 0.5, 0.0], 0.5),
            ([0.9, 0.8, 0.3], 0.5 * (1.0 + 0.3 / SQRT_2)),
        ];
        for (t, want) in cases {
            let s = TwoQubitBloch::diagonal(Vector3::zeros(), Vector3::zeros(), t);
            assert!((orthogonal_min_2to1(&s).unwrap() - want).abs() < 1e-15);
            let check = verify_orthogonal_min_2to1(&s, 12).unwrap();
            assert!(check.agrees, "{t:?}: {check:?}");
        }
        assert!((0.5 * (1.0 + 0.3 / SQRT_2) - 0.606_066).abs() < 1e-6);
    }

    #[test]
    fn raw_frame_is_rejected() {
        let s = crate::pauli_bloch::TwoQubitBloch::new(Vector3::zeros(), Vector3::zeros(), nalgebra::Matrix3::identity());
        assert_eq!(pmax_2to1(&s, &DecodingSet::principal_axes(2)), Err(Error::FrameNotDiagonal));
    }
}
