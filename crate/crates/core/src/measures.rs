//! Correlation measures of two-qubit states and quantum-advantage predicates.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli_bloch::{BellDiagonal, TwoQubitBloch};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasureSet {
    pub d_geom: f64,
    pub s2: f64,
    pub s3: f64,
    pub q3: f64,
    /// Worst case over orthogonal decodings of the optimal 2→1 success.
    pub p_orth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AdvantagePredicates {
    /// `T3 ≠ 0`, required for an advantage under every decoding.
    pub necessary_all_decodings: bool,
    /// Every orthogonal decoding pair beats the classical ½.
    pub all_orthogonal_2to1: bool,
    /// Some pair of principal axes beats ½.
    pub exists_decoding_2to1: bool,
}

/// Normalized geometric discord `√(2 D)`, with
/// `D = ¼(‖M‖² + ‖T‖²_F − λ_max(MMᵀ + TTᵀ))` the Hilbert–Schmidt distance to
/// the classical-quantum states. Bell states score 1.
pub fn geometric_discord(s: &TwoQubitBloch) -> Result<f64> {
    s.validate()?;
    let m = s.m();
    let t = s.t();
    let k = m * m.transpose() + t * t.transpose();
    let largest = SymmetricEigen::new(k).eigenvalues.max();
    let d = 0.25 * (m.norm_squared() + t.norm_squared() - largest);
    Ok((2.0 * d.max(0.0)).sqrt())
}

fn require_ordered(bd: &BellDiagonal) -> Result<()> {
    if bd.is_ordered() {
        Ok(())
    } else {
        Err(Error::NotOrdered(bd.t()))
    }
}

/// `(S2, S3) = (|T2|, |T3|)`.
pub fn superunsteerability(bd: &BellDiagonal) -> Result<(f64, f64)> {
    require_ordered(bd)?;
    let t = bd.t();
    Ok((t[1].abs(), t[2].abs()))
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// `Q3 = 1 − h((1 + |T3|)/2)`, evaluated as
/// `[(1+s) ln(1+s) + (1−s) ln(1−s)] / (2 ln 2)` to keep precision near `s = 0`.
pub fn q3(bd: &BellDiagonal) -> Result<f64> {
    require_ordered(bd)?;
    let s = bd.t()[2].abs();
    let term = |w: f64, l: f64| if w == 0.0 { 0.0 } else { w * l };
    Ok((term(1.0 + s, s.ln_1p()) + term(1.0 - s, (-s).ln_1p())) / (2.0 * std::f64::consts::LN_2))
}

fn p_orth(s3: f64) -> f64 {
    0.5 * (1.0 + s3 * FRAC_1_SQRT_2)
}

/// Ordering of the entries is irrelevant here.
pub fn advantage_predicates(bd: &BellDiagonal) -> AdvantagePredicates {
    let t = bd.ordered().t();
    let pair = |j: usize, k: usize| {
        let (a, b) = (t[j].abs(), t[k].abs());
        if a == 0.0 || b == 0.0 {
            0.5
        } else {
            0.5 * (1.0 + a * b / a.hypot(b))
        }
    };
    let best_pair = pair(0, 1).max(pair(0, 2)).max(pair(1, 2));
    AdvantagePredicates {
        necessary_all_decodings: t[2] != 0.0,
        all_orthogonal_2to1: p_orth(t[2].abs()) > 0.5,
        exists_decoding_2to1: best_pair > 0.5,
    }
}

/// All measures of a Bell-diagonal state (entries reordered first).
pub fn measure_set(bd: &BellDiagonal) -> MeasureSet {
    let ordered = bd.ordered();
    let (s2, s3) = superunsteerability(&ordered).expect("ordered");
    MeasureSet {
        d_geom: geometric_discord(&ordered.to_bloch()).expect("Bell-diagonal states are valid"),
        s2,
        s3,
        q3: q3(&ordered).expect("ordered"),
        p_orth: p_orth(s3),
    }
}
