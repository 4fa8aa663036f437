//! Two-qubit states in the Pauli (Bloch) basis.
//!
//! A state is written as
//! `ρ = ¼[I⊗I + M·σ⊗I + I⊗N·σ + Σ_ij T_ij σ_i⊗σ_j]`, with `M` and `N` the
//! local Bloch vectors of Alice and Bob and `T` the correlation tensor.
//! Most of the optimization code wants `T` diagonal; [`canonicalize`] brings a
//! state there with a pair of local rotations and remembers them so
//! measurement directions can be moved between frames.

use std::ops::Deref;

use nalgebra::{Complex, Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance for Hermiticity, trace and positivity of a density matrix.
pub const STATE_TOL: f64 = 1e-9;
/// Maximum norm deviation of a [`UnitVector3`].
pub const UNIT_TOL: f64 = 1e-12;

/// `(-1)^bit`
#[inline]
pub(crate) fn sign(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A measurement direction on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct UnitVector3(Vector3<f64>);

impl UnitVector3 {
    /// Normalizes `v`. Fails on zero or non-finite input.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v / norm))
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(Vector3::from(v))
    }

    pub fn x() -> Self {
        Self(Vector3::x())
    }

    pub fn y() -> Self {
        Self(Vector3::y())
    }

    pub fn z() -> Self {
        Self(Vector3::z())
    }

    /// Unit vector from polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self(Vector3::new(st * cp, st * sp, ct))
    }

    pub fn into_inner(self) -> Vector3<f64> {
        self.0
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn flipped(self) -> Self {
        Self(-self.0)
    }
}

impl Deref for UnitVector3 {
    type Target = Vector3<f64>;

    fn deref(&self) -> &Vector3<f64> {
        &self.0
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(v: UnitVector3) -> Self {
        v.to_array()
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::from_array(v)
    }
}

fn pauli(i: usize) -> Matrix2<C64> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    match i {
        0 => Matrix2::new(one, z, z, one),
        1 => Matrix2::new(z, one, one, z),
        2 => Matrix2::new(z, -im, im, z),
        3 => Matrix2::new(one, z, z, -one),
        _ => unreachable!("Pauli index out of range"),
    }
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `σ_i ⊗ σ_j` with index 0 meaning the identity and 1..=3 meaning x, y, z.
fn pauli_product(i: usize, j: usize) -> Matrix4<C64> {
    kron(&pauli(i), &pauli(j))
}

fn hermitian_eigenvalues(m: &Matrix4<C64>) -> [f64; 4] {
    let eig = SymmetricEigen::new(*m);
    let mut vals = [
        eig.eigenvalues[0],
        eig.eigenvalues[1],
        eig.eigenvalues[2],
        eig.eigenvalues[3],
    ];
    vals.sort_by(f64::total_cmp);
    vals
}

/// A validated 4×4 density matrix in the basis |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix4(Matrix4<C64>);

impl DensityMatrix4 {
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let mut herm_dev: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                herm_dev = herm_dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        if !herm_dev.is_finite() || herm_dev > STATE_TOL {
            return Err(Error::NotAState(format!(
                "not Hermitian (deviation {herm_dev:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::NotAState(format!("trace is {tr}, expected 1")));
        }
        // Symmetrize before the eigensolver so tiny anti-Hermitian noise is ignored.
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = hermitian_eigenvalues(&herm)[0];
        if min_eig < -STATE_TOL {
            return Err(Error::NotAState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Rows of `[re, im]` pairs, as in the state JSON schema.
    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(Error::Parse("density matrix must be 4x4".into()));
        }
        Self::new(Matrix4::from_fn(|r, c| {
            C64::new(rows[r][c][0], rows[r][c][1])
        }))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude vector.
    pub fn from_pure(amplitudes: [C64; 4]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm2 < 1e-300 {
            return Err(Error::ZeroVector);
        }
        let m = Matrix4::from_fn(|r, c| amplitudes[r] * amplitudes[c].conj() / norm2);
        Self::new(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&((self.0 + self.0.adjoint()) * C64::new(0.5, 0.0)))
    }

    /// Partial transpose on Bob's qubit.
    pub fn partial_transpose(&self) -> Matrix4<C64> {
        Matrix4::from_fn(|r, c| {
            let (a, b) = (r / 2, r % 2);
            let (a2, b2) = (c / 2, c % 2);
            self.0[(2 * a + b2, 2 * a2 + b)]
        })
    }

    /// Peres–Horodecki test; for two qubits PPT is equivalent to separability.
    pub fn is_ppt(&self) -> bool {
        let pt = self.partial_transpose();
        hermitian_eigenvalues(&((pt + pt.adjoint()) * C64::new(0.5, 0.0)))[0] >= -STATE_TOL
    }

    pub fn rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..4)
            .map(|r| (0..4).map(|c| [self.0[(r, c)].re, self.0[(r, c)].im]).collect())
            .collect()
    }
}

/// Which local frame a [`TwoQubitBloch`] is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Raw,
    /// `T` is diagonal.
    Diagonal,
}

/// Bloch representation of a two-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitBloch {
    m: Vector3<f64>,
    n: Vector3<f64>,
    t: Matrix3<f64>,
    frame: Frame,
}

impl TwoQubitBloch {
    /// Raw-frame state. Positivity is not checked here; see [`Self::validate`].
    pub fn new(m: Vector3<f64>, n: Vector3<f64>, t: Matrix3<f64>) -> Self {
        Self {
            m,
            n,
            t,
            frame: Frame::Raw,
        }
    }

    /// State whose correlation tensor is `diag(t)`.
    pub fn diagonal(m: Vector3<f64>, n: Vector3<f64>, t: [f64; 3]) -> Self {
        Self {
            m,
            n,
            t: Matrix3::from_diagonal(&Vector3::from(t)),
            frame: Frame::Diagonal,
        }
    }

    pub fn m(&self) -> &Vector3<f64> {
        &self.m
    }

    pub fn n(&self) -> &Vector3<f64> {
        &self.n
    }

    pub fn t(&self) -> &Matrix3<f64> {
        &self.t
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Diagonal of `T`; only meaningful in the diagonal frame.
    pub fn correlations(&self) -> [f64; 3] {
        [self.t[(0, 0)], self.t[(1, 1)], self.t[(2, 2)]]
    }

    pub fn require_diagonal(&self) -> Result<()> {
        match self.frame {
            Frame::Diagonal => Ok(()),
            Frame::Raw => Err(Error::FrameNotDiagonal),
        }
    }

    /// Same correlations with different local Bloch vectors.
    pub fn with_local(&self, m: Vector3<f64>, n: Vector3<f64>) -> Self {
        Self { m, n, ..self.clone() }
    }

    /// Correlation tensor scaled by `factor`, local vectors untouched.
    pub fn scaled_correlations(&self, factor: f64) -> Self {
        Self {
            t: self.t * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        density_from_bloch(self).map(|_| ())
    }

    pub fn is_valid_state(&self) -> bool {
        self.validate().is_ok()
    }
}

/// Bell-diagonal state `¼[I⊗I + Σ T_i σ_i⊗σ_i]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct BellDiagonal {
    t: [f64; 3],
}

impl BellDiagonal {
    /// Fails when `(t1, t2, t3)` lies outside the positivity tetrahedron.
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        let bd = Self { t: [t1, t2, t3] };
        let w = bd.weights();
        if w.iter().any(|x| !x.is_finite() || *x < -STATE_TOL) {
            return Err(Error::NotAState(format!(
                "({t1}, {t2}, {t3}) is outside the Bell-diagonal tetrahedron"
            )));
        }
        Ok(bd)
    }

    pub fn t(&self) -> [f64; 3] {
        self.t
    }

    /// Eigenvalues of the state: the weights of the four Bell states.
    pub fn weights(&self) -> [f64; 4] {
        let [t1, t2, t3] = self.t;
        [
            0.25 * (1.0 - t1 - t2 - t3),
            0.25 * (1.0 - t1 + t2 + t3),
            0.25 * (1.0 + t1 - t2 + t3),
            0.25 * (1.0 + t1 + t2 - t3),
        ]
    }

    pub fn is_ordered(&self) -> bool {
        let [t1, t2, t3] = self.t.map(f64::abs);
        t1 >= t2 && t2 >= t3
    }

    /// Entries reordered by decreasing magnitude (stable for ties).
    pub fn ordered(&self) -> Self {
        let mut t = self.t;
        t.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Self { t }
    }

    pub fn to_bloch(&self) -> TwoQubitBloch {
        TwoQubitBloch::diagonal(Vector3::zeros(), Vector3::zeros(), self.t)
    }

    /// Recognizes a diagonal-frame state with vanishing local vectors.
    pub fn from_bloch(s: &TwoQubitBloch, tol: f64) -> Option<Self> {
        let off = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .all(|(r, c)| s.t[(r, c)].abs() <= tol);
        if !off || s.m.norm() > tol || s.n.norm() > tol {
            return None;
        }
        let [t1, t2, t3] = [s.t[(0, 0)], s.t[(1, 1)], s.t[(2, 2)]];
        Self::new(t1, t2, t3).ok()
    }
}

impl From<BellDiagonal> for [f64; 3] {
    fn from(bd: BellDiagonal) -> Self {
        bd.t
    }
}

impl TryFrom<[f64; 3]> for BellDiagonal {
    type Error = Error;

    fn try_from(t: [f64; 3]) -> Result<Self> {
        Self::new(t[0], t[1], t[2])
    }
}

/// `M_i = Tr[ρ σ_i⊗I]`, `N_i = Tr[ρ I⊗σ_i]`, `T_ij = Tr[ρ σ_i⊗σ_j]`.
pub fn bloch_from_density(rho: &DensityMatrix4) -> TwoQubitBloch {
    let expect = |i: usize, j: usize| (rho.0 * pauli_product(i, j)).trace().re;
    let m = Vector3::from_fn(|i, _| expect(i + 1, 0));
    let n = Vector3::from_fn(|i, _| expect(0, i + 1));
    let t = Matrix3::from_fn(|i, j| expect(i + 1, j + 1));
    TwoQubitBloch::new(m, n, t)
}

/// Rebuilds the density matrix; fails if the result is not positive.
pub fn density_from_bloch(s: &TwoQubitBloch) -> Result<DensityMatrix4> {
    let mut rho = pauli_product(0, 0);
    for i in 0..3 {
        rho += pauli_product(i + 1, 0) * C64::new(s.m[i], 0.0);
        rho += pauli_product(0, i + 1) * C64::new(s.n[i], 0.0);
        for j in 0..3 {
            if s.t[(i, j)] != 0.0 {
                rho += pauli_product(i + 1, j + 1) * C64::new(s.t[(i, j)], 0.0);
            }
        }
    }
    DensityMatrix4::new(rho * C64::new(0.25, 0.0))
}

/// Local rotations taking the raw frame to the diagonal frame:
/// `T_raw = alice · D · bobᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationPair {
    pub alice: Matrix3<f64>,
    pub bob: Matrix3<f64>,
}

impl RotationPair {
    pub fn identity() -> Self {
        Self {
            alice: Matrix3::identity(),
            bob: Matrix3::identity(),
        }
    }

    pub fn alice_to_canonical(&self, v: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.alice.transpose() * v.0)
    }

    pub fn alice_from_canonical(&self, v: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.alice * v.0)
    }

    pub fn bob_to_canonical(&self, v: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.bob.transpose() * v.0)
    }

    pub fn bob_from_canonical(&self, v: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.bob * v.0)
    }
}

fn is_diagonal(t: &Matrix3<f64>) -> bool {
    (0..3).all(|r| (0..3).all(|c| r == c || t[(r, c)] == 0.0))
}

/// Brings `T` to signed diagonal form `D` with `|D1| >= |D2| >= |D3|`.
///
/// Both returned rotations are proper. When `T` has negative determinant the
/// leftover reflection is absorbed into the sign of `D3`. Equal magnitudes keep
/// their original axis order.
pub fn canonicalize(s: &TwoQubitBloch) -> (TwoQubitBloch, RotationPair) {
    let (u, d, v) = if is_diagonal(&s.t) {
        (
            Matrix3::identity(),
            Vector3::new(s.t[(0, 0)], s.t[(1, 1)], s.t[(2, 2)]),
            Matrix3::identity(),
        )
    } else {
        let svd = s.t.svd(true, true);
        let u = svd.u.expect("requested U");
        let v = svd.v_t.expect("requested V^T").transpose();
        (u, svd.singular_values, v)
    };

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| d[j].abs().total_cmp(&d[i].abs()));
    let mut oa = Matrix3::from_columns(&[u.column(order[0]), u.column(order[1]), u.column(order[2])]);
    let mut ob = Matrix3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);
    let mut diag = [d[order[0]], d[order[1]], d[order[2]]];

    let neg_a = oa.determinant() < 0.0;
    let neg_b = ob.determinant() < 0.0;
    if neg_a {
        oa.column_mut(2).neg_mut();
    }
    if neg_b {
        ob.column_mut(2).neg_mut();
    }
    if neg_a != neg_b {
        diag[2] = -diag[2];
    }

    let canon = TwoQubitBloch::diagonal(oa.transpose() * s.m, ob.transpose() * s.n, diag);
    (canon, RotationPair { alice: oa, bob: ob })
}

/// Probability that Alice gets outcome `a` along `a_dir` and Bob gets `b`
/// along `b_dir`.
pub fn joint_outcome_prob(
    s: &TwoQubitBloch,
    a_dir: &UnitVector3,
    b_dir: &UnitVector3,
    a: u8,
    b: u8,
) -> f64 {
    let corr = a_dir.dot(&(s.t * b_dir.0));
    0.25 * (1.0 + sign(a) * s.m.dot(a_dir) + sign(b) * s.n.dot(b_dir) + sign(a ^ b) * corr)
}

/// `P(A ⊕ B = xk) = ½(1 + (-1)^xk âᵀ T b̂)`; the local Bloch vectors drop out.
pub fn parity_prob(s: &TwoQubitBloch, a_dir: &UnitVector3, b_dir: &UnitVector3, xk: u8) -> f64 {
    0.5 * (1.0 + sign(xk) * a_dir.dot(&(s.t * b_dir.0)))
}
