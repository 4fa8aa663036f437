//! Random access codes (2→1 and 3→1) assisted by two-qubit states.
//!
//! The crate computes the optimal worst-case success probability for a given
//! set of decoding directions, checks it against a brute-force sphere search
//! and Monte Carlo sampling, solves the classical two-bit-assisted baselines
//! exactly, and evaluates the correlation measures that track the quantum
//! advantage.

pub mod classical;
pub mod cli;
pub mod error;
pub mod io;
pub mod lp;
pub mod measures;
pub mod optimal;
pub mod oracle;
pub mod pauli_bloch;
pub mod rac;

pub use error::{Error, Result};
pub use pauli_bloch::{
    bloch_from_density, canonicalize, density_from_bloch, joint_outcome_prob, parity_prob,
    BellDiagonal, DensityMatrix4, Frame, RotationPair, TwoQubitBloch, UnitVector3,
};
pub use rac::{DecodingSet, EncodingSet, RacReport, RacTask};
