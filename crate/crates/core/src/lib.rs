//! Search for tensor-product structures that admit pointer states.
//!
//! Given a finite-dimensional Hamiltonian `H` on `d_w = 2^(n_s + n_e)` levels,
//! the crate looks for a global unitary `B` (a change of system/environment
//! factorization) and an initial state `|psi>` such that the reduced system
//! state of `B e^{-iHt} |psi>` stays pure for all times. The modules are
//! layered bottom-up:
//!
//! - [`hilbert`]: dense complex linear algebra on bipartite spaces.
//! - [`hamiltonians`]: the model families and the analytic destination forms.
//! - [`cost`]: training schedules, the time-averaged linear-entropy cost and
//!   entropy trajectories.
//! - [`optimizer`]: the alternating environment-tensor / polar-projection
//!   optimizer over `B` and the state-preparation unitary `A`.
//! - [`analysis`]: the eigenbasis block-diagonal construction, pointer
//!   verification, perturbations and solution classification.
//! - [`harness`]: configuration, seeded sweeps, run records and exports.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod cost;
pub mod error;
pub mod hamiltonians;
pub mod harness;
pub mod hilbert;
pub mod optimizer;
pub mod tolerance;

pub use error::{Error, Result};
pub use hilbert::{
    BipartiteDims, CMatrix, CVector, DensityMatrix, Hermitian, SpectralDecomposition, StateVector,
    UnitaryMatrix, C64,
};
pub use tolerance::Tolerances;
