//! Numerical tolerances shared by validation, tests and the optimizer.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed deviation of a state norm from 1.
    pub norm: f64,
    /// Entrywise Hermiticity tolerance for density matrices and constructor outputs.
    pub hermitian: f64,
    /// Hermiticity tolerance accepted on input to the eigensolver.
    pub hermitian_input: f64,
    /// Frobenius tolerance on `U^dag U - I`.
    pub unitary: f64,
    /// Allowed trace deviation for density matrices.
    pub trace: f64,
    /// Most negative eigenvalue still accepted in a density matrix.
    pub psd: f64,
    /// Singular values at or below this make a matrix rank deficient.
    pub singular: f64,
    /// Largest world dimension any constructor will build.
    pub max_dim: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        norm: 1e-12,
        hermitian: 1e-12,
        hermitian_input: 1e-10,
        unitary: 1e-10,
        trace: 1e-12,
        psd: -1e-10,
        singular: 1e-14,
        max_dim: 4096,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
