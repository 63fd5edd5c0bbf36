//! Dense complex linear algebra on a bipartite qubit Hilbert space.
//!
//! World basis index `k` maps to the pair `(i, j)` of system and environment
//! indices through `k = i * d_e + j`. Every routine in the crate uses this
//! convention, so a state vector reshaped row-major into a `d_s x d_e` matrix
//! gives its coefficient matrix `psi[i][j]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

mod cmat;
mod ops;
mod pauli;
mod polar;
mod random;
mod spectral;

pub use cmat::{format_cmat, parse_cmat, read_cmat, read_state, write_cmat, write_state, CMAT_HEADER};
pub use ops::{
    kron, kron_state, linear_entropy, partial_trace, purity, reduced_environment,
    reduced_system, schmidt_decompose, Keep, SchmidtDecomposition,
};
pub use pauli::{interaction_weight, pauli_decompose, slot_counts, InteractionWeight, Pauli, PauliDecomposition};
pub(crate) use ops::linear_entropy_raw;
pub use polar::closest_unitary;
pub use random::{
    haar_random_unitary, haar_state, haar_unitary, random_hermitian,
    rng_from_seed, split_seed, standard_complex_gaussian, SeededRng,
};
pub use spectral::{eig_hermitian, SpectralDecomposition};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[cfg(test)]
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Qubit counts of the system and environment factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteDims {
    n_s: u32,
    n_e: u32,
}

impl BipartiteDims {
    pub fn new(n_s: u32, n_e: u32) -> Result<Self> {
        if n_s == 0 || n_e == 0 {
            return Err(Error::Config(format!(
                "system and environment need at least one qubit each (got n_s={n_s}, n_e={n_e})"
            )));
        }
        let max = Tolerances::DEFAULT.max_dim;
        let n_w = n_s + n_e;
        if n_w >= usize::BITS - 1 || (1usize << n_w) > max {
            return Err(Error::SizeLimit {
                dim: 1usize.checked_shl(n_w).unwrap_or(usize::MAX),
                max,
            });
        }
        Ok(Self { n_s, n_e })
    }

    /// Splits a world dimension, keeping `n_s` qubits in the system.
    pub fn from_world(d_w: usize, n_s: u32) -> Result<Self> {
        if !d_w.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(d_w));
        }
        let n_w = d_w.trailing_zeros();
        if n_s >= n_w {
            return Err(Error::Config(format!(
                "n_s={n_s} leaves no environment in a {d_w}-dimensional world"
            )));
        }
        Self::new(n_s, n_w - n_s)
    }

    pub fn n_s(&self) -> u32 {
        self.n_s
    }

    pub fn n_e(&self) -> u32 {
        self.n_e
    }

    pub fn n_w(&self) -> u32 {
        self.n_s + self.n_e
    }

    pub fn d_s(&self) -> usize {
        1 << self.n_s
    }

    pub fn d_e(&self) -> usize {
        1 << self.n_e
    }

    pub fn d_w(&self) -> usize {
        1 << (self.n_s + self.n_e)
    }

    #[inline]
    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.d_e(), k % self.d_e())
    }

    #[inline]
    pub fn join(&self, i: usize, j: usize) -> usize {
        i * self.d_e() + j
    }

    pub(crate) fn check_world(&self, dim: usize) -> Result<()> {
        if dim != self.d_w() {
            return Err(Error::dims(self.d_w(), dim));
        }
        Ok(())
    }
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || (norm - 1.0).abs() > Tolerances::DEFAULT.norm {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(amplitudes.unscale(norm)))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = CVector::zeros(dim);
        v[k] = ONE;
        Self(v)
    }

    /// Unit-norm vector produced by a norm-preserving operation; renormalizes
    /// away floating-point drift.
    pub(crate) fn from_unitary_image(v: CVector) -> Self {
        let norm = v.norm();
        Self(v.unscale(norm))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn with_phase(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self(self.0.map(|z| z * phase))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix(&self.0 * self.0.adjoint())
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        if !entries.is_square() {
            return Err(Error::InvalidDensity(format!(
                "{}x{} is not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dev = hermitian_deviation(&entries);
        if dev > tol.hermitian {
            return Err(Error::NotHermitian(dev));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let herm = symmetrize(&entries);
        let min = herm.clone().symmetric_eigenvalues().min();
        if min < tol.psd {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(herm))
    }

    pub(crate) fn from_raw(entries: CMatrix) -> Self {
        Self(entries)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// A Hermitian operator, usually a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Validates Hermiticity to the eigensolver input tolerance and stores the
    /// exactly symmetrized matrix.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::dims(entries.nrows(), entries.ncols()));
        }
        let dev = hermitian_deviation(&entries);
        if dev > Tolerances::DEFAULT.hermitian_input || !dev.is_finite() {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(symmetrize(&entries)))
    }

    /// Symmetrizes a matrix that is Hermitian by construction.
    pub(crate) fn from_raw(entries: CMatrix) -> Self {
        Self(symmetrize(&entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `U H U^dag`.
    pub fn conjugate_by(&self, u: &UnitaryMatrix) -> Hermitian {
        Hermitian::from_raw(u.matrix() * &self.0 * u.matrix().adjoint())
    }

    pub fn scale(&self, c: f64) -> Hermitian {
        Hermitian(self.0.scale(c))
    }

    pub fn add(&self, other: &Hermitian) -> Result<Hermitian> {
        if self.dim() != other.dim() {
            return Err(Error::dims(self.dim(), other.dim()));
        }
        Ok(Hermitian(&self.0 + &other.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A unitary matrix `U^dag U = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::dims(entries.nrows(), entries.ncols()));
        }
        let dev = unitarity_deviation(&entries);
        if dev > Tolerances::DEFAULT.unitary || !dev.is_finite() {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(entries))
    }

    pub(crate) fn from_raw(entries: CMatrix) -> Self {
        Self(entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self(self.0.adjoint())
    }

    /// `self * other`.
    pub fn compose(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        Self(&self.0 * &other.0)
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        assert_eq!(self.dim(), psi.dim(), "unitary/state dimension mismatch");
        StateVector::from_unitary_image(&self.0 * psi.amplitudes())
    }

    /// Frobenius norm of `U^dag U - I`.
    pub fn deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }

    pub fn kron(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        Ok(Self(kron(&self.0, &other.0)?))
    }
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

pub(crate) fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMatrix::identity(n, n)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_index_convention() {
        let dims = BipartiteDims::new(1, 2).unwrap();
        assert_eq!((dims.d_s(), dims.d_e(), dims.d_w()), (2, 4, 8));
        for k in 0..8 {
            let (i, j) = dims.split(k);
            assert_eq!(dims.join(i, j), k);
            assert_eq!(k, i * 4 + j);
        }
    }

    #[test]
    fn dims_reject_empty_factor_and_oversize() {
        assert!(BipartiteDims::new(0, 2).is_err());
        assert!(BipartiteDims::new(2, 0).is_err());
        assert!(matches!(
            BipartiteDims::new(6, 7),
            Err(Error::SizeLimit { dim: 8192, .. })
        ));
        assert!(BipartiteDims::new(6, 6).is_ok());
    }

    #[test]
    fn state_requires_unit_norm() {
        let v = CVector::from_vec(vec![ONE, ONE]);
        assert!(matches!(StateVector::new(v.clone()), Err(Error::NotNormalized(_))));
        let s = StateVector::normalized(v).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::normalized(CVector::zeros(3)).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        let bad = CMatrix::from_row_slice(2, 2, &[
            C64::new(1.5, 0.0), ZERO,
            ZERO, C64::new(-0.5, 0.0),
        ]);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::InvalidDensity(_))));
        assert!(DensityMatrix::new(DensityMatrix::maximally_mixed(4).into_inner()).is_ok());
    }

    #[test]
    fn unitary_validation() {
        assert!(UnitaryMatrix::new(CMatrix::identity(3, 3).scale(2.0)).is_err());
        assert!(UnitaryMatrix::new(CMatrix::identity(3, 3)).is_ok());
    }

    #[test]
    fn hermitian_validation() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(Hermitian::new(m), Err(Error::NotHermitian(_))));
    }
}
