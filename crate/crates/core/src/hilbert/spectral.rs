use nalgebra::SymmetricEigen;

use super::{CMatrix, CVector, Hermitian, StateVector, UnitaryMatrix, C64};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Eigenvalues (ascending) and the unitary whose columns are eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

pub fn eig_hermitian(h: &Hermitian) -> Result<SpectralDecomposition> {
    SpectralDecomposition::new(h)
}

impl SpectralDecomposition {
    pub fn new(h: &Hermitian) -> Result<Self> {
        let m = h.matrix();
        let dev = super::hermitian_deviation(m);
        if dev > Tolerances::DEFAULT.hermitian_input {
            return Err(Error::NotHermitian(dev));
        }
        let n = m.nrows();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        // stable sort keeps the solver's order inside exact ties
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        let scale = eigenvalues
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs()))
            .max(1.0);
        reorthonormalize_clusters(&eigenvalues, &mut eigenvectors, 1e-10 * scale);
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Builds a decomposition from explicit parts, e.g. a diagonal operator
    /// with a known eigenbasis.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: UnitaryMatrix) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.dim() {
            return Err(Error::dims(eigenvectors.dim(), eigenvalues.len()));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Precondition("eigenvalues must be ascending".into()));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors: eigenvectors.into_inner(),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        StateVector::from_unitary_image(self.eigenvectors.column(k).into_owned())
    }

    pub fn unitary(&self) -> UnitaryMatrix {
        UnitaryMatrix::from_raw(self.eigenvectors.clone())
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// `V diag(lambda) V^dag`.
    pub fn reconstruct(&self) -> Hermitian {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let mut col = scaled.column_mut(k);
            col *= C64::new(lam, 0.0);
        }
        Hermitian::from_raw(scaled * v.adjoint())
    }

    /// Coefficients `<v_k|psi>` in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &CVector) -> CVector {
        self.eigenvectors.ad_mul(psi)
    }

    pub fn from_eigenbasis(&self, coeffs: &CVector) -> CVector {
        &self.eigenvectors * coeffs
    }

    /// `V exp(-i lambda t) V^dag psi`.
    pub fn evolve(&self, psi0: &StateVector, t: f64) -> StateVector {
        assert_eq!(psi0.dim(), self.dim(), "state/operator dimension mismatch");
        let mut c = self.to_eigenbasis(psi0.amplitudes());
        for (z, &lam) in c.iter_mut().zip(&self.eigenvalues) {
            *z *= C64::from_polar(1.0, -lam * t);
        }
        StateVector::from_unitary_image(self.from_eigenbasis(&c))
    }

    /// The propagator `exp(-iHt)` as a dense matrix.
    pub fn propagator(&self, t: f64) -> UnitaryMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let mut col = scaled.column_mut(k);
            col *= C64::from_polar(1.0, -lam * t);
        }
        UnitaryMatrix::from_raw(scaled * v.adjoint())
    }
}

/// Modified Gram-Schmidt with largest-norm pivoting inside each cluster of
/// (numerically) degenerate eigenvalues.
fn reorthonormalize_clusters(values: &[f64], vectors: &mut CMatrix, tol: f64) {
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let mut cols: Vec<CVector> = (start..end)
                .map(|k| vectors.column(k).into_owned())
                .collect();
            let mut done: Vec<CVector> = Vec::with_capacity(cols.len());
            while !cols.is_empty() {
                let (p, _) = cols
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i, c.norm()))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                let mut v = cols.remove(p);
                let nrm = v.norm();
                v.unscale_mut(nrm);
                for c in cols.iter_mut() {
                    let proj = v.dotc(c);
                    c.axpy(-proj, &v, C64::new(1.0, 0.0));
                }
                done.push(v);
            }
            for (k, v) in (start..end).zip(done) {
                vectors.set_column(k, &v);
            }
        }
        start = end;
    }
}
