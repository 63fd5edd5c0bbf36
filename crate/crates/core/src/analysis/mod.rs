//! Pointer-state construction, verification and solution diagnostics.

mod classify;
mod perturb;

pub use classify::{classify, classify_result, ClassifierThresholds, EvalParams, Label, SolutionCategory};
pub use perturb::{perturbation_suite, PerturbationSuite, PERTURBATION_COLUMNS};

use serde::{Deserialize, Serialize};

use crate::cost::{entropy_trajectory, late_time_max_entropy};
use crate::error::{Error, Result};
use crate::hilbert::{
    kron, kron_state, linear_entropy_raw, reduced_system, schmidt_decompose, BipartiteDims, CMatrix,
    CVector, Hermitian, SpectralDecomposition, StateVector, UnitaryMatrix, C64,
};

/// Default entropy bound below which a state counts as a pointer state.
pub const POINTER_TOL: f64 = 1e-8;

/// A factorization `B` in which `B H B^dag = sum_i |chi_i><chi_i| ⊗ H_e^(i)`.
/// Pointer states are expressed in the destination frame.
#[derive(Debug, Clone)]
pub struct PointerSolution {
    pub b: UnitaryMatrix,
    pub pointer_states: Vec<StateVector>,
    pub env_blocks: Vec<Hermitian>,
}

impl PointerSolution {
    /// Solution for `H = sum_i W|i><i|W^dag ⊗ H_e^(i)`: `B = W^dag ⊗ 1`, pointer
    /// states `|i>`.
    pub fn from_blocks(dims: BipartiteDims, env_blocks: Vec<Hermitian>, pointer_basis: Option<&UnitaryMatrix>) -> Result<Self> {
        if env_blocks.len() != dims.d_s() {
            return Err(Error::dims(dims.d_s(), env_blocks.len()));
        }
        let w = pointer_basis.cloned().unwrap_or_else(|| UnitaryMatrix::identity(dims.d_s()));
        if w.dim() != dims.d_s() {
            return Err(Error::dims(dims.d_s(), w.dim()));
        }
        let b = w.adjoint().kron(&UnitaryMatrix::identity(dims.d_e()))?;
        Ok(Self {
            b,
            pointer_states: (0..dims.d_s()).map(|i| StateVector::basis(dims.d_s(), i)).collect(),
            env_blocks,
        })
    }

    /// `sum_i |chi_i><chi_i| ⊗ H_e^(i)`.
    pub fn destination_hamiltonian(&self) -> Result<Hermitian> {
        let d_e = self.env_blocks.first().map_or(1, |b| b.dim());
        let d_w = self.pointer_states.len() * d_e;
        let mut m = CMatrix::zeros(d_w, d_w);
        for (chi, block) in self.pointer_states.iter().zip(&self.env_blocks) {
            m += kron(chi.projector().matrix(), block.matrix())?;
        }
        Hermitian::new(m)
    }

    /// The fiducial-frame world state `B^dag (|chi_i> ⊗ |env>)`.
    pub fn world_state(&self, i: usize, env: &StateVector) -> Result<StateVector> {
        let dest = kron_state(&self.pointer_states[i], env)?;
        Ok(self.b.adjoint().apply(&dest))
    }
}

/// Diagonalizes `H = W D W^dag` and regroups `D` by `k = i d_e + j` into
/// diagonal environment blocks. Always succeeds.
pub fn block_diagonal_tps(h: &Hermitian, dims: BipartiteDims) -> Result<PointerSolution> {
    let spec = SpectralDecomposition::new(h)?;
    block_diagonal_from_spectrum(&spec, dims)
}

pub fn block_diagonal_from_spectrum(spec: &SpectralDecomposition, dims: BipartiteDims) -> Result<PointerSolution> {
    dims.check_world(spec.dim())?;
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    let lam = spec.eigenvalues();
    let env_blocks = (0..d_s)
        .map(|i| Hermitian::from_real_diagonal(&lam[i * d_e..(i + 1) * d_e]))
        .collect();
    Ok(PointerSolution {
        b: spec.unitary().adjoint(),
        pointer_states: (0..d_s).map(|i| StateVector::basis(d_s, i)).collect(),
        env_blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerCheck {
    pub max_entropy: f64,
    pub is_pointer: bool,
}

/// Late-time worst-case entropy of `psi_w` in frame `B`.
pub fn verify_pointer(
    spec: &SpectralDecomposition,
    b: &UnitaryMatrix,
    psi_w: &StateVector,
    dims: BipartiteDims,
    eval: EvalParams,
    tol: f64,
) -> Result<PointerCheck> {
    let max_entropy = late_time_max_entropy(psi_w, b, spec, dims, eval.t_late, eval.grid_points)?;
    Ok(PointerCheck {
        max_entropy,
        is_pointer: max_entropy < tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenWeight {
    pub weight: f64,
    /// Linear entropy of `B v_i`.
    pub entropy: f64,
}

/// `|<v_i|psi>|^2` and the entropy of each eigenvector in frame `B`.
pub fn eigen_support(
    psi_w: &StateVector,
    spec: &SpectralDecomposition,
    b: &UnitaryMatrix,
    dims: BipartiteDims,
) -> Result<Vec<EigenWeight>> {
    dims.check_world(psi_w.dim())?;
    dims.check_world(b.dim())?;
    let coeffs = spec.to_eigenbasis(psi_w.amplitudes());
    let framed = b.matrix() * spec.eigenvectors();
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| EigenWeight {
            weight: c.norm_sqr(),
            entropy: linear_entropy_raw(framed.column(k).as_slice(), dims).max(0.0),
        })
        .collect())
}

/// Frobenius norm of the off-diagonal part of `rho_s(t)` in the pointer basis,
/// for a destination-frame product state `psi0_dest`.
pub fn decoherence_check(
    solution: &PointerSolution,
    spec: &SpectralDecomposition,
    psi0_dest: &StateVector,
    dims: BipartiteDims,
    times: &[f64],
) -> Result<Vec<f64>> {
    let schmidt = schmidt_decompose(psi0_dest, dims)?;
    let gap = 1.0 - schmidt.coefficients[0].powi(2);
    if gap > 1e-10 {
        return Err(Error::Precondition(format!(
            "initial state is not a product state (Schmidt gap {gap:.3e})"
        )));
    }
    let psi_w = solution.b.adjoint().apply(psi0_dest);
    let d_s = dims.d_s();
    let mut basis = CMatrix::zeros(d_s, d_s);
    for (i, chi) in solution.pointer_states.iter().enumerate() {
        basis.set_column(i, chi.amplitudes());
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let framed = solution.b.apply(&spec.evolve(&psi_w, t));
        let rho = reduced_system(&framed, dims)?;
        let in_pointer = basis.adjoint() * rho.matrix() * &basis;
        let mut off = 0.0;
        for i in 0..d_s {
            for j in 0..d_s {
                if i != j {
                    off += in_pointer[(i, j)].norm_sqr();
                }
            }
        }
        out.push(off.sqrt());
    }
    Ok(out)
}

/// Factors `H ≈ H_s ⊗ H_e` by the rank-one truncation of the rearranged
/// matrix. Returns the Hermitian factors and the relative residual.
pub fn kronecker_factors(h: &Hermitian, dims: BipartiteDims) -> Result<(Hermitian, Hermitian, f64)> {
    dims.check_world(h.dim())?;
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    let m = h.matrix();
    // row (i, i') holds the d_e x d_e block H[i*, i'*] flattened
    let mut r = CMatrix::zeros(d_s * d_s, d_e * d_e);
    for i in 0..d_s {
        for ip in 0..d_s {
            for j in 0..d_e {
                for jp in 0..d_e {
                    r[(i * d_s + ip, j * d_e + jp)] = m[(i * d_e + j, ip * d_e + jp)];
                }
            }
        }
    }
    let svd = r.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^dag");
    let (k, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (k, &s)| if s > best.1 { (k, s) } else { best });
    let mut a = CMatrix::from_fn(d_s, d_s, |i, ip| u[(i * d_s + ip, k)]);
    let mut b = CMatrix::from_fn(d_e, d_e, |j, jp| v_t[(k, j * d_e + jp)]).scale(sigma);
    // choose the phase that makes the system factor Hermitian
    let mut z = C64::new(0.0, 0.0);
    for i in 0..d_s {
        for ip in 0..d_s {
            z += a[(i, ip)] * a[(ip, i)];
        }
    }
    if z.norm() > 0.0 {
        let phase = (z / z.norm()).sqrt();
        a = a.map(|x| x / phase);
        b = b.map(|x| x * phase);
    }
    let residual = (kron(&a, &b)? - m).norm() / m.norm().max(f64::MIN_POSITIVE);
    Ok((Hermitian::from_raw(a), Hermitian::from_raw(b), residual))
}

/// Entropy trajectory helper in the frame of a pointer solution.
pub fn pointer_trajectory(
    solution: &PointerSolution,
    spec: &SpectralDecomposition,
    i: usize,
    env: &StateVector,
    dims: BipartiteDims,
    times: &[f64],
) -> Result<Vec<f64>> {
    let psi = solution.world_state(i, env)?;
    entropy_trajectory(&psi, &solution.b, spec, times, dims)
}

/// Orthonormal completion: a unit vector orthogonal to `v`.
pub(crate) fn orthogonal_state(v: &StateVector) -> StateVector {
    let n = v.dim();
    assert!(n >= 2, "no orthogonal state in dimension 1");
    // project the basis vector least aligned with v
    let k = (0..n)
        .min_by(|&a, &b| v.amplitudes()[a].norm().total_cmp(&v.amplitudes()[b].norm()))
        .unwrap_or(0);
    let mut e = CVector::zeros(n);
    e[k] = C64::new(1.0, 0.0);
    let proj = v.amplitudes().dotc(&e);
    let w = e - v.amplitudes() * proj;
    StateVector::normalized(w).expect("basis vector has a component outside a 1-d span")
}
