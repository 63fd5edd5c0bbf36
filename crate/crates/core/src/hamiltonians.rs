//! Model Hamiltonians and the analytic destination forms.
//!
//! Constructors never rescale spectra; the decoherence time absorbs scale
//! differences between families.

use nalgebra::QR;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    haar_unitary, kron, linear_entropy_raw, random_hermitian, rng_from_seed, split_seed,
    BipartiteDims, CMatrix, Hermitian, Pauli, SeededRng, SpectralDecomposition, UnitaryMatrix, C64,
};
use crate::tolerance::Tolerances;

/// `P_1 ⊗ ... ⊗ P_n` with identities on unlisted qubits.
pub fn pauli_string(n_qubits: u32, factors: &[(usize, Pauli)]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for q in 0..n_qubits as usize {
        let p = factors
            .iter()
            .rev()
            .find(|(idx, _)| *idx == q)
            .map_or(Pauli::I, |(_, p)| *p);
        out = out.kronecker(&p.matrix());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralSpinPreset {
    /// Every system axis is Z, so the system field commutes with the coupling.
    Commuting,
    /// System axes cycle X, Y, Z; environment axes cycle Z, X, Y.
    #[default]
    NonCommuting,
}

impl CentralSpinPreset {
    pub fn axes(self, n_e: usize) -> Result<(Vec<Pauli>, Vec<Pauli>)> {
        match self {
            Self::Commuting => Ok((vec![Pauli::Z; n_e], vec![Pauli::X; n_e])),
            Self::NonCommuting => {
                if n_e > 3 {
                    return Err(Error::Config(format!(
                        "non-commuting preset needs distinct system axes, at most 3 couplings (n_e = {n_e})"
                    )));
                }
                let p = [Pauli::X, Pauli::Y, Pauli::Z];
                let q = [Pauli::Z, Pauli::X, Pauli::Y];
                Ok((p[..n_e].to_vec(), q[..n_e].to_vec()))
            }
        }
    }
}

/// `alpha Z_s + alpha sum_i Z_{e_i} + sum_i beta_i P_i(s) ⊗ Q_i(e_i)`.
pub fn central_spin(
    dims: BipartiteDims,
    alpha: f64,
    betas: &[f64],
    system_axes: &[Pauli],
    env_axes: &[Pauli],
) -> Result<Hermitian> {
    if dims.n_s() != 1 {
        return Err(Error::Unsupported(format!(
            "central spin needs exactly one system qubit, got {}",
            dims.n_s()
        )));
    }
    let n_e = dims.n_e() as usize;
    for len in [betas.len(), system_axes.len(), env_axes.len()] {
        if len != n_e {
            return Err(Error::dims(n_e, len));
        }
    }
    if system_axes.iter().chain(env_axes).any(|p| *p == Pauli::I) {
        return Err(Error::Config("coupling axes must be X, Y or Z".into()));
    }
    let n = dims.n_w();
    let mut h = pauli_string(n, &[(0, Pauli::Z)]).scale(alpha);
    for i in 0..n_e {
        h += pauli_string(n, &[(i + 1, Pauli::Z)]).scale(alpha);
        if betas[i] != 0.0 {
            h += pauli_string(n, &[(0, system_axes[i]), (i + 1, env_axes[i])]).scale(betas[i]);
        }
    }
    Ok(Hermitian::from_raw(h))
}

/// `H_s ⊗ 1 + 1 ⊗ H_e`.
pub fn decoupled(h_s: &Hermitian, h_e: &Hermitian) -> Result<Hermitian> {
    let (d_s, d_e) = (h_s.dim(), h_e.dim());
    let m = kron(h_s.matrix(), &CMatrix::identity(d_e, d_e))?
        + kron(&CMatrix::identity(d_s, d_s), h_e.matrix())?;
    Ok(Hermitian::from_raw(m))
}

/// What to do with a factor that is not traceless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracePolicy {
    /// Subtract `Tr/d` and log a warning.
    #[default]
    Project,
    Reject,
}

fn enforce_traceless(h: &Hermitian, policy: TracePolicy, label: &str) -> Result<Hermitian> {
    let tr = h.trace();
    if tr.abs() <= Tolerances::DEFAULT.trace * h.frobenius_norm().max(1.0) {
        return Ok(h.clone());
    }
    match policy {
        TracePolicy::Reject => Err(Error::Precondition(format!(
            "{label} factor has trace {tr:.3e}, expected 0"
        ))),
        TracePolicy::Project => {
            log::warn!("{label} factor has trace {tr:.3e}; projecting to traceless");
            let d = h.dim();
            let shift = CMatrix::identity(d, d).scale(tr / d as f64);
            Ok(Hermitian::from_raw(h.matrix() - shift))
        }
    }
}

/// `H_sigma ⊗ H_epsilon` with both factors made traceless.
pub fn qml_tensor(h_sigma: &Hermitian, h_epsilon: &Hermitian, policy: TracePolicy) -> Result<Hermitian> {
    let a = enforce_traceless(h_sigma, policy, "system")?;
    let b = enforce_traceless(h_epsilon, policy, "environment")?;
    Ok(Hermitian::from_raw(kron(a.matrix(), b.matrix())?))
}

/// `sum_i |chi_i><chi_i| ⊗ H_e^(i)` with `|chi_i> = W|i>`.
pub fn block_diagonal(
    dims: BipartiteDims,
    env_blocks: &[Hermitian],
    pointer_basis: Option<&UnitaryMatrix>,
) -> Result<Hermitian> {
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    if env_blocks.len() != d_s {
        return Err(Error::dims(d_s, env_blocks.len()));
    }
    if let Some(b) = env_blocks.iter().find(|b| b.dim() != d_e) {
        return Err(Error::dims(d_e, b.dim()));
    }
    if let Some(w) = pointer_basis {
        if w.dim() != d_s {
            return Err(Error::dims(d_s, w.dim()));
        }
    }
    let mut h = CMatrix::zeros(dims.d_w(), dims.d_w());
    for (i, block) in env_blocks.iter().enumerate() {
        let proj = match pointer_basis {
            Some(w) => {
                let chi = w.matrix().column(i);
                &chi * chi.adjoint()
            }
            None => {
                let mut p = CMatrix::zeros(d_s, d_s);
                p[(i, i)] = C64::new(1.0, 0.0);
                p
            }
        };
        h += kron(&proj, block.matrix())?;
    }
    Ok(Hermitian::from_raw(h))
}

/// `sum_j H_s^(j) ⊗ |j><j|`.
pub fn furnace(dims: BipartiteDims, system_blocks: &[Hermitian]) -> Result<Hermitian> {
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    if system_blocks.len() != d_e {
        return Err(Error::dims(d_e, system_blocks.len()));
    }
    if let Some(b) = system_blocks.iter().find(|b| b.dim() != d_s) {
        return Err(Error::dims(d_s, b.dim()));
    }
    let mut h = CMatrix::zeros(dims.d_w(), dims.d_w());
    for (j, block) in system_blocks.iter().enumerate() {
        let mut proj = CMatrix::zeros(d_e, d_e);
        proj[(j, j)] = C64::new(1.0, 0.0);
        h += kron(block.matrix(), &proj)?;
    }
    Ok(Hermitian::from_raw(h))
}

/// Eigenvectors that are product states in a given factorization, and the
/// corresponding split `H = H_dfs + H_rem`.
#[derive(Debug, Clone)]
pub struct DfsSplit {
    pub indices: Vec<usize>,
    pub h_dfs: Hermitian,
    pub h_rem: Hermitian,
}

/// Scans the eigenvectors of `h` (as returned by the eigensolver) for linear
/// entropy below `tol` in the frame `B`.
pub fn dfs_split(h: &Hermitian, b: &UnitaryMatrix, dims: BipartiteDims, tol: f64) -> Result<DfsSplit> {
    dims.check_world(h.dim())?;
    dims.check_world(b.dim())?;
    let spec = SpectralDecomposition::new(h)?;
    let framed = b.matrix() * spec.eigenvectors();
    let d = dims.d_w();
    let mut indices = Vec::new();
    let mut h_dfs = CMatrix::zeros(d, d);
    for k in 0..d {
        let v = framed.column(k);
        if linear_entropy_raw(v.as_slice(), dims) < tol {
            indices.push(k);
            let u = spec.eigenvectors().column(k);
            h_dfs += (&u * u.adjoint()).scale(spec.eigenvalues()[k]);
        }
    }
    let h_rem = h.matrix() - &h_dfs;
    Ok(DfsSplit {
        indices,
        h_dfs: Hermitian::from_raw(h_dfs),
        h_rem: Hermitian::from_raw(h_rem),
    })
}

/// `(1 - lambda) H0 + lambda H1`.
pub fn interpolate(h0: &Hermitian, h1: &Hermitian, lambda: f64) -> Result<Hermitian> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if h0.dim() != h1.dim() {
        return Err(Error::dims(h0.dim(), h1.dim()));
    }
    Ok(Hermitian::from_raw(h0.matrix().scale(1.0 - lambda) + h1.matrix().scale(lambda)))
}

fn default_alpha() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralSpinParams {
    #[serde(default)]
    pub preset: CentralSpinPreset,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Uniform coupling used when `betas` is absent.
    #[serde(default = "default_alpha")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_axes: Option<Vec<Pauli>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_axes: Option<Vec<Pauli>>,
}

impl Default for CentralSpinParams {
    fn default() -> Self {
        Self {
            preset: CentralSpinPreset::default(),
            alpha: 1.0,
            beta: 1.0,
            betas: None,
            system_axes: None,
            env_axes: None,
        }
    }
}

/// A Hamiltonian family with its parameters. Random families draw from the
/// seed held by [`HamiltonianSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    CentralSpin(CentralSpinParams),
    /// Independent GUE factors, or sums of single-qubit terms with `per_qubit`.
    Decoupled {
        #[serde(default)]
        per_qubit: bool,
    },
    /// Tensor product of traceless GUE factors.
    QuantumMeasurementLimit {
        #[serde(default)]
        trace_policy: TracePolicy,
    },
    RandomGlobal {
        #[serde(default)]
        traceless: bool,
    },
    /// GUE environment blocks; block `i` is shifted by `i * block_shift`.
    BlockDiagonal {
        #[serde(default)]
        rotate_pointer: bool,
        #[serde(default)]
        block_shift: f64,
    },
    /// GUE system blocks; with `commuting_pair` blocks 0 and 1 share an
    /// eigenbasis.
    Furnace {
        #[serde(default = "default_true")]
        commuting_pair: bool,
    },
    /// Random spectrum whose first `dfs_size` eigenvectors are `|0> ⊗ |e_j>`.
    DfsSplit { dfs_size: usize },
    Interpolated {
        from: Box<Family>,
        to: Box<Family>,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    pub dims: BipartiteDims,
}

impl HamiltonianSpec {
    pub fn new(family: Family, dims: BipartiteDims, seed: u64) -> Self {
        Self { family, seed, dims }
    }

    /// Builds the matrix. Identical specs give bit-identical matrices.
    pub fn build(&self) -> Result<Hermitian> {
        let dims = BipartiteDims::new(self.dims.n_s(), self.dims.n_e())?;
        build_family(&self.family, dims, self.seed)
    }

    /// Whether the family draws random numbers.
    pub fn is_random(&self) -> bool {
        family_is_random(&self.family)
    }
}

fn family_is_random(f: &Family) -> bool {
    match f {
        Family::CentralSpin(_) => false,
        Family::Interpolated { from, to, .. } => family_is_random(from) || family_is_random(to),
        _ => true,
    }
}

fn single_qubit_sum(n: u32, rng: &mut SeededRng) -> Hermitian {
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    for q in 0..n as usize {
        let local = random_hermitian(2, rng, true);
        let left = CMatrix::identity(1 << q, 1 << q);
        let right_dim = 1usize << (n as usize - q - 1);
        let right = CMatrix::identity(right_dim, right_dim);
        h += left.kronecker(local.matrix()).kronecker(&right);
    }
    Hermitian::from_raw(h)
}

fn build_family(family: &Family, dims: BipartiteDims, seed: u64) -> Result<Hermitian> {
    let mut rng = rng_from_seed(seed);
    match family {
        Family::CentralSpin(p) => {
            let n_e = dims.n_e() as usize;
            let (sys, env) = p.preset.axes(n_e.min(3))?;
            let system_axes = match &p.system_axes {
                Some(a) => a.clone(),
                None if n_e > 3 => p.preset.axes(n_e)?.0,
                None => sys,
            };
            let env_axes = match &p.env_axes {
                Some(a) => a.clone(),
                None if n_e > 3 => p.preset.axes(n_e)?.1,
                None => env,
            };
            let betas = p.betas.clone().unwrap_or_else(|| vec![p.beta; n_e]);
            central_spin(dims, p.alpha, &betas, &system_axes, &env_axes)
        }
        Family::Decoupled { per_qubit } => {
            let (h_s, h_e) = if *per_qubit {
                let h_s = single_qubit_sum(dims.n_s(), &mut rng);
                (h_s, single_qubit_sum(dims.n_e(), &mut rng))
            } else {
                let h_s = random_hermitian(dims.d_s(), &mut rng, false);
                (h_s, random_hermitian(dims.d_e(), &mut rng, false))
            };
            decoupled(&h_s, &h_e)
        }
        Family::QuantumMeasurementLimit { trace_policy } => {
            let h_s = random_hermitian(dims.d_s(), &mut rng, true);
            let h_e = random_hermitian(dims.d_e(), &mut rng, true);
            qml_tensor(&h_s, &h_e, *trace_policy)
        }
        Family::RandomGlobal { traceless } => Ok(random_hermitian(dims.d_w(), &mut rng, *traceless)),
        Family::BlockDiagonal {
            rotate_pointer,
            block_shift,
        } => {
            let blocks = gue_blocks(dims.d_s(), dims.d_e(), *block_shift, &mut rng);
            let w = rotate_pointer.then(|| haar_unitary(dims.d_s(), &mut rng));
            block_diagonal(dims, &blocks, w.as_ref())
        }
        Family::Furnace { commuting_pair } => {
            let (d_s, d_e) = (dims.d_s(), dims.d_e());
            let mut blocks = Vec::with_capacity(d_e);
            if *commuting_pair && d_e >= 2 {
                let u = haar_unitary(d_s, &mut rng);
                for _ in 0..2 {
                    let spectrum = random_hermitian(d_s, &mut rng, false);
                    let diag: Vec<f64> = (0..d_s).map(|i| spectrum.matrix()[(i, i)].re).collect();
                    blocks.push(Hermitian::from_real_diagonal(&diag).conjugate_by(&u));
                }
            }
            while blocks.len() < d_e {
                blocks.push(random_hermitian(d_s, &mut rng, false));
            }
            furnace(dims, &blocks)
        }
        Family::DfsSplit { dfs_size } => dfs_family(dims, *dfs_size, &mut rng),
        Family::Interpolated { from, to, lambda } => {
            let h0 = build_family(from, dims, split_seed(seed, 0))?;
            let h1 = build_family(to, dims, split_seed(seed, 1))?;
            interpolate(&h0, &h1, *lambda)
        }
    }
}

/// `d_s` GUE blocks of size `d_e`, block `i` shifted by `i * shift`.
pub fn gue_blocks(d_s: usize, d_e: usize, shift: f64, rng: &mut SeededRng) -> Vec<Hermitian> {
    (0..d_s)
        .map(|i| {
            let g = random_hermitian(d_e, rng, false);
            let s = CMatrix::identity(d_e, d_e).scale(i as f64 * shift);
            Hermitian::from_raw(g.matrix() + s)
        })
        .collect()
}

fn dfs_family(dims: BipartiteDims, dfs_size: usize, rng: &mut SeededRng) -> Result<Hermitian> {
    let (d_e, d_w) = (dims.d_e(), dims.d_w());
    if dfs_size > d_e {
        return Err(Error::Config(format!(
            "dfs_size {dfs_size} exceeds environment dimension {d_e}"
        )));
    }
    // columns: |0>_s ⊗ (Haar env basis), then random directions; QR keeps the
    // span of the leading product columns
    let env = haar_unitary(d_e, rng);
    let fill = haar_unitary(d_w, rng);
    let mut m = fill.into_inner();
    for j in 0..dfs_size {
        let mut col = crate::hilbert::CVector::zeros(d_w);
        for l in 0..d_e {
            col[l] = env.matrix()[(l, j)];
        }
        m.set_column(j, &col);
    }
    let q = QR::new(m).q();
    let spectrum = random_hermitian(d_w, rng, false);
    let mut scaled = q.clone();
    for k in 0..d_w {
        let mut c = scaled.column_mut(k);
        c *= spectrum.matrix()[(k, k)];
    }
    Ok(Hermitian::from_raw(scaled * q.adjoint()))
}
