//! Threshold cascade that labels a trained (B, psi0) pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cost::{late_time_grid, late_time_max_entropy, DEFAULT_GRID_POINTS, DEFAULT_T_LATE};
use crate::error::Result;
use crate::hilbert::{
    interaction_weight, pauli_decompose, schmidt_decompose, BipartiteDims, CMatrix, Hermitian,
    SpectralDecomposition, StateVector, UnitaryMatrix,
};
use crate::optimizer::OptimizationResult;

use super::{eigen_support, perturbation_suite};

/// Late-time evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub t_late: f64,
    pub grid_points: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            t_late: DEFAULT_T_LATE,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Residuals are relative to `|B H B^dag|_F`; the interaction weight is the
/// fraction of non-identity Pauli weight on interaction strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierThresholds {
    pub interaction: f64,
    pub off_block: f64,
    pub env_block: f64,
    pub pointer: f64,
    pub dominance: f64,
    pub eigen_entropy: f64,
    pub late_split: f64,
    pub extended_cost: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            interaction: 1e-8,
            off_block: 1e-8,
            env_block: 1e-8,
            pointer: 1e-8,
            dominance: 0.8,
            eigen_entropy: 1e-6,
            late_split: 0.1,
            extended_cost: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Decoupled,
    BlockDiagonal,
    Furnace,
    ApproxEigenstate,
    ExtendedCoherence,
    Unclassified,
}

impl Label {
    pub const ALL: [Label; 6] = [
        Label::Decoupled,
        Label::BlockDiagonal,
        Label::Furnace,
        Label::ApproxEigenstate,
        Label::ExtendedCoherence,
        Label::Unclassified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::Decoupled => "Decoupled",
            Label::BlockDiagonal => "BlockDiagonal",
            Label::Furnace => "Furnace",
            Label::ApproxEigenstate => "ApproxEigenstate",
            Label::ExtendedCoherence => "ExtendedCoherence",
            Label::Unclassified => "Unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionCategory {
    pub label: Label,
    pub evidence: BTreeMap<String, f64>,
}

fn relative(res2: f64, total2: f64) -> f64 {
    if total2 > 0.0 {
        (res2 / total2).sqrt()
    } else {
        0.0
    }
}

/// `|X - P X P - Q X Q| / |X|` with `P = |s><s| ⊗ 1`, `Q = 1 - P`.
fn system_block_residual(x: &CMatrix, s: &StateVector, dims: BipartiteDims) -> f64 {
    let d_e = dims.d_e();
    let p = crate::hilbert::kron(s.projector().matrix(), &CMatrix::identity(d_e, d_e))
        .expect("dimensions already checked");
    let q = CMatrix::identity(dims.d_w(), dims.d_w()) - &p;
    let kept = &p * x * &p + &q * x * &q;
    relative((x - kept).norm_squared(), x.norm_squared())
}

/// Mirror test: off-diagonal weight between environment basis states, in
/// the eigenbasis of `Tr_s X`.
fn env_block_residual(x: &CMatrix, dims: BipartiteDims) -> Result<f64> {
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    let mut reduced = CMatrix::zeros(d_e, d_e);
    for i in 0..d_s {
        reduced += x.view((i * d_e, i * d_e), (d_e, d_e));
    }
    let basis = SpectralDecomposition::new(&Hermitian::new(reduced)?)?.unitary();
    let rot = UnitaryMatrix::identity(d_s).kron(&basis)?;
    let y = rot.matrix().adjoint() * x * rot.matrix();
    let mut off = 0.0;
    for r in 0..dims.d_w() {
        for c in 0..dims.d_w() {
            if r % d_e != c % d_e {
                off += y[(r, c)].norm_sqr();
            }
        }
    }
    Ok(relative(off, y.norm_squared()))
}

/// Runs the cascade Decoupled, BlockDiagonal, Furnace, ApproxEigenstate,
/// ExtendedCoherence, Unclassified; the first passing test wins.
#[allow(clippy::too_many_arguments)]
pub fn classify(
    h: &Hermitian,
    spec: &SpectralDecomposition,
    b: &UnitaryMatrix,
    psi0: &StateVector,
    training_cost: f64,
    dims: BipartiteDims,
    thresholds: &ClassifierThresholds,
    eval: EvalParams,
    seed: u64,
) -> Result<SolutionCategory> {
    let mut ev = BTreeMap::new();
    ev.insert("training_cost".to_string(), training_cost);
    let late = late_time_max_entropy(psi0, b, spec, dims, eval.t_late, eval.grid_points)?;
    ev.insert("late_time_max_entropy".into(), late);

    let framed_h = h.conjugate_by(b);
    let weights = interaction_weight(&pauli_decompose(&framed_h, dims.n_w())?, dims)?;
    let total = weights.system + weights.environment + weights.interaction;
    let inter = if total > 0.0 { weights.interaction / total } else { 0.0 };
    ev.insert("interaction_weight".into(), inter);

    let framed_state = b.apply(psi0);
    let schmidt = schmidt_decompose(&framed_state, dims)?;
    let gap = 1.0 - schmidt.coefficients[0].powi(2);
    ev.insert("schmidt_gap".into(), gap);
    let off_block = system_block_residual(framed_h.matrix(), &schmidt.system[0], dims);
    ev.insert("off_block_residual".into(), off_block);
    let env_block = env_block_residual(framed_h.matrix(), dims)?;
    ev.insert("env_block_residual".into(), env_block);

    let support = eigen_support(psi0, spec, b, dims)?;
    let dominant = support
        .iter()
        .copied()
        .fold(None::<super::EigenWeight>, |best, w| match best {
            Some(bw) if bw.weight >= w.weight => Some(bw),
            _ => Some(w),
        })
        .expect("nonempty spectrum");
    ev.insert("dominant_eigenstate_weight".into(), dominant.weight);
    ev.insert("dominant_eigenstate_entropy".into(), dominant.entropy);

    let product = gap <= thresholds.pointer;
    let furnace = if env_block < thresholds.env_block && gap <= 1e-6 {
        let t_dec = 1.0 / spec.spectral_radius();
        let times = late_time_grid(t_dec, eval.t_late, eval.grid_points)?;
        let suite = perturbation_suite(spec, b, psi0, dims, &times, seed)?;
        let env_max = suite.random_env.iter().cloned().fold(0.0, f64::max);
        let sub_max = suite.subspace_perturbed.iter().cloned().fold(0.0, f64::max);
        ev.insert("random_env_late_entropy".into(), env_max);
        ev.insert("subspace_late_entropy".into(), sub_max);
        env_max >= thresholds.pointer && sub_max < thresholds.pointer
    } else {
        false
    };
    let label = if inter < thresholds.interaction && product {
        Label::Decoupled
    } else if off_block < thresholds.off_block && product {
        Label::BlockDiagonal
    } else if furnace {
        Label::Furnace
    } else if dominant.weight >= thresholds.dominance
        && dominant.entropy < thresholds.eigen_entropy
        && late < thresholds.late_split
    {
        Label::ApproxEigenstate
    } else if training_cost < thresholds.extended_cost && late >= thresholds.late_split {
        Label::ExtendedCoherence
    } else {
        Label::Unclassified
    };
    Ok(SolutionCategory { label, evidence: ev })
}

pub fn classify_result(
    h: &Hermitian,
    spec: &SpectralDecomposition,
    result: &OptimizationResult,
    dims: BipartiteDims,
    thresholds: &ClassifierThresholds,
    eval: EvalParams,
    seed: u64,
) -> Result<SolutionCategory> {
    classify(h, spec, &result.b, &result.psi0, result.final_cost, dims, thresholds, eval, seed)
}
