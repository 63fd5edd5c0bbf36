//! Training schedules, the discrete entropy cost and entropy trajectories.
//!
//! The cost of an initial state `psi0` in factorization `B` is
//!
//! ```text
//! C = (dt / T) * sum_{k=0}^{T/dt} (1 - Tr[rho_s(k dt)^2]),
//! rho_s(t) = Tr_e[ B e^{-iHt} |psi0><psi0| e^{iHt} B^dag ]
//! ```
//!
//! The `k = 0` term is included, so `B` acts on the initial state too.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    linear_entropy_raw, BipartiteDims, CMatrix, CVector, Hermitian,
    SpectralDecomposition, StateVector, UnitaryMatrix, C64,
};

/// Default late-time evaluation horizon (absolute time units).
pub const DEFAULT_T_LATE: f64 = 316_227.766_016_837_94; // 10^5.5
pub const DEFAULT_GRID_POINTS: usize = 64;
pub const DEFAULT_HORIZON_MULTIPLE: f64 = 100.0;

/// `1 / max |lambda|`.
pub fn decoherence_time(h: &Hermitian) -> Result<f64> {
    decoherence_time_of(&SpectralDecomposition::new(h)?)
}

pub fn decoherence_time_of(spec: &SpectralDecomposition) -> Result<f64> {
    let r = spec.spectral_radius();
    if !(r > 0.0) {
        return Err(Error::ZeroScale);
    }
    Ok(1.0 / r)
}

/// Uniform grid `{k dt : k = 0..=steps}` with `dt = t_max / steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    pub delta_t: f64,
    pub t_max: f64,
    pub times: Vec<f64>,
}

impl TrainingSchedule {
    pub fn uniform(t_max: f64, steps: usize) -> Result<Self> {
        if steps < 1 || !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Config(format!(
                "schedule needs t_max > 0 and at least one step (t_max={t_max}, steps={steps})"
            )));
        }
        let delta_t = t_max / steps as f64;
        let times = (0..=steps).map(|k| k as f64 * delta_t).collect();
        Ok(Self {
            delta_t,
            t_max,
            times,
        })
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `dt / T`, the weight of every term in the cost sum.
    pub fn weight(&self) -> f64 {
        self.delta_t / self.t_max
    }
}

/// How a training schedule is derived from a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleParams {
    /// Number of steps; `None` means `2 * d_w`.
    pub steps: Option<usize>,
    /// `T_train` in units of the decoherence time.
    pub horizon_multiple: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            steps: None,
            horizon_multiple: DEFAULT_HORIZON_MULTIPLE,
        }
    }
}

pub fn make_schedule(spec: &SpectralDecomposition, params: ScheduleParams) -> Result<TrainingSchedule> {
    let steps = params.steps.unwrap_or(2 * spec.dim());
    if steps < 2 {
        return Err(Error::Config(format!("need at least 2 steps, got {steps}")));
    }
    if !(params.horizon_multiple > 0.0) {
        return Err(Error::Config("horizon_multiple must be positive".into()));
    }
    let t_dec = decoherence_time_of(spec)?;
    TrainingSchedule::uniform(params.horizon_multiple * t_dec, steps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub cost: f64,
    pub per_time_entropies: Vec<f64>,
}

/// Evaluates `B e^{-iHt} psi0` at many times with one basis change per time.
pub(crate) struct FramedEvolution<'a> {
    spec: &'a SpectralDecomposition,
    coeffs: CVector,
    frame: CMatrix,
    dims: BipartiteDims,
}

impl<'a> FramedEvolution<'a> {
    pub(crate) fn new(
        psi0: &StateVector,
        b: &UnitaryMatrix,
        spec: &'a SpectralDecomposition,
        dims: BipartiteDims,
    ) -> Result<Self> {
        dims.check_world(psi0.dim())?;
        dims.check_world(b.dim())?;
        dims.check_world(spec.dim())?;
        Ok(Self {
            spec,
            coeffs: spec.to_eigenbasis(psi0.amplitudes()),
            frame: b.matrix() * spec.eigenvectors(),
            dims,
        })
    }

    pub(crate) fn state(&self, t: f64) -> CVector {
        let phased = CVector::from_iterator(
            self.coeffs.len(),
            self.coeffs
                .iter()
                .zip(self.spec.eigenvalues())
                .map(|(c, &lam)| c * C64::from_polar(1.0, -lam * t)),
        );
        &self.frame * phased
    }

    pub(crate) fn entropy(&self, t: f64) -> f64 {
        let v = self.state(t);
        linear_entropy_raw(v.as_slice(), self.dims).max(0.0)
    }
}

pub fn cost(
    psi0: &StateVector,
    b: &UnitaryMatrix,
    spec: &SpectralDecomposition,
    schedule: &TrainingSchedule,
    dims: BipartiteDims,
) -> Result<CostReport> {
    let evo = FramedEvolution::new(psi0, b, spec, dims)?;
    let per_time_entropies: Vec<f64> = schedule.times.iter().map(|&t| evo.entropy(t)).collect();
    // fixed left-to-right summation order
    let total: f64 = per_time_entropies.iter().sum();
    Ok(CostReport {
        cost: schedule.weight() * total,
        per_time_entropies,
    })
}

pub fn entropy_trajectory(
    psi0: &StateVector,
    b: &UnitaryMatrix,
    spec: &SpectralDecomposition,
    times: &[f64],
    dims: BipartiteDims,
) -> Result<Vec<f64>> {
    if times.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(Error::Precondition("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("times must be ascending".into()));
    }
    let evo = FramedEvolution::new(psi0, b, spec, dims)?;
    Ok(times.iter().map(|&t| evo.entropy(t)).collect())
}

/// `n` log-spaced points from `start` to `end` inclusive.
pub fn log_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    assert!(start > 0.0 && end >= start && n >= 1);
    if n == 1 {
        return vec![end];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                end
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// The generalization grid: `grid_points` log-spaced times from `t_dec / 10`
/// to `t_late`.
pub fn late_time_grid(t_dec: f64, t_late: f64, grid_points: usize) -> Result<Vec<f64>> {
    if !(t_late > 0.0) || grid_points == 0 {
        return Err(Error::Config("t_late must be positive and grid_points nonzero".into()));
    }
    let start = (t_dec / 10.0).min(t_late);
    Ok(log_grid(start, t_late, grid_points))
}

pub fn late_time_max_entropy(
    psi0: &StateVector,
    b: &UnitaryMatrix,
    spec: &SpectralDecomposition,
    dims: BipartiteDims,
    t_late: f64,
    grid_points: usize,
) -> Result<f64> {
    let t_dec = decoherence_time_of(spec)?;
    let grid = late_time_grid(t_dec, t_late, grid_points)?;
    let traj = entropy_trajectory(psi0, b, spec, &grid, dims)?;
    Ok(traj.into_iter().fold(0.0, f64::max))
}

/// Writes `t,<columns...>` with 17 significant digits.
pub fn write_columns_csv(path: &Path, header: &[&str], times: &[f64], columns: &[&[f64]]) -> Result<()> {
    let mut out = Vec::new();
    let _ = writeln!(out, "t,{}", header.join(","));
    for (i, t) in times.iter().enumerate() {
        let _ = write!(out, "{t:.16e}");
        for c in columns {
            let _ = write!(out, ",{:.16e}", c[i]);
        }
        out.push(b'\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_trajectory_csv(path: &Path, times: &[f64], entropies: &[f64]) -> Result<()> {
    write_columns_csv(path, &["linear_entropy"], times, &[entropies])
}
