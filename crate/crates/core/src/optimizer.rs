//! Alternating environment-tensor / polar-projection optimizer.
//!
//! The objective is the summed purity `F = sum_k Tr[rho_k^2]` over training
//! times, so the cost is `(dt/T) (K - F)`. For one unitary `U` (either the
//! factorization `B` or the preparation `A`) with all other occurrences held
//! fixed, the environment tensor `E` satisfies `Re Tr[E^dag U] = F`. A sweep
//! replaces `B`, then `A`, by the unitary polar factor of
//! `eta E/|E| + (1 - eta) U`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cost::{make_schedule, ScheduleParams, TrainingSchedule};
use crate::error::{Error, Result};
use crate::hilbert::{
    closest_unitary, haar_unitary, kron_state, rng_from_seed, BipartiteDims, CMatrix, CVector,
    Hermitian, SpectralDecomposition, StateVector, UnitaryMatrix, C64,
};

/// Cost increase tolerated before a sweep is rolled back.
pub const ACCEPT_SLACK: f64 = 1e-14;
/// Maximum number of learning-rate halvings when the mixed matrix is singular.
pub const MAX_HALVINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Optimize `B` only; the initial state is the fiducial product state.
    FixedState,
    /// Also optimize a system unitary `A_s` acting on the fiducial state.
    SystemState,
    /// Also optimize a world unitary `A_w` acting on the fiducial state.
    GlobalState,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::FixedState, Mode::SystemState, Mode::GlobalState];

    /// Dimension of `A`, if the mode has one.
    pub fn prep_dim(self, dims: BipartiteDims) -> Option<usize> {
        match self {
            Mode::FixedState => None,
            Mode::SystemState => Some(dims.d_s()),
            Mode::GlobalState => Some(dims.d_w()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::FixedState => "FixedState",
            Mode::SystemState => "SystemState",
            Mode::GlobalState => "GlobalState",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRate {
    pub eta0: f64,
    pub decay: f64,
}

impl Default for LearningRate {
    fn default() -> Self {
        Self {
            eta0: 0.99,
            decay: 0.0,
        }
    }
}

/// `eta0 / (1 + decay n)`.
pub fn learning_rate(iteration: u64, schedule: LearningRate) -> f64 {
    schedule.eta0 / (1.0 + schedule.decay * iteration as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub mode: Mode,
    pub max_iterations: u64,
    pub acceptance_threshold: f64,
    pub learning_rate: LearningRate,
    pub seed: u64,
    pub schedule: ScheduleParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::GlobalState,
            max_iterations: 100_000,
            acceptance_threshold: 1e-13,
            learning_rate: LearningRate::default(),
            seed: 0,
            schedule: ScheduleParams::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.acceptance_threshold > 0.0) {
            return Err(Error::Config("acceptance_threshold must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        let lr = self.learning_rate;
        if !(lr.eta0 > 0.0 && lr.eta0 <= 1.0) {
            return Err(Error::Config(format!("eta0 must lie in (0, 1], got {}", lr.eta0)));
        }
        if !(lr.decay >= 0.0) {
            return Err(Error::Config(format!("decay must be nonnegative, got {}", lr.decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Threshold,
    MaxIterations,
}

/// The fiducial product state `|xi> ⊗ |phi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiducial {
    pub xi: StateVector,
    pub phi: StateVector,
}

impl Fiducial {
    /// `|0...0> ⊗ |0...0>`.
    pub fn zeros(dims: BipartiteDims) -> Self {
        Self {
            xi: StateVector::basis(dims.d_s(), 0),
            phi: StateVector::basis(dims.d_e(), 0),
        }
    }

    pub fn world(&self) -> Result<StateVector> {
        kron_state(&self.xi, &self.phi)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub b: UnitaryMatrix,
    pub a: Option<UnitaryMatrix>,
    pub psi0: StateVector,
    /// Cost before the first sweep, then after every sweep.
    pub cost_history: Vec<f64>,
    pub stop_reason: StopReason,
    pub final_cost: f64,
    /// Number of sweeps performed.
    pub iterations: u64,
    pub rejected_sweeps: u64,
    pub schedule: TrainingSchedule,
    pub wall_time_secs: f64,
}

impl OptimizationResult {
    /// `(iteration, cost)` pairs: every sweep up to 1000, then roughly 200
    /// log-spaced samples per decade, always including the last sweep.
    pub fn thinned_history(&self) -> Vec<(u64, f64)> {
        let n = self.cost_history.len() as u64;
        let mut out = Vec::new();
        let mut next = 0u64;
        while next < n {
            out.push((next, self.cost_history[next as usize]));
            next = if next < 1000 {
                next + 1
            } else {
                next + (next as f64 * (10f64.powf(1.0 / 200.0) - 1.0)).ceil() as u64
            };
        }
        if out.last().map(|p| p.0) != Some(n - 1) {
            out.push((n - 1, self.cost_history[(n - 1) as usize]));
        }
        out
    }
}

/// Writes `iteration,cost` CSV with 17 significant digits.
pub fn write_history_csv(path: &std::path::Path, rows: &[(u64, f64)]) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = String::from("iteration,cost\n");
    for (i, c) in rows {
        let _ = writeln!(s, "{i},{c:.16e}");
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// `FixedState -> |xi>|phi>`, `SystemState -> (A_s ⊗ 1)|xi>|phi>`,
/// `GlobalState -> A_w |xi>|phi>`.
pub fn initial_state(
    mode: Mode,
    a: Option<&UnitaryMatrix>,
    dims: BipartiteDims,
    fiducial: &Fiducial,
) -> Result<StateVector> {
    if fiducial.xi.dim() != dims.d_s() {
        return Err(Error::Config(format!(
            "fiducial system state has dim {}, expected {}",
            fiducial.xi.dim(),
            dims.d_s()
        )));
    }
    if fiducial.phi.dim() != dims.d_e() {
        return Err(Error::Config(format!(
            "fiducial environment state has dim {}, expected {}",
            fiducial.phi.dim(),
            dims.d_e()
        )));
    }
    match (mode, a) {
        (Mode::FixedState, None) => fiducial.world(),
        (Mode::SystemState, Some(a)) if a.dim() == dims.d_s() => {
            kron_state(&a.apply(&fiducial.xi), &fiducial.phi)
        }
        (Mode::GlobalState, Some(a)) if a.dim() == dims.d_w() => Ok(a.apply(&fiducial.world()?)),
        (mode, a) => Err(Error::Config(format!(
            "{} expects a preparation unitary of dim {:?}, got {:?}",
            mode.name(),
            mode.prep_dim(dims),
            a.map(|a| a.dim())
        ))),
    }
}

/// Which unitary an environment tensor is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    B,
    A,
}

/// Precomputed propagators for one (Hamiltonian, schedule) pair.
pub(crate) struct Engine {
    dims: BipartiteDims,
    n_times: usize,
    weight: f64,
    /// `[U_0; U_1; ...]` stacked vertically, `(K d_w) x d_w`.
    stack: CMatrix,
}

/// Evaluation of `B X` for states `X` (one column per training time).
pub(crate) struct Evaluation {
    /// `(rho_k ⊗ 1) B chi_k` per column.
    pub contracted: CMatrix,
    pub purities: Vec<f64>,
}

impl Evaluation {
    pub(crate) fn entropy_sum(&self) -> f64 {
        self.purities.iter().map(|p| (1.0 - p).max(0.0)).sum()
    }
}

impl Engine {
    pub(crate) fn new(spec: &SpectralDecomposition, schedule: &TrainingSchedule, dims: BipartiteDims) -> Result<Self> {
        dims.check_world(spec.dim())?;
        let d = dims.d_w();
        let n_times = schedule.times.len();
        let mut stack = CMatrix::zeros(n_times * d, d);
        for (k, &t) in schedule.times.iter().enumerate() {
            stack
                .view_mut((k * d, 0), (d, d))
                .copy_from(spec.propagator(t).matrix());
        }
        Ok(Self {
            dims,
            n_times,
            weight: schedule.weight(),
            stack,
        })
    }

    /// Columns `U_k psi0`.
    pub(crate) fn evolved(&self, psi0: &CVector) -> CMatrix {
        let y = &self.stack * psi0;
        CMatrix::from_column_slice(self.dims.d_w(), self.n_times, y.as_slice())
    }

    pub(crate) fn evaluate(&self, b: &CMatrix, chi: &CMatrix) -> Evaluation {
        let phi = b * chi;
        let (d_s, d_e) = (self.dims.d_s(), self.dims.d_e());
        let mut contracted = CMatrix::zeros(phi.nrows(), phi.ncols());
        let mut purities = Vec::with_capacity(phi.ncols());
        let mut rho = vec![C64::new(0.0, 0.0); d_s * d_s];
        for k in 0..phi.ncols() {
            let col = phi.column(k);
            let v = col.as_slice();
            let mut purity = 0.0;
            for i in 0..d_s {
                let ri = &v[i * d_e..(i + 1) * d_e];
                for l in i..d_s {
                    let rl = &v[l * d_e..(l + 1) * d_e];
                    let mut z = C64::new(0.0, 0.0);
                    for j in 0..d_e {
                        z += ri[j] * rl[j].conj();
                    }
                    rho[i * d_s + l] = z;
                    rho[l * d_s + i] = z.conj();
                    purity += if i == l { z.norm_sqr() } else { 2.0 * z.norm_sqr() };
                }
            }
            purities.push(purity);
            let mut out = contracted.column_mut(k);
            let o = out.as_mut_slice();
            for i in 0..d_s {
                for l in 0..d_s {
                    let r = rho[i * d_s + l];
                    for j in 0..d_e {
                        o[i * d_e + j] += r * v[l * d_e + j];
                    }
                }
            }
        }
        Evaluation {
            contracted,
            purities,
        }
    }

    pub(crate) fn cost_of(&self, eval: &Evaluation) -> f64 {
        self.weight * eval.entropy_sum()
    }

    /// `E_B = sum_k g_k chi_k^dag`.
    pub(crate) fn env_b(&self, eval: &Evaluation, chi: &CMatrix) -> CMatrix {
        &eval.contracted * chi.adjoint()
    }

    /// `w = sum_k U_k^dag B^dag g_k`, the gradient with respect to `psi0`.
    pub(crate) fn state_gradient(&self, eval: &Evaluation, b: &CMatrix) -> CVector {
        let h = b.ad_mul(&eval.contracted);
        let flat = CVector::from_column_slice(h.as_slice());
        self.stack.ad_mul(&flat)
    }

    pub(crate) fn env_a(&self, mode: Mode, w: &CVector, fiducial: &Fiducial) -> Result<CMatrix> {
        let (d_s, d_e) = (self.dims.d_s(), self.dims.d_e());
        match mode {
            Mode::FixedState => Err(Error::Config("FixedState has no preparation unitary".into())),
            Mode::GlobalState => Ok(w * fiducial.world()?.amplitudes().adjoint()),
            Mode::SystemState => {
                // E = W F^dag with W, F the d_s x d_e coefficient matrices;
                // fiducial F = xi phi^T, so E = (W phi^*) xi^dag
                let phi = fiducial.phi.amplitudes();
                let mut wphi = CVector::zeros(d_s);
                for i in 0..d_s {
                    let mut z = C64::new(0.0, 0.0);
                    for j in 0..d_e {
                        z += w[i * d_e + j] * phi[j].conj();
                    }
                    wphi[i] = z;
                }
                Ok(&wphi * fiducial.xi.amplitudes().adjoint())
            }
        }
    }
}

/// Polar factor of `eta E/|E| + (1 - eta) U`. A singular mixture halves
/// `eta` up to [`MAX_HALVINGS`] times; after that `U` is returned unchanged.
pub fn svd_update(e: &CMatrix, current: &UnitaryMatrix, eta: f64) -> Result<UnitaryMatrix> {
    if e.shape() != (current.dim(), current.dim()) {
        return Err(Error::dims(current.dim(), e.nrows()));
    }
    let norm = e.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Ok(current.clone());
    }
    let e_hat = e.unscale(norm);
    let mut eta = eta.clamp(0.0, 1.0);
    for _ in 0..=MAX_HALVINGS {
        let m = e_hat.scale(eta) + current.matrix().scale(1.0 - eta);
        match closest_unitary(&m) {
            Ok(u) => return Ok(u),
            Err(Error::Singular(_)) => eta *= 0.5,
            Err(other) => return Err(other),
        }
    }
    Ok(current.clone())
}

/// Environment tensor of the summed-purity objective with respect to one
/// occurrence of `target`.
#[allow(clippy::too_many_arguments)]
pub fn environment_tensor(
    target: Target,
    mode: Mode,
    b: &UnitaryMatrix,
    a: Option<&UnitaryMatrix>,
    fiducial: &Fiducial,
    spec: &SpectralDecomposition,
    schedule: &TrainingSchedule,
    dims: BipartiteDims,
) -> Result<CMatrix> {
    dims.check_world(b.dim())?;
    let engine = Engine::new(spec, schedule, dims)?;
    let psi0 = initial_state(mode, a, dims, fiducial)?;
    let chi = engine.evolved(psi0.amplitudes());
    let eval = engine.evaluate(b.matrix(), &chi);
    match target {
        Target::B => Ok(engine.env_b(&eval, &chi)),
        Target::A => {
            let w = engine.state_gradient(&eval, b.matrix());
            engine.env_a(mode, &w, fiducial)
        }
    }
}

/// Summed purity `F = sum_k Tr[rho_k^2]`, the quantity the environment
/// tensors linearize.
pub fn purity_objective(
    psi0: &StateVector,
    b: &UnitaryMatrix,
    spec: &SpectralDecomposition,
    schedule: &TrainingSchedule,
    dims: BipartiteDims,
) -> Result<f64> {
    let engine = Engine::new(spec, schedule, dims)?;
    let chi = engine.evolved(psi0.amplitudes());
    Ok(engine.evaluate(b.matrix(), &chi).purities.iter().sum())
}

/// Starting unitaries drawn from the run seed: `B` first, then `A`.
pub fn initial_unitaries(mode: Mode, dims: BipartiteDims, seed: u64) -> (UnitaryMatrix, Option<UnitaryMatrix>) {
    let mut rng = rng_from_seed(seed);
    let b = haar_unitary(dims.d_w(), &mut rng);
    let a = mode.prep_dim(dims).map(|d| haar_unitary(d, &mut rng));
    (b, a)
}

pub fn optimize(h: &Hermitian, config: &OptimizerConfig, dims: BipartiteDims) -> Result<OptimizationResult> {
    let spec = SpectralDecomposition::new(h)?;
    optimize_with(&spec, config, dims, &Fiducial::zeros(dims))
}

/// [`optimize`] with a precomputed spectrum and an explicit fiducial state.
pub fn optimize_with(
    spec: &SpectralDecomposition,
    config: &OptimizerConfig,
    dims: BipartiteDims,
    fiducial: &Fiducial,
) -> Result<OptimizationResult> {
    config.validate()?;
    dims.check_world(spec.dim())?;
    let started = Instant::now();
    let schedule = make_schedule(spec, config.schedule)?;
    let engine = Engine::new(spec, &schedule, dims)?;
    let mode = config.mode;
    let (mut b, mut a) = initial_unitaries(mode, dims, config.seed);
    let mut psi0 = initial_state(mode, a.as_ref(), dims, fiducial)?;
    let mut chi = engine.evolved(psi0.amplitudes());
    let mut eval = engine.evaluate(b.matrix(), &chi);
    let mut cost = engine.cost_of(&eval);
    let mut history = Vec::with_capacity(1024);
    history.push(cost);

    let mut eta_scale = 1.0;
    let mut iterations = 0u64;
    let mut rejected = 0u64;
    let mut stop = StopReason::MaxIterations;
    if cost <= config.acceptance_threshold {
        stop = StopReason::Threshold;
    }
    while stop != StopReason::Threshold && iterations < config.max_iterations {
        let eta = learning_rate(iterations, config.learning_rate) * eta_scale;
        iterations += 1;

        let new_b = svd_update(&engine.env_b(&eval, &chi), &b, eta)?;
        let (new_a, new_psi0, new_chi) = match &a {
            None => (None, psi0.clone(), chi.clone()),
            Some(cur_a) => {
                let eval_b = engine.evaluate(new_b.matrix(), &chi);
                let w = engine.state_gradient(&eval_b, new_b.matrix());
                let e_a = engine.env_a(mode, &w, fiducial)?;
                let next_a = svd_update(&e_a, cur_a, eta)?;
                let next_psi0 = initial_state(mode, Some(&next_a), dims, fiducial)?;
                let next_chi = engine.evolved(next_psi0.amplitudes());
                (Some(next_a), next_psi0, next_chi)
            }
        };
        let new_eval = engine.evaluate(new_b.matrix(), &new_chi);
        let new_cost = engine.cost_of(&new_eval);

        if new_cost <= cost + ACCEPT_SLACK {
            b = new_b;
            a = new_a;
            psi0 = new_psi0;
            chi = new_chi;
            eval = new_eval;
            cost = new_cost;
            eta_scale = (eta_scale * 2.0).min(1.0);
        } else {
            rejected += 1;
            eta_scale *= 0.5;
        }
        history.push(cost);
        if cost <= config.acceptance_threshold {
            stop = StopReason::Threshold;
        }
    }

    Ok(OptimizationResult {
        b,
        a,
        psi0,
        final_cost: cost,
        cost_history: history,
        stop_reason: stop,
        iterations,
        rejected_sweeps: rejected,
        schedule,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
