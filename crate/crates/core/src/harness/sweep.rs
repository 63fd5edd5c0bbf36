//! Seeded, resumable sweep over independent optimization runs.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;

use super::{
    create_dir, read_records, rel, repair_runs_file, Artifacts, ExperimentConfig, RunRecord, RunSeeds, RunStatus,
    Timings, CONFIG_FILE, RECORD_SCHEMA, RUNS_FILE,
};
use crate::analysis::{classify_result, SolutionCategory};
use crate::cost::{entropy_trajectory, late_time_grid, write_trajectory_csv};
use crate::error::{Error, Result};
use crate::hamiltonians::{Family, HamiltonianSpec};
use crate::hilbert::{write_cmat, write_state, BipartiteDims, Hermitian, SpectralDecomposition};
use crate::optimizer::{optimize_with, write_history_csv, Fiducial, OptimizationResult};

const SHARED_HAMILTONIAN: &str = "hamiltonian.cmat";

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub output_dir: PathBuf,
    /// Runs executed by this invocation.
    pub executed: usize,
    /// Runs skipped because they already had a successful record.
    pub skipped: usize,
    pub failed: usize,
    /// All records in the sweep directory, ordered by `run_id`.
    pub records: Vec<RunRecord>,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    hash: String,
    root: PathBuf,
    dims: BipartiteDims,
    /// Present when every run uses the same Hamiltonian.
    shared: Option<(Hermitian, SpectralDecomposition)>,
}

fn lambda_of(spec: &HamiltonianSpec) -> Option<f64> {
    match &spec.family {
        Family::Interpolated { lambda, .. } => Some(*lambda),
        _ => None,
    }
}

/// Runs `config.n_runs` optimizations on a worker pool and appends one JSON
/// line per run to `<output_dir>/runs.jsonl`, in run order. Runs that already
/// have a successful record are skipped.
pub fn cmd_optimize(config: &ExperimentConfig) -> Result<SweepSummary> {
    config.validate()?;
    let root = config.output_dir.clone();
    create_dir(&root)?;
    let runs_path = root.join(RUNS_FILE);
    repair_runs_file(&runs_path)?;
    let hash = config.hash();
    let existing = read_records(&runs_path)?;
    if let Some(r) = existing.iter().find(|r| r.config_hash != hash) {
        return Err(Error::Config(format!(
            "{} holds run {} from a different configuration (hash {})",
            runs_path.display(),
            r.run_id,
            r.config_hash
        )));
    }
    config.save(&root.join(CONFIG_FILE))?;

    let dims = BipartiteDims::new(config.hamiltonian.dims.n_s(), config.hamiltonian.dims.n_e())?;
    let shared = if config.resample_hamiltonian && config.hamiltonian.is_random() {
        None
    } else {
        let h = config.hamiltonian.build()?;
        write_cmat(&root.join(SHARED_HAMILTONIAN), h.matrix())?;
        let spec = SpectralDecomposition::new(&h)?;
        Some((h, spec))
    };
    let ctx = Context {
        config,
        hash,
        root: root.clone(),
        dims,
        shared,
    };

    let done: HashSet<u64> = existing.iter().filter(|r| r.is_ok()).map(|r| r.run_id).collect();
    let pending: Vec<u64> = (0..config.n_runs as u64).filter(|id| !done.contains(id)).collect();
    let skipped = config.n_runs - pending.len();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<RunRecord>();
    let failed = std::thread::scope(|scope| -> Result<usize> {
        let writer = scope.spawn(|| append_in_order(&runs_path, &pending, rx));
        pool.install(|| {
            pending
                .par_iter()
                .for_each_with(tx, |tx, &id| {
                    // the receiver only disappears if the appender failed
                    let _ = tx.send(execute(&ctx, id));
                })
        });
        writer.join().expect("appender thread panicked")
    })?;

    Ok(SweepSummary {
        output_dir: root,
        executed: pending.len(),
        skipped,
        failed,
        records: read_records(&runs_path)?,
    })
}

/// Single appender: buffers out-of-order completions and writes records in
/// the order of `pending`.
fn append_in_order(path: &Path, pending: &[u64], rx: mpsc::Receiver<RunRecord>) -> Result<usize> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut buffer = BTreeMap::new();
    let mut next = 0;
    let mut failed = 0;
    for rec in rx {
        buffer.insert(rec.run_id, rec);
        while next < pending.len() {
            let Some(rec) = buffer.remove(&pending[next]) else { break };
            if !rec.is_ok() {
                log::warn!("run {} failed: {}", rec.run_id, rec.error.as_deref().unwrap_or("unknown error"));
                failed += 1;
            }
            let mut line = serde_json::to_string(&rec)?;
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
            file.flush().map_err(|e| Error::io(path, e))?;
            next += 1;
        }
    }
    Ok(failed)
}

fn execute(ctx: &Context<'_>, run_id: u64) -> RunRecord {
    let seeds = RunSeeds::derive(ctx.config.master_seed, run_id);
    let resampled = ctx.shared.is_none();
    let mut record = RunRecord {
        schema: RECORD_SCHEMA.to_string(),
        run_id,
        config_hash: ctx.hash.clone(),
        seed: seeds.run,
        hamiltonian_seed: if resampled { seeds.hamiltonian } else { ctx.config.hamiltonian.seed },
        lambda: lambda_of(&ctx.config.hamiltonian),
        mode: ctx.config.optimizer.mode,
        status: RunStatus::Ok,
        error: None,
        final_cost: None,
        stop_reason: None,
        iterations: 0,
        rejected_sweeps: 0,
        late_time_max_entropy: None,
        category: None,
        eval: ctx.config.eval,
        artifacts: None,
        timings: Timings::default(),
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| run(ctx, run_id, &seeds, record.hamiltonian_seed)));
    let err = match outcome {
        Ok(Ok(done)) => {
            record.final_cost = Some(done.result.final_cost);
            record.stop_reason = Some(done.result.stop_reason);
            record.iterations = done.result.iterations;
            record.rejected_sweeps = done.result.rejected_sweeps;
            record.late_time_max_entropy = done.category.evidence.get("late_time_max_entropy").copied();
            record.category = Some(done.category);
            record.artifacts = Some(done.artifacts);
            record.timings = Timings {
                optimize_secs: done.result.wall_time_secs,
                analysis_secs: done.analysis_secs,
            };
            return record;
        }
        Ok(Err(e)) => e.to_string(),
        Err(panic) => panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "worker panicked".into()),
    };
    record.status = RunStatus::Failed;
    record.error = Some(err);
    record
}

struct Completed {
    result: OptimizationResult,
    category: SolutionCategory,
    artifacts: Artifacts,
    analysis_secs: f64,
}

fn run(ctx: &Context<'_>, run_id: u64, seeds: &RunSeeds, hamiltonian_seed: u64) -> Result<Completed> {
    let cfg = ctx.config;
    let dims = ctx.dims;
    let name = format!("run-{run_id:05}");
    let dir = ctx.root.join("runs").join(&name);
    create_dir(&dir)?;

    let owned;
    let (h, spec, h_path) = match &ctx.shared {
        Some((h, spec)) => (h, spec, SHARED_HAMILTONIAN.to_string()),
        None => {
            let mut hs = cfg.hamiltonian.clone();
            hs.seed = hamiltonian_seed;
            let h = hs.build()?;
            write_cmat(&dir.join("hamiltonian.cmat"), h.matrix())?;
            let spec = SpectralDecomposition::new(&h)?;
            owned = (h, spec);
            (&owned.0, &owned.1, rel(&["runs", &name, "hamiltonian.cmat"]))
        }
    };

    let mut opt = cfg.optimizer.clone();
    opt.seed = seeds.optimizer;
    let result = optimize_with(spec, &opt, dims, &Fiducial::zeros(dims))?;

    let started = Instant::now();
    let eval = cfg.eval;
    let category = classify_result(h, spec, &result, dims, &eval.thresholds, eval.params, seeds.analysis)?;
    let t_dec = crate::cost::decoherence_time_of(spec)?;
    let grid = late_time_grid(t_dec, eval.params.t_late, eval.params.grid_points)?;
    let trajectory = entropy_trajectory(&result.psi0, &result.b, spec, &grid, dims)?;
    let analysis_secs = started.elapsed().as_secs_f64();

    write_cmat(&dir.join("B.cmat"), result.b.matrix())?;
    if let Some(a) = &result.a {
        write_cmat(&dir.join("A.cmat"), a.matrix())?;
    }
    write_state(&dir.join("psi0.cmat"), &result.psi0)?;
    write_history_csv(&dir.join("history.csv"), &result.thinned_history())?;
    write_trajectory_csv(&dir.join("trajectory.csv"), &grid, &trajectory)?;
    let artifacts = Artifacts {
        hamiltonian: h_path,
        b: rel(&["runs", &name, "B.cmat"]),
        a: result.a.as_ref().map(|_| rel(&["runs", &name, "A.cmat"])),
        psi0: rel(&["runs", &name, "psi0.cmat"]),
        history: rel(&["runs", &name, "history.csv"]),
        trajectory: rel(&["runs", &name, "trajectory.csv"]),
    };
    Ok(Completed {
        result,
        category,
        artifacts,
        analysis_secs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{cost, make_schedule};
    use crate::hamiltonians::CentralSpinParams;
    use crate::optimizer::{initial_state, Mode, OptimizerConfig};

    fn config(dir: &Path, family: Family, mode: Mode, runs: usize, iters: u64) -> ExperimentConfig {
        let dims = BipartiteDims::new(1, 2).unwrap();
        let mut cfg = ExperimentConfig::new(
            HamiltonianSpec::new(family, dims, 0),
            OptimizerConfig {
                mode,
                max_iterations: iters,
                ..Default::default()
            },
        );
        cfg.n_runs = runs;
        cfg.master_seed = 42;
        cfg.output_dir = dir.to_path_buf();
        cfg.eval.params.grid_points = 16;
        cfg
    }

    fn stripped(path: &Path) -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| super::super::strip_timings(l).unwrap())
            .collect()
    }

    #[test]
    fn records_validate_and_reproduce_cost() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Family::RandomGlobal { traceless: false }, Mode::SystemState, 3, 200);
        let summary = cmd_optimize(&cfg).unwrap();
        assert_eq!((summary.executed, summary.skipped, summary.failed), (3, 0, 0));
        assert_eq!(summary.records.len(), 3);
        let dims = BipartiteDims::new(1, 2).unwrap();
        let mut seeds = HashSet::new();
        for rec in &summary.records {
            assert!(seeds.insert(rec.hamiltonian_seed));
            let art = rec.artifacts.as_ref().unwrap();
            let run = art.load(dir.path()).unwrap();
            let spec = SpectralDecomposition::new(&run.hamiltonian).unwrap();
            let schedule = make_schedule(&spec, cfg.optimizer.schedule).unwrap();
            let c = cost(&run.psi0, &run.b, &spec, &schedule, dims).unwrap().cost;
            assert!((c - rec.final_cost.unwrap()).abs() <= 1e-12);
            let psi = initial_state(Mode::SystemState, run.a.as_ref(), dims, &Fiducial::zeros(dims)).unwrap();
            assert!(psi.overlap(&run.psi0) > 1.0 - 1e-12);
            assert!(rec.category.as_ref().unwrap().evidence.contains_key("off_block_residual"));
        }
    }

    #[test]
    fn rerun_is_identical_and_resume_skips() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let family = Family::CentralSpin(CentralSpinParams::default());
        let ca = config(a.path(), family.clone(), Mode::GlobalState, 4, 100);
        let mut cb = ca.clone();
        cb.output_dir = b.path().to_path_buf();
        cb.workers = Some(2);
        cmd_optimize(&ca).unwrap();
        cmd_optimize(&cb).unwrap();
        assert_eq!(stripped(&a.path().join(RUNS_FILE)), stripped(&b.path().join(RUNS_FILE)));

        let again = cmd_optimize(&ca).unwrap();
        assert_eq!((again.executed, again.skipped), (0, 4));
        assert_eq!(stripped(&a.path().join(RUNS_FILE)).len(), 4);

        let mut more = ca.clone();
        more.n_runs = 5;
        assert!(matches!(cmd_optimize(&more), Err(Error::Config(_))));
    }

    #[test]
    fn partial_file_resumes_missing_runs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Family::CentralSpin(CentralSpinParams::default()), Mode::FixedState, 3, 50);
        cmd_optimize(&cfg).unwrap();
        let path = dir.path().join(RUNS_FILE);
        let full = stripped(&path);
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        std::fs::write(&path, format!("{first}\n{{\"partial")).unwrap();
        let summary = cmd_optimize(&cfg).unwrap();
        assert_eq!((summary.executed, summary.skipped), (2, 1));
        assert_eq!(stripped(&path), full);
    }

    #[test]
    fn failing_runs_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        // n_e = 4 is outside the non-commuting preset, so every build fails
        let dims = BipartiteDims::new(1, 4).unwrap();
        let mut cfg = config(dir.path(), Family::CentralSpin(CentralSpinParams::default()), Mode::FixedState, 2, 10);
        cfg.hamiltonian.dims = dims;
        assert!(cmd_optimize(&cfg).is_err());

        let mut cfg = config(dir.path(), Family::DfsSplit { dfs_size: 99 }, Mode::FixedState, 2, 10);
        cfg.hamiltonian.dims = BipartiteDims::new(1, 2).unwrap();
        let summary = cmd_optimize(&cfg).unwrap();
        assert_eq!(summary.failed, 2);
        assert!(summary.records.iter().all(|r| r.status == RunStatus::Failed && r.error.is_some()));
    }
}
