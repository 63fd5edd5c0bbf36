//! Experiment configuration, seeded sweeps, run records and exports.
//!
//! A sweep is fully determined by its [`ExperimentConfig`]: run `i` uses the
//! seed `split_seed(master_seed, i)`, from which the optimizer, Hamiltonian
//! and analysis seeds are derived by further splitting (streams 0, 1, 2).

mod commands;
mod sweep;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{ClassifierThresholds, EvalParams, SolutionCategory};
use crate::error::{Error, Result};
use crate::hamiltonians::{CentralSpinParams, Family, HamiltonianSpec, TracePolicy};
use crate::hilbert::{read_cmat, read_state, split_seed, Hermitian, StateVector, UnitaryMatrix};
use crate::optimizer::{Mode, OptimizerConfig, StopReason};

pub use commands::{
    cmd_classify, cmd_gen, cmd_recipe, cmd_tile, cmd_violin, tile_minimum, ClassifySummary, GenManifest,
    PointerReport, RecipeReport, TileTable, VIOLIN_COLUMNS,
};
pub use sweep::{cmd_optimize, SweepSummary};

pub const RECORD_SCHEMA: &str = "runrecord/1";
pub const RUNS_FILE: &str = "runs.jsonl";
pub const CONFIG_FILE: &str = "config.toml";

fn default_runs() -> usize {
    100
}

fn default_true() -> bool {
    true
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_horizons() -> Vec<f64> {
    vec![1e2, 1e3, 1e4, crate::cost::DEFAULT_T_LATE]
}

/// Late-time grid and classifier thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(flatten)]
    pub params: EvalParams,
    #[serde(default)]
    pub thresholds: ClassifierThresholds,
}

/// `lambda` sweep from the configured family towards `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpolation {
    pub to: Family,
    pub lambdas: Vec<f64>,
    /// Late-time horizons (absolute time) for the worst-case statistic.
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileColumn {
    pub name: String,
    #[serde(flatten)]
    pub family: Family,
}

/// Families (columns) and modes (rows) of the tile summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileGrid {
    pub columns: Vec<TileColumn>,
    #[serde(default = "all_modes")]
    pub modes: Vec<Mode>,
}

fn all_modes() -> Vec<Mode> {
    Mode::ALL.to_vec()
}

impl TileGrid {
    /// Decoupled (central spin at zero coupling), central spin, tensor
    /// product and random global Hamiltonians.
    pub fn standard() -> Self {
        let column = |name: &str, family| TileColumn {
            name: name.into(),
            family,
        };
        Self {
            columns: vec![
                column(
                    "decoupled",
                    Family::CentralSpin(CentralSpinParams {
                        beta: 0.0,
                        ..Default::default()
                    }),
                ),
                column("central_spin", Family::CentralSpin(CentralSpinParams::default())),
                column(
                    "qml",
                    Family::QuantumMeasurementLimit {
                        trace_policy: TracePolicy::default(),
                    },
                ),
                column("random", Family::RandomGlobal { traceless: false }),
            ],
            modes: all_modes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: HamiltonianSpec,
    /// `optimizer.seed` is replaced by the per-run seed in sweeps.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Draw a fresh Hamiltonian per run for random families.
    #[serde(default = "default_true")]
    pub resample_hamiltonian: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<Interpolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<TileGrid>,
}

impl ExperimentConfig {
    pub fn new(hamiltonian: HamiltonianSpec, optimizer: OptimizerConfig) -> Self {
        Self {
            hamiltonian,
            optimizer,
            n_runs: default_runs(),
            master_seed: 0,
            resample_hamiltonian: true,
            output_dir: default_output(),
            workers: None,
            eval: EvalConfig::default(),
            interpolation: None,
            tile: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.hamiltonian.dims;
        crate::hilbert::BipartiteDims::new(dims.n_s(), dims.n_e())?;
        self.optimizer.validate()?;
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if self.master_seed > i64::MAX as u64 || self.hamiltonian.seed > i64::MAX as u64 {
            return Err(Error::Config("seeds must fit in a signed 64-bit integer".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let p = self.eval.params;
        if !(p.t_late > 0.0) || p.grid_points == 0 {
            return Err(Error::Config("eval needs t_late > 0 and grid_points >= 1".into()));
        }
        if let Some(interp) = &self.interpolation {
            if interp.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
                return Err(Error::Config("interpolation lambdas must lie in [0, 1]".into()));
            }
            if interp.horizons.iter().any(|h| !(*h > 0.0)) {
                return Err(Error::Config("interpolation horizons must be positive".into()));
            }
        }
        if let Some(tile) = &self.tile {
            if tile.columns.is_empty() || tile.modes.is_empty() {
                return Err(Error::Config("tile needs at least one column and one mode".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the result-relevant settings (everything except the output
    /// directory and the worker count).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.workers = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Seeds used by one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub run: u64,
    pub optimizer: u64,
    pub hamiltonian: u64,
    pub analysis: u64,
}

impl RunSeeds {
    pub fn derive(master_seed: u64, run_index: u64) -> Self {
        let run = split_seed(master_seed, run_index);
        Self {
            run,
            optimizer: split_seed(run, 0),
            hamiltonian: split_seed(run, 1),
            analysis: split_seed(run, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Artifact paths relative to the sweep directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub hamiltonian: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    pub psi0: String,
    pub history: String,
    pub trajectory: String,
}

/// Artifacts read back and validated.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub hamiltonian: Hermitian,
    pub b: UnitaryMatrix,
    pub a: Option<UnitaryMatrix>,
    pub psi0: StateVector,
}

impl Artifacts {
    pub fn load(&self, root: &Path) -> Result<LoadedRun> {
        Ok(LoadedRun {
            hamiltonian: Hermitian::new(read_cmat(&root.join(&self.hamiltonian))?)?,
            b: UnitaryMatrix::new(read_cmat(&root.join(&self.b))?)?,
            a: match &self.a {
                Some(p) => Some(UnitaryMatrix::new(read_cmat(&root.join(p))?)?),
                None => None,
            },
            psi0: read_state(&root.join(&self.psi0))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub optimize_secs: f64,
    pub analysis_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub run_id: u64,
    pub config_hash: String,
    pub seed: u64,
    pub hamiltonian_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub mode: Mode,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub final_cost: Option<f64>,
    pub stop_reason: Option<StopReason>,
    pub iterations: u64,
    pub rejected_sweeps: u64,
    pub late_time_max_entropy: Option<f64>,
    pub category: Option<SolutionCategory>,
    pub eval: EvalConfig,
    pub artifacts: Option<Artifacts>,
    pub timings: Timings,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn is_threshold(&self) -> bool {
        self.stop_reason == Some(StopReason::Threshold)
    }
}

/// Reads `runs.jsonl`, keeping the last record per `run_id`, ordered by id.
/// A missing file gives no records.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut by_id = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg: e.to_string(),
        })?;
        if rec.schema != RECORD_SCHEMA {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: format!("unknown schema `{}`", rec.schema),
            });
        }
        by_id.insert(rec.run_id, rec);
    }
    Ok(by_id.into_values().collect())
}

/// Drops an unterminated trailing line left by an interrupted write.
pub(crate) fn repair_runs_file(path: &Path) -> Result<()> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(Error::io(path, e)),
    };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    log::warn!("{}: dropping incomplete trailing record", path.display());
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes[..keep]).map_err(|e| Error::io(path, e))
}

/// A JSON line with its `timings` object removed, for reproducibility checks.
pub fn strip_timings(line: &str) -> Result<String> {
    let mut v: serde_json::Value = serde_json::from_str(line)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timings");
    }
    Ok(serde_json::to_string(&v)?)
}

/// Relative path with forward slashes.
pub(crate) fn rel(parts: &[&str]) -> String {
    parts.join("/")
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BipartiteDims;

    fn sample() -> ExperimentConfig {
        let dims = BipartiteDims::new(1, 2).unwrap();
        let mut cfg = ExperimentConfig::new(
            HamiltonianSpec::new(Family::CentralSpin(CentralSpinParams::default()), dims, 3),
            OptimizerConfig::default(),
        );
        cfg.n_runs = 7;
        cfg.master_seed = 11;
        cfg.interpolation = Some(Interpolation {
            to: Family::RandomGlobal { traceless: true },
            lambdas: vec![0.0, 0.25, 1.0],
            horizons: default_horizons(),
        });
        cfg.tile = Some(TileGrid::standard());
        cfg
    }

    #[test]
    fn toml_round_trip() {
        let cfg = sample();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let text = r#"
[hamiltonian]
family = "random_global"
dims = { n_s = 1, n_e = 2 }
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.n_runs, 100);
        assert_eq!(cfg.optimizer.max_iterations, 100_000);
        assert_eq!(cfg.optimizer.acceptance_threshold, 1e-13);
        assert_eq!(cfg.eval.params.grid_points, 64);
        assert_eq!(cfg.eval.thresholds.dominance, 0.8);
        assert!(cfg.resample_hamiltonian);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(ExperimentConfig::from_toml("bogus = 1\n[hamiltonian]\nfamily=\"random_global\"\ndims={n_s=1,n_e=2}\n").is_err());
        let text = "n_runs = 0\n[hamiltonian]\nfamily=\"random_global\"\ndims={n_s=1,n_e=2}\n";
        assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = sample();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.workers = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.master_seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn run_seeds_are_distinct_and_stable() {
        let s = RunSeeds::derive(5, 0);
        assert_eq!(s, RunSeeds::derive(5, 0));
        assert_ne!(s.run, RunSeeds::derive(5, 1).run);
        assert_ne!(s.optimizer, s.hamiltonian);
        assert_ne!(s.hamiltonian, s.analysis);
    }

    #[test]
    fn strip_timings_removes_only_timings() {
        let line = r#"{"a":1,"timings":{"optimize_secs":2.0},"b":[1,2]}"#;
        assert_eq!(strip_timings(line).unwrap(), r#"{"a":1,"b":[1,2]}"#);
    }

    #[test]
    fn repair_drops_partial_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(RUNS_FILE);
        std::fs::write(&p, "{\"x\":1}\n{\"trunc").unwrap();
        repair_runs_file(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "{\"x\":1}\n");
    }
}
