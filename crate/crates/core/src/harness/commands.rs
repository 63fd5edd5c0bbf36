//! The `gen`, `tile`, `violin`, `classify` and `recipe` commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{cmd_optimize, create_dir, read_records, EvalConfig, ExperimentConfig, RunRecord, RunSeeds, CONFIG_FILE, RUNS_FILE};
use crate::analysis::{
    block_diagonal_tps, classify, perturbation_suite, verify_pointer, Label, SolutionCategory,
};
use crate::cost::{
    cost, decoherence_time_of, entropy_trajectory, late_time_grid, make_schedule, write_columns_csv,
};
use crate::error::{Error, Result};
use crate::hamiltonians::{Family, HamiltonianSpec};
use crate::hilbert::{
    haar_state, interaction_weight, pauli_decompose, read_cmat, rng_from_seed, schmidt_decompose, write_cmat,
    write_state, BipartiteDims, Hermitian, SpectralDecomposition,
};
use crate::optimizer::Mode;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenManifest {
    pub hamiltonian: HamiltonianSpec,
    pub dim: usize,
    pub spectrum: Vec<f64>,
    pub spectral_radius: f64,
    /// Absent for the zero operator.
    pub t_dec: Option<f64>,
    pub system_weight: f64,
    pub environment_weight: f64,
    /// Fraction of the non-identity Pauli weight on interaction strings.
    pub interaction_weight: f64,
}

/// Writes `hamiltonian.cmat` and `manifest.json` into the output directory.
pub fn cmd_gen(config: &ExperimentConfig) -> Result<GenManifest> {
    config.validate()?;
    let h = config.hamiltonian.build()?;
    let dims = config.hamiltonian.dims;
    let spec = SpectralDecomposition::new(&h)?;
    let w = interaction_weight(&pauli_decompose(&h, dims.n_w())?, dims)?;
    let total = w.system + w.environment + w.interaction;
    let manifest = GenManifest {
        hamiltonian: config.hamiltonian.clone(),
        dim: h.dim(),
        spectrum: spec.eigenvalues().to_vec(),
        spectral_radius: spec.spectral_radius(),
        t_dec: decoherence_time_of(&spec).ok(),
        system_weight: w.system,
        environment_weight: w.environment,
        interaction_weight: if total > 0.0 { w.interaction / total } else { 0.0 },
    };
    let out = &config.output_dir;
    create_dir(out)?;
    write_cmat(&out.join("hamiltonian.cmat"), h.matrix())?;
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Lowest `late_time_max_entropy` among successful records.
pub fn tile_minimum(records: &[RunRecord]) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| r.late_time_max_entropy)
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileTable {
    pub modes: Vec<Mode>,
    pub columns: Vec<String>,
    /// `values[row][col]`, NaN for a missing cell.
    pub values: Vec<Vec<f64>>,
    pub failed_runs: usize,
}

impl TileTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("mode,{}\n", self.columns.join(","));
        for (mode, row) in self.modes.iter().zip(&self.values) {
            s.push_str(mode.name());
            for v in row {
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn get(&self, mode: Mode, column: &str) -> Option<f64> {
        let r = self.modes.iter().position(|m| *m == mode)?;
        let c = self.columns.iter().position(|n| n == column)?;
        Some(self.values[r][c])
    }
}

fn cell_dir(root: &Path, mode: Mode, column: &str) -> PathBuf {
    root.join(mode.name()).join(column)
}

/// Sweeps every (mode, family) cell into `<out>/<mode>/<column>/` and writes
/// `tile.csv`: one row per mode, one column per family.
pub fn cmd_tile(config: &ExperimentConfig) -> Result<TileTable> {
    config.validate()?;
    let grid = config.tile.clone().unwrap_or_else(super::TileGrid::standard);
    let root = config.output_dir.clone();
    create_dir(&root)?;
    let mut values = Vec::new();
    let mut failed_runs = 0;
    for &mode in &grid.modes {
        let mut row = Vec::new();
        for column in &grid.columns {
            let mut cell = config.clone();
            cell.tile = None;
            cell.interpolation = None;
            cell.hamiltonian.family = column.family.clone();
            cell.optimizer.mode = mode;
            cell.output_dir = cell_dir(&root, mode, &column.name);
            let min = match cmd_optimize(&cell) {
                Ok(summary) => {
                    failed_runs += summary.failed;
                    tile_minimum(&summary.records)
                }
                Err(e) => {
                    log::warn!("cell {}/{} failed: {e}", mode.name(), column.name);
                    None
                }
            };
            if min.is_none() {
                log::warn!("cell {}/{} has no successful run", mode.name(), column.name);
            }
            row.push(min.unwrap_or(f64::NAN));
        }
        values.push(row);
    }
    let table = TileTable {
        modes: grid.modes.clone(),
        columns: grid.columns.iter().map(|c| c.name.clone()).collect(),
        values,
        failed_runs,
    };
    write_text(&root.join("tile.csv"), &table.to_csv())?;
    Ok(table)
}

pub const VIOLIN_COLUMNS: [&str; 5] = ["lambda", "run_id", "horizon", "worst_entropy", "category"];

#[derive(Debug, Clone, PartialEq)]
pub struct ViolinRow {
    pub lambda: f64,
    pub run_id: u64,
    /// `None` for the training times.
    pub horizon: Option<f64>,
    pub worst_entropy: f64,
    pub category: Label,
}

/// Worst-case entropies over the training times and over late-time grids up
/// to each horizon, for every run at every interpolation point.
pub fn cmd_violin(config: &ExperimentConfig) -> Result<(Vec<ViolinRow>, usize)> {
    config.validate()?;
    let interp = config
        .interpolation
        .clone()
        .ok_or_else(|| Error::Config("violin needs an [interpolation] section".into()))?;
    let root = config.output_dir.clone();
    create_dir(&root)?;
    let dims = config.hamiltonian.dims;
    let mut rows = Vec::new();
    let mut failed = 0;
    for (i, &lambda) in interp.lambdas.iter().enumerate() {
        let mut sub = config.clone();
        sub.interpolation = None;
        sub.tile = None;
        sub.hamiltonian.family = Family::Interpolated {
            from: Box::new(config.hamiltonian.family.clone()),
            to: Box::new(interp.to.clone()),
            lambda,
        };
        sub.output_dir = root.join(format!("lambda-{i:02}"));
        let summary = cmd_optimize(&sub)?;
        failed += summary.failed;
        for rec in summary.records.iter().filter(|r| r.is_ok()) {
            let run = rec
                .artifacts
                .as_ref()
                .ok_or_else(|| Error::Config(format!("run {} has no artifacts", rec.run_id)))?
                .load(&sub.output_dir)?;
            let spec = SpectralDecomposition::new(&run.hamiltonian)?;
            let label = rec.category.as_ref().map_or(Label::Unclassified, |c| c.label);
            let schedule = make_schedule(&spec, sub.optimizer.schedule)?;
            let train = cost(&run.psi0, &run.b, &spec, &schedule, dims)?;
            rows.push(ViolinRow {
                lambda,
                run_id: rec.run_id,
                horizon: None,
                worst_entropy: train.per_time_entropies.iter().cloned().fold(0.0, f64::max),
                category: label,
            });
            let t_dec = decoherence_time_of(&spec)?;
            for &horizon in &interp.horizons {
                let grid = late_time_grid(t_dec, horizon, config.eval.params.grid_points)?;
                let traj = entropy_trajectory(&run.psi0, &run.b, &spec, &grid, dims)?;
                rows.push(ViolinRow {
                    lambda,
                    run_id: rec.run_id,
                    horizon: Some(horizon),
                    worst_entropy: traj.into_iter().fold(0.0, f64::max),
                    category: label,
                });
            }
        }
    }
    let mut s = VIOLIN_COLUMNS.join(",");
    s.push('\n');
    for r in &rows {
        let horizon = r.horizon.map_or_else(|| "train".to_string(), |h| format!("{h:e}"));
        let _ = writeln!(s, "{:e},{},{horizon},{:e},{}", r.lambda, r.run_id, r.worst_entropy, r.category.name());
    }
    write_text(&root.join("violin.csv"), &s)?;
    Ok((rows, failed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedRun {
    pub source: PathBuf,
    pub run_id: u64,
    pub final_cost: f64,
    pub category: SolutionCategory,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassifySummary {
    pub counts: BTreeMap<Label, usize>,
    pub runs: Vec<ClassifiedRun>,
}

const CLASSIFY_EVIDENCE: [&str; 5] = [
    "training_cost",
    "late_time_max_entropy",
    "interaction_weight",
    "off_block_residual",
    "dominant_eigenstate_weight",
];

/// Reclassifies every successful run found in the sweep directories and
/// writes `categories.csv`, `classification.csv` and, for the lowest-cost run
/// of each category, `trajectories/<Category>.csv`.
pub fn cmd_classify(sweeps: &[PathBuf], eval: &EvalConfig, out: &Path) -> Result<ClassifySummary> {
    create_dir(out)?;
    let mut summary = ClassifySummary::default();
    let mut best: BTreeMap<Label, (f64, PathBuf, crate::hilbert::UnitaryMatrix, crate::hilbert::StateVector, Hermitian, BipartiteDims, u64)> =
        BTreeMap::new();
    for dir in sweeps {
        let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        let dims = cfg.hamiltonian.dims;
        for rec in read_records(&dir.join(RUNS_FILE))?.into_iter().filter(|r| r.is_ok()) {
            let art = rec
                .artifacts
                .as_ref()
                .ok_or_else(|| Error::Config(format!("run {} has no artifacts", rec.run_id)))?;
            let run = art.load(dir)?;
            let spec = SpectralDecomposition::new(&run.hamiltonian)?;
            let final_cost = rec.final_cost.unwrap_or(f64::INFINITY);
            let seed = RunSeeds::derive(cfg.master_seed, rec.run_id).analysis;
            let category = classify(
                &run.hamiltonian,
                &spec,
                &run.b,
                &run.psi0,
                final_cost,
                dims,
                &eval.thresholds,
                eval.params,
                seed,
            )?;
            *summary.counts.entry(category.label).or_default() += 1;
            let better = best.get(&category.label).is_none_or(|b| final_cost < b.0);
            if better {
                best.insert(
                    category.label,
                    (final_cost, dir.clone(), run.b, run.psi0, run.hamiltonian, dims, seed),
                );
            }
            summary.runs.push(ClassifiedRun {
                source: dir.clone(),
                run_id: rec.run_id,
                final_cost,
                category,
            });
        }
    }

    let mut counts = String::from("category,count\n");
    for (label, n) in &summary.counts {
        let _ = writeln!(counts, "{},{n}", label.name());
    }
    write_text(&out.join("categories.csv"), &counts)?;
    let mut table = format!("source,run_id,category,{}\n", CLASSIFY_EVIDENCE.join(","));
    for r in &summary.runs {
        let _ = write!(table, "{},{},{}", r.source.display(), r.run_id, r.category.label.name());
        for key in CLASSIFY_EVIDENCE {
            let _ = write!(table, ",{:e}", r.category.evidence.get(key).copied().unwrap_or(f64::NAN));
        }
        table.push('\n');
    }
    write_text(&out.join("classification.csv"), &table)?;

    let traj_dir = out.join("trajectories");
    if !best.is_empty() {
        create_dir(&traj_dir)?;
    }
    for (label, (_, _, b, psi0, h, dims, seed)) in best {
        let spec = SpectralDecomposition::new(&h)?;
        let t_dec = decoherence_time_of(&spec)?;
        let grid = late_time_grid(t_dec, eval.params.t_late, eval.params.grid_points)?;
        let path = traj_dir.join(format!("{}.csv", label.name()));
        let gap = 1.0 - schmidt_decompose(&b.apply(&psi0), dims)?.coefficients[0].powi(2);
        if gap <= 1e-6 {
            perturbation_suite(&spec, &b, &psi0, dims, &grid, seed)?.write_csv(&path)?;
        } else {
            let traj = entropy_trajectory(&psi0, &b, &spec, &grid, dims)?;
            write_columns_csv(&path, &["trained"], &grid, &[&traj])?;
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerReport {
    pub index: usize,
    /// Late-time worst-case entropy for each sampled environment state.
    pub max_entropy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeReport {
    pub n_s: u32,
    pub n_e: u32,
    pub t_dec: f64,
    pub t_late: f64,
    pub grid_points: usize,
    pub env_samples: usize,
    pub seed: u64,
    pub pointers: Vec<PointerReport>,
    pub worst_entropy: f64,
}

/// Builds the eigenbasis block-diagonal factorization of the Hamiltonian in
/// `h_path` and verifies each pointer state against `env_samples` Haar
/// environment states. Writes `B.cmat`, `pointer_<i>.cmat`,
/// `env_block_<i>.cmat` and `report.json`.
pub fn cmd_recipe(
    h_path: &Path,
    n_s: u32,
    out: &Path,
    eval: &EvalConfig,
    env_samples: usize,
    seed: u64,
) -> Result<RecipeReport> {
    let h = Hermitian::new(read_cmat(h_path)?)?;
    let dims = BipartiteDims::from_world(h.dim(), n_s)?;
    let spec = SpectralDecomposition::new(&h)?;
    let t_dec = decoherence_time_of(&spec)?;
    let solution = block_diagonal_tps(&h, dims)?;
    let mut rng = rng_from_seed(seed);
    let mut pointers = Vec::new();
    for i in 0..dims.d_s() {
        let mut max_entropy = Vec::with_capacity(env_samples);
        for _ in 0..env_samples {
            let psi = solution.world_state(i, &haar_state(dims.d_e(), &mut rng))?;
            let check = verify_pointer(&spec, &solution.b, &psi, dims, eval.params, eval.thresholds.pointer)?;
            max_entropy.push(check.max_entropy);
        }
        pointers.push(PointerReport { index: i, max_entropy });
    }
    let worst_entropy = pointers
        .iter()
        .flat_map(|p| p.max_entropy.iter().copied())
        .fold(0.0, f64::max);

    create_dir(out)?;
    write_cmat(&out.join("B.cmat"), solution.b.matrix())?;
    for (i, (chi, block)) in solution.pointer_states.iter().zip(&solution.env_blocks).enumerate() {
        write_state(&out.join(format!("pointer_{i}.cmat")), chi)?;
        write_cmat(&out.join(format!("env_block_{i}.cmat")), block.matrix())?;
    }
    let report = RecipeReport {
        n_s,
        n_e: dims.n_e(),
        t_dec,
        t_late: eval.params.t_late,
        grid_points: eval.params.grid_points,
        env_samples,
        seed,
        pointers,
        worst_entropy,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
