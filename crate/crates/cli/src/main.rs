//! `tpsearch` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tpsearch::harness::{
    cmd_classify, cmd_gen, cmd_optimize, cmd_recipe, cmd_tile, cmd_violin, EvalConfig, ExperimentConfig,
};

const EXIT_INPUT: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tpsearch", version, about = "Search for factorizations that admit pointer states")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Optimizer acceptance threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Maximum optimizer sweeps per run.
    #[arg(long, global = true)]
    max_iters: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the configured Hamiltonian and write it with a manifest.
    Gen,
    /// Run the seeded optimization sweep, appending to runs.jsonl.
    Optimize,
    /// Sweep every (mode, family) cell and write tile.csv.
    Tile,
    /// Sweep the interpolation grid and write violin.csv.
    Violin,
    /// Classify the runs in one or more sweep directories.
    Classify {
        /// Directories holding config.toml and runs.jsonl.
        sweeps: Vec<PathBuf>,
    },
    /// Build eigenbasis pointer states for a Hamiltonian file.
    Recipe {
        /// Hermitian matrix in cmat format.
        #[arg(long)]
        hamiltonian: PathBuf,
        /// System qubits.
        #[arg(long, default_value_t = 1)]
        n_s: u32,
        /// Haar environment states checked per pointer state.
        #[arg(long, default_value_t = 5)]
        env_samples: usize,
    },
}

impl Cli {
    fn experiment(&self) -> Result<ExperimentConfig, String> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| "this command needs --config <path>".to_string())?;
        let mut cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(t) = self.threshold {
            cfg.optimizer.acceptance_threshold = t;
        }
        if let Some(n) = self.max_iters {
            cfg.optimizer.max_iterations = n;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn eval(&self) -> Result<EvalConfig, String> {
        match &self.config {
            Some(_) => Ok(self.experiment()?.eval),
            None => Ok(EvalConfig::default()),
        }
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn partial(failed: usize) -> Result<u8, String> {
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see runs.jsonl");
        Ok(EXIT_PARTIAL)
    } else {
        Ok(0)
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    let err = |e: tpsearch::Error| e.to_string();
    match &cli.command {
        Command::Gen => {
            let cfg = cli.experiment()?;
            let m = cmd_gen(&cfg).map_err(err)?;
            println!(
                "wrote {}/hamiltonian.cmat (dim {}, t_dec {}, interaction weight {:e})",
                cfg.output_dir.display(),
                m.dim,
                m.t_dec.map_or_else(|| "undefined".into(), |t| format!("{t:e}")),
                m.interaction_weight
            );
            Ok(0)
        }
        Command::Optimize => {
            let cfg = cli.experiment()?;
            let s = cmd_optimize(&cfg).map_err(err)?;
            let threshold = s.records.iter().filter(|r| r.is_threshold()).count();
            println!(
                "{} executed, {} skipped, {} failed, {} of {} at threshold",
                s.executed,
                s.skipped,
                s.failed,
                threshold,
                s.records.len()
            );
            partial(s.failed)
        }
        Command::Tile => {
            let cfg = cli.experiment()?;
            let t = cmd_tile(&cfg).map_err(err)?;
            print!("{}", t.to_csv());
            partial(t.failed_runs)
        }
        Command::Violin => {
            let cfg = cli.experiment()?;
            let (rows, failed) = cmd_violin(&cfg).map_err(err)?;
            println!("wrote {} rows to {}/violin.csv", rows.len(), cfg.output_dir.display());
            partial(failed)
        }
        Command::Classify { sweeps } => {
            let eval = cli.eval()?;
            let out = cli.out_or("classified");
            let s = cmd_classify(sweeps, &eval, &out).map_err(err)?;
            println!("category,count");
            for (label, n) in &s.counts {
                println!("{},{n}", label.name());
            }
            Ok(0)
        }
        Command::Recipe {
            hamiltonian,
            n_s,
            env_samples,
        } => {
            let eval = cli.eval()?;
            let out = cli.out_or("recipe");
            let r = cmd_recipe(hamiltonian, *n_s, &out, &eval, *env_samples, cli.seed.unwrap_or(0)).map_err(err)?;
            for p in &r.pointers {
                let worst = p.max_entropy.iter().cloned().fold(0.0, f64::max);
                println!("pointer {}: max entropy {worst:e}", p.index);
            }
            println!("worst {:e}", r.worst_entropy);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
