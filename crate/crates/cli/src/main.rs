use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qtwin::config::RunConfig;
use qtwin::gateset::Instruction;
use qtwin::pipeline::{self, C1_DIR, C2_DIR};
use qtwin::workflows::Dataset;
use qtwin::Error;

#[derive(Parser)]
#[command(name = "qtwin", version, about = "Pulse-level digital twin: optimal control, calibration and model learning")]
struct Cli {
    /// Cap on worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one stage or the whole pipeline.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Stage::All)]
        stage: Stage,
        /// Root seed; replaces the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root; replaces the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Config override as a dotted path, e.g. `calibration.cma.popsize=12`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Function-evaluation budget of the optimal-control stage.
        #[arg(long)]
        maxfun: Option<usize>,
        /// Starting gate-set for calibration; defaults to the optimal-control
        /// output when present, else the configured gate-set.
        #[arg(long)]
        gateset: Option<PathBuf>,
        /// Calibration dataset for model learning; defaults to the
        /// calibration output.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Print the level populations of gate sequences as JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// JSON list of gate-name lists.
        #[arg(long)]
        sequences: PathBuf,
        /// Gate-set to simulate; defaults to the configured one.
        #[arg(long)]
        gateset: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    C1,
    C2,
    C3,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.cmd {
        Cmd::Run { config, stage, seed, out, mut set, maxfun, gateset, dataset } => {
            if let Some(s) = seed {
                set.push(format!("seed={s}"));
            }
            if let Some(m) = maxfun {
                set.push(format!("optimal_control.lbfgs.maxfun={m}"));
            }
            run(&config, stage, &set, out, gateset, dataset)
        }
        Cmd::Simulate { config, sequences, gateset, set } => simulate(&config, &sequences, gateset, &set),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(config: &Path, stage: Stage, set: &[String], out: Option<PathBuf>, gateset: Option<PathBuf>, dataset: Option<PathBuf>) -> qtwin::Result<()> {
    let cfg = RunConfig::load(config, set)?;
    let out = out.unwrap_or_else(|| cfg.out.clone());

    if matches!(stage, Stage::C1 | Stage::All) {
        let s = pipeline::run_optimal_control_stage(&cfg, &out)?;
        println!(
            "c1: infidelity {:.6e} -> {:.6e} ({} evaluations, {})",
            s.initial_infidelity, s.final_infidelity, s.result.n_evals, s.result.termination
        );
    }
    if matches!(stage, Stage::C2 | Stage::All) {
        let instructions = calibration_start(&cfg, &out, gateset.as_deref())?;
        let s = pipeline::run_calibration_stage(&cfg, instructions, &out)?;
        println!(
            "c2: ORBIT loss {:.6} -> {:.6} ({} evaluations, {}); device infidelity {:.6e}",
            s.initial_loss, s.best_loss, s.result.n_evals, s.result.termination, s.device_infidelity
        );
    }
    if matches!(stage, Stage::C3 | Stage::All) {
        let path = dataset.unwrap_or_else(|| out.join(C2_DIR).join("dataset.json"));
        let s = pipeline::run_learning_stage(&cfg, Dataset::read(&path)?, &out)?;
        for (group, (a, b)) in cfg.model_learning.opt_map.iter().zip(s.initial.iter().zip(&s.learned)) {
            println!("c3: {} {} -> {} {}", group[0], a.value(), b.value(), b.unit().symbol());
        }
        println!("c3: loss {:.6} ({} evaluations, {})", s.result.best_f, s.result.n_evals, s.result.termination);
    }
    Ok(())
}

fn calibration_start(cfg: &RunConfig, out: &Path, explicit: Option<&Path>) -> qtwin::Result<Vec<Instruction>> {
    if let Some(p) = explicit {
        return pipeline::read_gateset(p);
    }
    let saved = out.join(C1_DIR).join("gateset.json");
    if saved.exists() {
        pipeline::read_gateset(saved)
    } else {
        cfg.gateset.instructions()
    }
}

fn simulate(config: &Path, sequences: &Path, gateset: Option<PathBuf>, set: &[String]) -> qtwin::Result<()> {
    let cfg = RunConfig::load(config, set)?;
    let text = std::fs::read_to_string(sequences).map_err(|e| Error::Io { path: sequences.display().to_string(), source: e })?;
    let seqs: Vec<Vec<String>> = serde_json::from_str(&text)?;
    let instructions = match gateset {
        Some(p) => pipeline::read_gateset(p)?,
        None => cfg.gateset.instructions()?,
    };
    let pops = pipeline::simulate(&cfg, instructions, &seqs)?;
    println!("{}", serde_json::to_string(&pops)?);
    Ok(())
}
