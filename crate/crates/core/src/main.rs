use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowlab::error::Error;
use flowlab::exp::{emit_report, run, ExperimentConfig, ExperimentKind};

#[derive(Parser, Debug)]
#[command(name = "flowlab", version, about = "Strip-field SDE experiments")]
struct Cli {
    /// TOML experiment configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: config output_dir, else ./out/<experiment>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Step policy constant rho in dt <= (rho / a)^2.
    #[arg(long = "dt-rho", global = true)]
    dt_rho: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Validate and sample the coefficient field.
    CoeffProbe,
    /// Realized QV, cross-QV and correlations over the epsilon list.
    Homog,
    /// Cross-QV and increment correlation at widely separated scales.
    CrossQv,
    /// Probability of a union of shared-noise passage events.
    Union,
    /// Planner and level race over many seeds.
    Race,
    /// Counting bounds against exact oracles, passage bounds against Monte Carlo.
    BcSuite,
    /// Passage plan and its Monte Carlo validation.
    Plan,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::CoeffProbe => ExperimentKind::CoeffProbe,
            Command::Homog => ExperimentKind::HomogSweep,
            Command::CrossQv => ExperimentKind::CrossQv,
            Command::Union => ExperimentKind::UnionProb,
            Command::Race => ExperimentKind::Race,
            Command::BcSuite => ExperimentKind::BcSuite,
            Command::Plan => ExperimentKind::CorollaryPlan,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(rho) = cli.dt_rho {
        cfg.rho = rho;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let kind = cli.command.kind();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("flowlab: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(expected) = cfg.experiment {
        if expected != kind {
            eprintln!(
                "flowlab: config is for experiment {}, not {}",
                expected.name(),
                kind.name()
            );
            return ExitCode::from(2);
        }
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("flowlab: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("flowlab: thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let report = match run(kind, &cfg) {
        Ok(r) => r,
        Err(e @ (Error::Config(_) | Error::Parameter(_) | Error::Io { .. })) => {
            eprintln!("flowlab: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("flowlab: {} failed: {e}", kind.name());
            return ExitCode::from(1);
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    if let Err(e) = emit_report(&report, &cfg.to_toml(), &dir) {
        eprintln!("flowlab: {e}");
        return ExitCode::from(2);
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    println!("wrote {}", dir.display());
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
