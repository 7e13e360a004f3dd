use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fracxy_core::experiments::{self, dumped_tags, load_dump, ExperimentConfig, ExperimentKind, Report};
use fracxy_core::{jump_pairs, vorticity_measure, Error};

#[derive(Parser)]
#[command(name = "fracxy", version, about = "Lattice experiments for the n-well XY model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the parameter grid (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (or output file for `dump-field`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite and the flat-norm oracle comparison with default sizes.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Print a dumped field of a finished run as CSV.
    DumpField {
        run_dir: PathBuf,
        tag: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(anyhow::Error),
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) | Error::UnsupportedDomain(_) | Error::InvalidPrescription(_) => {
                Failure::Config(e.into())
            }
            e => Failure::Other(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn setup_workers(workers: Option<usize>) -> Result<(), Failure> {
    if let Some(w) = workers {
        if w == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--workers must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("starting the worker pool")?;
    }
    Ok(())
}

fn default_out(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", cfg.experiment.name(), cfg.seed)))
}

fn summarize(report: &Report) -> Vec<String> {
    match report {
        Report::CoreEnergy(r) => {
            let mut lines: Vec<String> = r
                .gamma
                .per_sigma
                .iter()
                .map(|s| format!("γ(σ = {}) = {:.4} ± {:.4}", s.sigma, s.gamma, s.error_bar))
                .collect();
            if let Some(g) = &r.gamma_frac {
                lines.extend(g.per_sigma.iter().map(|s| format!("γ′(σ = {}) = {:.4} ± {:.4}", s.sigma, s.gamma, s.error_bar)));
            }
            lines.extend(r.gaps.iter().map(|g| format!("γ′ − γ at σ = {}, ε = {}: {:.4}", g.sigma, g.epsilon, g.gap)));
            lines
        }
        Report::VortexScaling(r) => vec![format!(
            "slope {:.4} (expected {:.4}, relative error {:.4}), intercept {:.4}",
            r.fit.slope, r.expected_slope, r.relative_error, r.fit.intercept
        )],
        Report::StringTension(r) => r
            .rows
            .iter()
            .map(|t| format!("ε = {} angle {}°: tension {:.4}, predicted {:.4}", t.epsilon, t.angle_deg, t.tension, t.predicted))
            .collect(),
        Report::DipoleSweep(r) => r
            .sweeps
            .iter()
            .map(|s| match s.d_star {
                Some(d) => format!(
                    "ε = {}: d* = {:.3}, 2π/d* = {:.4}, tension {:.4}, balanced: {}",
                    s.epsilon,
                    d,
                    std::f64::consts::TAU / d,
                    s.tension,
                    s.balanced
                ),
                None => format!("ε = {}: no interior minimum ({:?})", s.epsilon, s.trend),
            })
            .collect(),
        Report::Invariants(r) => r
            .checks
            .iter()
            .map(|c| format!("{}: {} trials, {} violations, max defect {:.3e}", c.name, c.trials, c.violations, c.max_defect))
            .collect(),
        Report::FlatnormCheck(r) => vec![format!(
            "{} instances at resolution {}, {} violations",
            r.rows.len(),
            r.resolution,
            r.violations
        )],
    }
}

fn execute(cfg: ExperimentConfig, out: &Path) -> Result<bool, Failure> {
    let outcome = experiments::run_to_dir(cfg, out)?;
    for line in summarize(&outcome.report) {
        println!("{line}");
    }
    println!("artifacts in {}", outcome.dir.display());
    Ok(outcome.report.passed().unwrap_or(true))
}

fn run(config: &Path, common: Common) -> Result<bool, Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    setup_workers(common.workers)?;
    let out = common.out.unwrap_or_else(|| default_out(&cfg));
    execute(cfg, &out)
}

fn check(common: Common) -> Result<bool, Failure> {
    setup_workers(common.workers)?;
    let root = common.out;
    let mut passed = true;
    for kind in [ExperimentKind::Invariants, ExperimentKind::FlatnormCheck] {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.seed = common.seed.unwrap_or(0);
        let out = match &root {
            Some(r) => r.join(kind.name()),
            None => default_out(&cfg),
        };
        println!("[{}]", kind.name());
        passed &= execute(cfg, &out)?;
    }
    println!("{}", if passed { "all checks passed" } else { "CHECK FAILED" });
    Ok(passed)
}

fn dump_field(run_dir: &Path, tag: &str, common: Common) -> Result<bool, Failure> {
    let (meta, field) = match load_dump(run_dir, tag) {
        Ok(v) => v,
        Err(Error::Config(msg)) => {
            let tags = dumped_tags(run_dir).unwrap_or_default();
            return Err(Failure::Config(anyhow::anyhow!("{msg}; available: [{}]", tags.join(", "))));
        }
        Err(e) => return Err(e.into()),
    };
    let psi = field.scaled(meta.n as f64);
    let atoms = vorticity_measure(&psi).atoms.len();
    let jumps = jump_pairs(&field, meta.n).jump_bonds.len();
    eprintln!(
        "{tag}: {} sites, ε = {}, n = {}, {atoms} vortex cells, {jumps} jump bonds",
        field.domain().n_sites(),
        meta.epsilon,
        meta.n
    );
    let sink: Box<dyn Write> = match &common.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    field.write_csv(&mut w)?;
    w.flush().context("writing field")?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, common } => run(&config, common),
        Command::Check { common } => check(common),
        Command::DumpField { run_dir, tag, common } => dump_field(&run_dir, &tag, common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
