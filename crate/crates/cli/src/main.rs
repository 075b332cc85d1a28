use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use slelab_core::SleError;
use slelab_cli::config::{load_file, resolve, RunConfig};
use slelab_cli::run::{execute, write_summary, Outcome};
use slelab_cli::store::{run_id, ResultStore, RunManifest};

/// Chordal SLE hitting experiments.
#[derive(Parser, Debug)]
#[command(name = "slelab", version)]
struct Cli {
    /// JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Result store directory.
    #[arg(long, env = "SLELAB_RESULTS", default_value = "slelab-results", global = true)]
    results: PathBuf,
    /// Store a run even if its id is already present.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep step relative to the squared leftmost gap.
    #[arg(long)]
    rel_step: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// P(T_x > T_y) against F(y/x).
    Hit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
    },
    /// Hitting both [y, y + eps] and [x, x + eps]; several eps fit the decay.
    TwoHit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Box-counting slope of the curve's trace on [0, 1].
    Dimension {
        #[command(flatten)]
        common: Common,
        /// Coarsest and finest level, e.g. 4,11.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
    },
    /// Probability that the curve passes within r of x before swallowing y.
    NearMiss {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Relative spacing of hull samples along each step.
        #[arg(long)]
        mesh: Option<f64>,
    },
    /// KS test of T_x against x^2 T_1.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: Option<f64>,
    },
    /// CSV of (v, F(v)).
    Tables {
        #[arg(long)]
        kappa: Option<f64>,
        /// lo:hi:step
        #[arg(long)]
        grid: Option<String>,
    },
}

fn common_flags(c: &Common) -> RunConfig {
    RunConfig {
        kappa: c.kappa,
        samples: c.samples,
        seed: c.seed,
        rel_step: c.rel_step,
        max_steps: c.max_steps,
        ..Default::default()
    }
}

fn flags_of(cmd: &Command) -> anyhow::Result<(&'static str, RunConfig)> {
    Ok(match cmd {
        Command::Hit { common, y, x } => ("hit", RunConfig { y: *y, x: *x, ..common_flags(common) }),
        Command::TwoHit { common, y, x, eps, delta } => (
            "two-hit",
            RunConfig {
                y: *y,
                x: *x,
                eps: eps.clone(),
                delta: *delta,
                ..common_flags(common)
            },
        ),
        Command::Dimension { common, levels } => {
            let levels = match levels.as_deref() {
                None => None,
                Some([lo, hi]) => Some([*lo, *hi]),
                Some(other) => anyhow::bail!("--levels takes two values, got {other:?}"),
            };
            ("dimension", RunConfig { levels, ..common_flags(common) })
        }
        Command::NearMiss { common, y, x, radii, mesh } => (
            "near-miss",
            RunConfig {
                y: *y,
                x: *x,
                radii: radii.clone(),
                mesh: *mesh,
                ..common_flags(common)
            },
        ),
        Command::Scaling { common, x } => ("scaling", RunConfig { x: *x, ..common_flags(common) }),
        Command::Tables { kappa, grid } => (
            "tables",
            RunConfig {
                kappa: *kappa,
                grid: grid.clone(),
                ..Default::default()
            },
        ),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        // output cut short by a closed pipe, e.g. `slelab tables | head`
        Err(e)
            if e.chain().any(|c| {
                let io = match c.downcast_ref::<SleError>() {
                    Some(SleError::Io(io)) => Some(io),
                    _ => c.downcast_ref::<std::io::Error>(),
                };
                io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let (experiment, flags) = flags_of(&cli.command)?;
    let file = match &cli.config {
        Some(path) => load_file(path)?,
        None => RunConfig::default(),
    };
    let (resolved, provenance) = resolve(experiment, &file, &flags)?;
    let value = serde_json::to_value(&resolved)?;
    eprintln!("configuration:");
    for key in resolved.relevant() {
        eprintln!("  {key} = {} ({})", value[*key], provenance[*key]);
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if experiment == "tables" {
        execute(&resolved, &mut out)?;
        return Ok(ExitCode::SUCCESS);
    }

    let id = run_id(&resolved);
    let store = ResultStore::open(&cli.results)?;
    store.check_new(&id, cli.force)?;
    let started = Utc::now();
    let records = match execute(&resolved, &mut out)? {
        Outcome::Records(r) => r,
        Outcome::Table => Vec::new(),
    };
    let manifest = RunManifest {
        run_id: id.clone(),
        config: resolved,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: Utc::now(),
    };
    store.append(&manifest, &records)?;
    write_summary(&records, &mut out)?;
    writeln!(out, "run {id} stored in {}", store.records_path(&id).display())?;
    if records.iter().any(|r| !r.warnings.is_empty()) {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
