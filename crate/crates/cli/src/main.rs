//! Experiment runner for the reversal collision dynamics engine.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use revsim_core::acceptance;
use revsim_core::config::ExperimentConfig;
use revsim_core::runner;
use revsim_core::scenario::{build_scenario, scenario_library};

#[derive(Parser)]
#[command(
    name = "revsim",
    version,
    about = "Simulate reversal collision dynamics, predict equilibria and verify the \
             engine's conservation, spectral and stability properties"
)]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,

    /// Built-in scenario, e.g. `fig1` or `three_dirac(1e-3, 0.2994, 0.1996)`.
    #[arg(long, value_name = "NAME", global = true, conflicts_with = "config")]
    scenario: Option<String>,

    /// Output directory (defaults to the config's output.dir, else `out`).
    #[arg(long, value_name = "DIR", global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomized verification instances.
    #[arg(long, global = true, default_value_t = acceptance::DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write snapshots, diagnostics, prediction and
    /// plot scripts.
    Simulate {
        /// Integrator override: euler | rk4 | expm | picard.
        #[arg(long)]
        method: Option<String>,
        /// Time step override.
        #[arg(long)]
        dt: Option<f64>,
        /// Step count override.
        #[arg(long)]
        steps: Option<usize>,
        /// Keep every k-th snapshot.
        #[arg(long = "snapshot-every")]
        snapshot_every: Option<usize>,
    },
    /// Write the predicted equilibrium (CSV) and the component report (JSON).
    Predict,
    /// Print the interaction-graph report of the initial datum as JSON.
    Analyze,
    /// List the built-in scenarios.
    Scenarios,
    /// Run the acceptance suite and print one pass/fail line per criterion.
    Verify,
}

struct Loaded {
    config: ExperimentConfig,
    base_dir: Option<PathBuf>,
    label: String,
}

fn load(cli: &Cli) -> Result<Loaded> {
    match (&cli.config, &cli.scenario) {
        (Some(path), None) => {
            let config = ExperimentConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            Ok(Loaded {
                config,
                base_dir: path.parent().map(Path::to_path_buf),
                label,
            })
        }
        (None, Some(spec)) => {
            let config = build_scenario(spec)?;
            let label = spec
                .split('(')
                .next()
                .unwrap_or("scenario")
                .trim()
                .to_string();
            Ok(Loaded {
                config,
                base_dir: None,
                label,
            })
        }
        (None, None) => bail!("one of --config PATH or --scenario NAME is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn out_dir(cli: &Cli, loaded: &Loaded) -> PathBuf {
    if let Some(dir) = &cli.out {
        return dir.clone();
    }
    if let Some(dir) = &loaded.config.output.dir {
        return PathBuf::from(dir);
    }
    PathBuf::from("out").join(&loaded.label)
}

fn main() -> ExitCode {
    // Die quietly when the consumer of a pipe goes away (e.g. `| head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate {
            method,
            dt,
            steps,
            snapshot_every,
        } => {
            let mut loaded = load(cli)?;
            if let Some(m) = method {
                loaded.config.integrator.method = m.clone();
            }
            if let Some(dt) = dt {
                loaded.config.integrator.dt = *dt;
            }
            if let Some(steps) = steps {
                loaded.config.integrator.steps = *steps;
            }
            if let Some(k) = snapshot_every {
                loaded.config.integrator.snapshot_every = *k;
            }
            let dir = out_dir(cli, &loaded);
            let summary = runner::run(&loaded.config, loaded.base_dir.as_deref(), &dir)?;
            println!(
                "{}: simulated to t = {} ({} snapshots, {} components)",
                loaded.label, summary.final_time, summary.snapshots, summary.component_count
            );
            println!(
                "  tv to prediction {:.3e}, mass drift {:.1e}, eta drift {:.1e}",
                summary.tv_to_prediction, summary.mass_drift, summary.eta_drift
            );
            if let (Some(rate), Some(r2)) = (summary.fitted_decay_rate, summary.fit_r_squared) {
                println!("  fitted decay rate {rate:.4} (r^2 = {r2:.4})");
            }
            println!("  outputs in {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict => {
            let loaded = load(cli)?;
            let dir = out_dir(cli, &loaded);
            runner::predict(&loaded.config, loaded.base_dir.as_deref(), &dir)?;
            println!(
                "{}: wrote prediction.csv and components.json to {}",
                loaded.label,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze => {
            let loaded = load(cli)?;
            let report = runner::analyze(
                &loaded.config,
                loaded.base_dir.as_deref(),
                cli.out.as_deref(),
            )?;
            println!("{report}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenarios => {
            for info in scenario_library() {
                println!("{}{}", info.name, info.parameters);
                println!("    {}", info.summary);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let results = acceptance::run_all(cli.seed);
            let mut all_passed = true;
            for r in &results {
                println!("{}", r.line());
                all_passed &= r.passed;
            }
            if all_passed {
                println!("acceptance: all {} criteria passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("acceptance: FAILURES present");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
