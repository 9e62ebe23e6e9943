use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdpiag_bench::config::load_config;
use pdpiag_bench::experiment::{certify_config, evaluate_gap, format_certificate, IterateFile};
use pdpiag_bench::{run_experiment, sweep, BenchError, ExitStatus, ExperimentConfig, RunOptions};

/// Runs and checks PD-PIAG experiments.
///
/// Exit statuses: 0 pass, 1 certificate or bound failure, 2 infeasible step
/// sizes, 3 divergence, 4 invalid input.
#[derive(Debug, Parser)]
#[command(name = "pdpiag", version)]
struct Cli {
    /// Override the problem seed (and the random schedule's seed).
    #[arg(long, global = true, env = "PDPIAG_SEED")]
    seed: Option<u64>,
    /// Run even when explicit step sizes fail certification.
    #[arg(long, global = true, env = "PDPIAG_FORCE")]
    force: bool,
    /// Directory receiving the output files.
    #[arg(long, global = true, env = "PDPIAG_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Maximum concurrent runs in a sweep. Defaults to the available parallelism.
    #[arg(long, global = true, env = "PDPIAG_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its trace, summary, and plot data.
    Run { config: PathBuf },
    /// Print the step-size certificate without running the solver.
    Certify { config: PathBuf },
    /// Run one experiment per value of a config field.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Evaluate the restricted gap at a point given as JSON `{"x": [...], "y": [...]}`.
    Gap {
        config: PathBuf,
        #[arg(long)]
        at: PathBuf,
    },
}

fn load(cli: &Cli, path: &std::path::Path) -> Result<ExperimentConfig, BenchError> {
    let mut config = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<ExitStatus, BenchError> {
    let opts = RunOptions {
        out_dir: cli.out_dir.clone(),
        force: cli.force,
    };
    match &cli.command {
        Command::Run { config } => {
            let config = load(cli, config)?;
            let outcome = run_experiment(&config, &opts)?;
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            for m in &outcome.summary.monitors {
                println!("monitor {:?}: {}", m.name, if m.passed { "pass" } else { "FAIL" });
            }
            if let Some(d) = &outcome.summary.diagnostic {
                eprintln!("{d}");
            }
            Ok(outcome.status)
        }
        Command::Certify { config } => {
            let config = load(cli, config)?;
            let report = certify_config(&config)?;
            if let Some(p) = &report.parameters {
                print!("{}", format_certificate(p));
            }
            if let Some(d) = &report.diagnostic {
                eprintln!("{d}");
            }
            Ok(report.status)
        }
        Command::Sweep { config, axis, values } => {
            let config = load(cli, config)?;
            let workers = cli
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            let report = sweep(&config, axis, values, &opts, workers)?;
            println!("wrote {}", report.report_path.display());
            for r in &report.rows {
                println!("{axis} = {}: status {}", r.value, r.status.code());
            }
            Ok(report.status)
        }
        Command::Gap { config, at } => {
            let config = load(cli, config)?;
            let text = std::fs::read_to_string(at).map_err(|source| BenchError::Io {
                context: format!("cannot read {}", at.display()),
                source,
            })?;
            let point: IterateFile =
                serde_json::from_str(&text).map_err(|e| BenchError::Invalid(format!("{}: {e}", at.display())))?;
            let eval = evaluate_gap(&config, &point)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&eval).map_err(|e| BenchError::Invalid(e.to_string()))?
            );
            Ok(ExitStatus::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::InvalidInput.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = execute(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.status()
    });
    ExitCode::from(status.code() as u8)
}
