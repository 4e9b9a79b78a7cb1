use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hpcpg_cli::{registry, run, write_outputs, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "hpcpg",
    version,
    about = "Convergence experiments for the C1-CPG time stepper"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        mode: Option<String>,
        /// Comma separated, e.g. 3,4,5
        #[arg(long)]
        degrees: Option<String>,
        /// Comma separated, e.g. 1/32,1/64
        #[arg(long)]
        steps: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        /// Gauss points beyond the local degree for the load integrals.
        #[arg(long)]
        quad_points: Option<usize>,
        /// Record wall-clock times in report.csv.
        #[arg(long)]
        timings: bool,
    },
    /// List the built-in examples.
    ListExamples,
}

const EXIT_CELL_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::ListExamples => {
            for (id, horizon, lipschitz, description) in registry::registry() {
                println!(
                    "{:<12} T={horizon:<4} L={lipschitz:<8.4} {description}",
                    id.as_str()
                );
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            example,
            mode,
            degrees,
            steps,
            out,
            tol,
            quad_points,
            timings,
        } => {
            let overrides = Overrides {
                example,
                mode,
                degrees,
                steps,
                out,
                tol,
                quad_points,
            };
            let cfg = match ExperimentConfig::load(&config).and_then(|c| c.apply(&overrides)) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let report = match run(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Err(e) = write_outputs(&report, &cfg.out_dir, cfg.timings || timings) {
                eprintln!(
                    "error: cannot write outputs to {}: {e}",
                    cfg.out_dir.display()
                );
                return ExitCode::from(EXIT_CELL_FAILED);
            }
            for cell in &report.cells {
                match (&cell.failure, &cell.errors) {
                    (Some(msg), _) => println!("r={} k={}: FAILED {msg}", cell.r, cell.step),
                    (None, Some(e)) => println!(
                        "r={} k={}: l2 {:.3e} h1 {:.3e} h2 {:.3e} linf {:.3e} nodal {:.3e}/{:.3e} iters {}",
                        cell.r, cell.step, e.l2, e.h1, e.h2, e.linf, e.nodal_val, e.nodal_deriv, cell.iters_max
                    ),
                    (None, None) => println!(
                        "r={} k={}: max energy error {:.3e} iters {}",
                        cell.r,
                        cell.step,
                        cell.energy_max.unwrap_or(f64::NAN),
                        cell.iters_max
                    ),
                }
            }
            if report.failures() > 0 {
                ExitCode::from(EXIT_CELL_FAILED)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
