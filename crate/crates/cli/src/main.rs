use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use finsler_cli::runner::{self, Overrides, RunError};
use finsler_cli::suites;
use finsler_core::{corpus, Vector};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Finsler geometry scenarios and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name).
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the scenario's, then $FINSLER_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a verification suite: tensors, geodesics, submanifold, distance,
    /// cut, lemma_ct, counterexample or all.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Print the machine-readable report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Graph distance between two points of a built-in metric.
    OracleDistance {
        metric: String,
        /// Comma-separated coordinates.
        p: String,
        q: String,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
    },
}

fn parse_point(s: &str) -> Result<Vector, String> {
    let coords: Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
    coords.map(Vector::from_vec).map_err(|e| format!("bad point `{s}`: {e}"))
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, seed, out, workers } => {
            let overrides = Overrides { seed, out, workers };
            match runner::run_file(&scenario, &overrides) {
                Ok(outcome) => {
                    for t in &outcome.report.tasks {
                        let ok = t.error.is_none() && t.assertions.iter().all(|a| a.pass);
                        println!("{} {}", if ok { "pass" } else { "FAIL" }, t.id);
                        for a in &t.assertions {
                            let measured = a.measured.map_or("missing".to_string(), |m| format!("{m:.6e}"));
                            println!("    {} {} = {measured} (expected {}, margin {:.3e})", if a.pass { "ok  " } else { "FAIL" }, a.quantity, a.expected, a.margin);
                        }
                    }
                    println!("artifacts in {}", outcome.out_dir.display());
                    if let Some((id, msg)) = &outcome.task_error {
                        eprintln!("task error in `{id}`: {msg}");
                        return ExitCode::from(2);
                    }
                    if outcome.pass() { ExitCode::SUCCESS } else { ExitCode::FAILURE }
                }
                Err(e @ RunError::Schema(_)) => {
                    eprintln!("schema error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(3)
                }
            }
        }
        Command::Verify { suite, seed, json } => match suites::run(&suite, seed) {
            Ok(reports) => {
                let pass = reports.iter().all(|r| r.pass());
                if json {
                    println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize"));
                } else {
                    for r in &reports {
                        println!("{} {} ({:.1} s)", if r.pass() { "pass" } else { "FAIL" }, r.suite, r.seconds);
                        for c in &r.checks {
                            println!(
                                "    {} {}: measured {:.3e}, bound {:.1e}, margin {:.3e}",
                                if c.pass { "ok  " } else { "FAIL" },
                                c.name,
                                c.measured,
                                c.tolerance,
                                c.margin
                            );
                        }
                    }
                }
                if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE }
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Command::OracleDistance { metric, p, q, h } => {
            let Some(m) = corpus::metric_by_name(&metric) else {
                eprintln!("unknown metric `{metric}`; expected E2, RD, SP, HY, MK or CR");
                return ExitCode::from(2);
            };
            let result = parse_point(&p).and_then(|p| {
                let q = parse_point(&q)?;
                finsler_core::distance::grid_oracle_distance(&m, &p, &q, h).map_err(|e| e.to_string())
            });
            match result {
                Ok(d) => {
                    println!("{d}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
