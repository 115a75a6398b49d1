use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use besovlab::harness::{self, Descriptor, Overrides, RunError, OUT_ENV};

#[derive(Parser)]
#[command(name = "besovlab", version, about = "Run, list and replay numerical experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one registered experiment and write its report.
    Run {
        #[arg(long)]
        experiment: String,
        /// JSON config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Output root; the BESOVLAB_OUT environment variable takes precedence.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List registered experiments.
    List,
    /// Verify a stored report's checksums and rerun its descriptor.
    Replay {
        path: PathBuf,
        /// Only verify checksums, skip the rerun.
        #[arg(long)]
        verify_only: bool,
    },
}

fn diagnostic(kind: &str, message: &str) {
    let flat = message.replace(['\n', '\r'], " ");
    eprintln!("besovlab: error kind={kind} message={flat:?}");
}

fn fail(e: RunError) -> ExitCode {
    diagnostic(e.kind(), e.message());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                diagnostic("usage", &e.to_string());
                return ExitCode::from(2);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::List => {
            for e in harness::registry() {
                println!("{:2}  {:22}  {}", e.criterion, e.name, e.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            experiment,
            config,
            n,
            seed,
            threads,
            out,
        } => {
            let config = match config {
                Some(p) => match harness::read_config(&p) {
                    Ok(v) => v,
                    Err(e) => return fail(RunError::Config(format!("{}: {e}", p.display()))),
                },
                None => Value::Null,
            };
            let out = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or(out);
            let descriptor = Descriptor {
                experiment,
                config,
                overrides: Overrides { n, seed },
                threads,
            };
            match harness::run(&descriptor, &out) {
                Ok((report, dir)) => {
                    for c in &report.checks {
                        let verdict = if c.passed { "PASS" } else { "FAIL" };
                        println!("{verdict}  {}  value={:e}  bound {}", c.name, c.value, c.bound.describe());
                    }
                    println!("report: {}", dir.join(harness::REPORT_NAME).display());
                    if report.passed {
                        ExitCode::SUCCESS
                    } else {
                        let failed = report.checks.iter().filter(|c| !c.passed).count();
                        diagnostic("acceptance", &format!("{failed} check(s) failed in {}", report.experiment));
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Replay { path, verify_only } => match harness::replay(&path, verify_only) {
            Ok(r) => {
                println!("verified {} artifact(s) of {}", r.artifacts_checked, r.report.display());
                match r.rerun_identical {
                    Some(false) => {
                        diagnostic("replay", "rerun report differs from the stored report");
                        ExitCode::from(1)
                    }
                    Some(true) => {
                        println!("rerun reproduces the stored report byte for byte");
                        ExitCode::SUCCESS
                    }
                    None => ExitCode::SUCCESS,
                }
            }
            Err(e) => {
                diagnostic("replay", &e.to_string());
                ExitCode::from(1)
            }
        },
    }
}
