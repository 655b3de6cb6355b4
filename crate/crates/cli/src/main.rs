use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcomp_cli::{list_lines, load_config, run_config, RunOptions, BUNDLED};

#[derive(Parser)]
#[command(name = "qcomp", version, about = "Numerical comparison checks for quasilinear isotropic operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file or bundled set.
    Run {
        /// Path to a JSON config, or a bundled set name.
        config: String,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; the QCOMP_OUT environment variable takes precedence.
        #[arg(long, default_value = "qcomp-out")]
        out: PathBuf,
        /// Seed for random densities.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List scenarios of a config, or of every bundled set.
    List { config: Option<String> },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, jobs, out, seed } => {
            let cfg = load_config(&config)?;
            let out = std::env::var_os("QCOMP_OUT").map(PathBuf::from).unwrap_or(out);
            let (summary, reports) = run_config(&cfg, &RunOptions { out: out.clone(), seed, jobs })?;
            for r in &reports {
                let status = match (r.ok, r.control) {
                    (true, false) => "PASS",
                    (true, true) => "PASS (control failed as expected)",
                    (false, false) => "FAIL",
                    (false, true) => "FAIL (control passed)",
                };
                println!("{status:<34} {} [{}]", r.id, r.kind);
                if let Some(e) = &r.error {
                    println!("    error: {e}");
                }
            }
            println!("{} of {} scenarios ok; reports in {}", summary.ok, summary.total, out.display());
            Ok(summary.all_ok)
        }
        Command::List { config } => {
            match config {
                Some(c) => list_lines(&load_config(&c)?).iter().for_each(|l| println!("{l}")),
                None => {
                    for (name, _) in BUNDLED {
                        println!("# {name}");
                        list_lines(&load_config(name)?).iter().for_each(|l| println!("{l}"));
                    }
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
