use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ebamr::config::load_config;
use ebamr::run::{output_dir, run_config, Simulation};
use ebamr::validate::{self, ValidateOptions};
use ebamr::Error;

#[derive(Parser)]
#[command(name = "ebamr", version, about = "Cut-cell Euler solver on adaptive meshes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configuration file.
    Run { config: PathBuf },
    /// Run the built-in consistency checks and print a table.
    Validate {
        /// Disable re-redistribution in the conservation check.
        #[arg(long)]
        no_rerd: bool,
        /// Break the column sums of the merge matrices.
        #[arg(long)]
        corrupt_a: bool,
    },
    /// Write the cut-cell geometry of every level as CSV.
    GeomDump { config: PathBuf },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_solver_failure() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = output_dir(&cfg);
            match run_config(cfg, &dir) {
                Ok(r) => {
                    println!(
                        "{} steps to t = {:.6}, max relative conservation residual {:.3e}",
                        r.steps, r.time, r.max_rel_residual
                    );
                    for f in r.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Cmd::Validate { no_rerd, corrupt_a } => {
            let report = validate::run(&ValidateOptions { no_rerd, corrupt_a });
            print!("{}", report.table());
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Cmd::GeomDump { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = output_dir(&cfg);
            let res = Simulation::new(cfg)
                .and_then(|s| {
                    let mut files = ebamr::diagnostics::write_geometry(&s.h, &dir)?;
                    files.extend(ebamr::diagnostics::write_merge_matrices(&s.h, &dir)?);
                    Ok(files)
                });
            match res {
                Ok(files) => {
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
