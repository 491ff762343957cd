//! Mach 2.81 shock over a cylinder with only the top half refined. Writes
//! plot and schlieren files to the output directory (EBAMR_OUT, default
//! `out/shock_cylinder`). Pass `--full` to refine the whole cylinder
//! instead, or a base size such as `128` for a quicker run.
//!
//! cargo run --release --example shock_cylinder -- 128

use std::path::PathBuf;

use ebamr::run::{run_config, OUT_ENV};
use ebamr::validate::{self, CYLINDER, CYLINDER_FULL};

fn main() -> ebamr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.iter().any(|a| a == "--full");
    let mut cfg = validate::preset(if full { CYLINDER_FULL } else { CYLINDER });
    if let Some(n) = args.iter().find_map(|a| a.parse::<i32>().ok()) {
        cfg.grid.n_cell = [n, n];
    }
    let dir = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out/shock_cylinder"));
    let t0 = std::time::Instant::now();
    let rep = run_config(cfg, &dir)?;
    println!(
        "{} steps to t = {:.4} in {:.1?}, max relative conservation residual {:.2e}",
        rep.steps,
        rep.time,
        t0.elapsed(),
        rep.max_rel_residual
    );
    for f in rep.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
