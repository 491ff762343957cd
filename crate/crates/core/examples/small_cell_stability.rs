//! Channel shifted so that one uncovered coarse cut cell has volume fraction
//! 1e-8, once away from the coarse/fine boundary and once next to it. Each
//! is run with the stabilized synchronization update and with the whole
//! correction put into the cut cell.
//!
//! cargo run --release --example small_cell_stability

use ebamr::validate::{self, SMALL_CELL, SMALL_CELL_CF};

fn main() -> ebamr::Result<()> {
    for (name, text) in [("away from c/f", SMALL_CELL), ("at c/f", SMALL_CELL_CF)] {
        for stabilize in [true, false] {
            let mut cfg = validate::preset(text);
            cfg.sync.stabilize = stabilize;
            let o = validate::small_cell(cfg)?;
            let status = match &o.error {
                None if o.healthy => "ok".to_string(),
                None => "unphysical state".to_string(),
                Some(e) => e.to_string(),
            };
            println!(
                "{:<14} stabilize={:<5} min vfrac {:.2e}  steps {:3}  {}",
                name, stabilize, o.min_vfrac, o.steps, status
            );
        }
    }
    Ok(())
}
