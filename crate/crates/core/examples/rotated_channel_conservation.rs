//! Shock tube in the rotated channel with a fine strip across it. Runs the
//! three integrator/redistribution pairs with full synchronization, then the
//! Godunov case without re-redistribution and without refluxing, and prints
//! the per-run conservation summary.
//!
//! cargo run --release --example rotated_channel_conservation

use ebamr::validate::{self, CHANNEL, CHANNEL_FRD, CHANNEL_MOL};

fn main() -> ebamr::Result<()> {
    println!("{:<28} {:>6} {:>14} {:>14} {:>16}", "run", "steps", "max rel defect", "max rel resid", "max defect/cf");
    let mut runs = vec![
        ("godunov + wsrd", validate::preset(CHANNEL)),
        ("mol + wsrd", validate::preset(CHANNEL_MOL)),
        ("godunov + frd", validate::preset(CHANNEL_FRD)),
    ];
    let mut no_rerd = validate::preset(CHANNEL);
    no_rerd.sync.rerd = false;
    runs.push(("godunov + wsrd, no rerd", no_rerd));
    let mut no_reflux = validate::preset(CHANNEL);
    no_reflux.sync.refluxing = false;
    runs.push(("godunov + wsrd, no reflux", no_reflux));
    for (name, cfg) in runs {
        let st = validate::conservation(cfg)?;
        println!(
            "{:<28} {:>6} {:>14.3e} {:>14.3e} {:>16.3e}",
            name, st.steps, st.max_rel_defect, st.max_rel_residual, st.max_defect_cf_ratio
        );
    }
    Ok(())
}
