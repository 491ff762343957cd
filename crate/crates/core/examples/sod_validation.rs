//! Sod problem along the rotated channel at three base resolutions with one
//! dynamically tagged level. Prints the centerline L1 density error against
//! the exact Riemann solution and the observed order.
//!
//! cargo run --release --example sod_validation

use ebamr::validate::{self, SOD};

fn main() -> ebamr::Result<()> {
    let mut errs = Vec::new();
    for text in SOD {
        let r = validate::sod(validate::preset(text))?;
        println!(
            "dx0 = {:.6}  steps = {:4}  L1(rho) = {:.4e}  max rel defect = {:.2e}",
            r.dx, r.steps, r.l1, r.ledger.max_rel_defect
        );
        errs.push(r.l1);
    }
    for (k, p) in validate::observed_orders(&errs).iter().enumerate() {
        println!("order between runs {} and {}: {:.3}", k, k + 1, p);
    }
    Ok(())
}
