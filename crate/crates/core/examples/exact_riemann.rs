//! Exact solution of the Sod shock tube at t = 0.1, sampled on a line.
//!
//! cargo run --example exact_riemann

use ebamr::euler::{ExactRiemann, Gas, Prim};

fn main() -> ebamr::Result<()> {
    let ex = ExactRiemann::solve(
        Prim::new(1.0, 0.0, 0.0, 1.0),
        Prim::new(0.125, 0.0, 0.0, 0.1),
        Gas::new(1.4),
    )?;
    println!("p* = {:.6}  u* = {:.6}", ex.p_star, ex.u_star);
    if let Some(s) = ex.right_shock_speed() {
        println!("shock speed {:.6}", s);
    }
    let t = 0.1;
    println!("{:>8} {:>10} {:>10} {:>10}", "x", "rho", "u", "p");
    for k in 0..=20 {
        let x = -0.5 + k as f64 * 0.05;
        let w = ex.sample(x / t);
        println!("{:>8.3} {:>10.5} {:>10.5} {:>10.5}", x, w.rho, w.u, w.p);
    }
    Ok(())
}
