//! The weighted state redistribution operator on its own: builds the merge
//! matrix for a small cut mesh, prints the neighborhoods of the small cells
//! and checks conservation, linearity and the R matrix row sums.
//!
//! cargo run --example wsrd_operator

use ebamr::geometry::{ImplicitFn, LevelGeometry};
use ebamr::index::IndexBox;
use ebamr::validate;
use ebamr::wsrd::{self, MergeStrategy, WsrdOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ebamr::Result<()> {
    let n = 10;
    let h = 1.0 / n as f64;
    let shape = ImplicitFn::Circle {
        center: (0.52, 0.47),
        radius: 0.31,
        fluid_outside: true,
    };
    let g = LevelGeometry::build(&shape, IndexBox::from_size(n, n), h, h, (0.0, 0.0))?;
    let m = wsrd::merge_matrix(&g, g.bx, MergeStrategy::Normal)?;
    for r in m.merged_rows() {
        let c = m.cell(r);
        let members: Vec<String> = m
            .row(r)
            .map(|(p, a)| {
                let q = m.cell(p);
                format!("({},{}) a={:.3}", q.i, q.j, a)
            })
            .collect();
        println!(
            "cell ({},{}) vfrac {:.4}  alpha {:.3}  V^ {:.4e}: {}",
            c.i,
            c.j,
            g.vfrac[c],
            m.alpha[r],
            m.vhat[r],
            members.join(", ")
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = validate::random_state(&mut rng, m.region);
    println!("column sum error      {:.2e}", m.column_sum_error());
    println!(
        "conservation error    {:.2e}",
        validate::wsrd_conservation_error(&m, &u, WsrdOptions::default())
    );
    let (lin, _) = validate::wsrd_linearity_error(&m, 1);
    println!("linearity error       {:.2e}", lin);
    println!("R row sum error       {:.2e}", validate::r_row_sum_error(&m, &u));
    Ok(())
}
