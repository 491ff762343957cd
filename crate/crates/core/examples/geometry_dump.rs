//! Cut-cell geometry of a circle on a coarse grid: cell counts by class,
//! the smallest volume fraction and a coarse ASCII picture.
//!
//! cargo run --example geometry_dump

use ebamr::geometry::{CellClass, ImplicitFn, LevelGeometry};
use ebamr::index::{Cell, IndexBox};

fn main() -> ebamr::Result<()> {
    let n = 24;
    let h = 1.0 / n as f64;
    let shape = ImplicitFn::Circle {
        center: (0.5, 0.5),
        radius: 0.3,
        fluid_outside: true,
    };
    let g = LevelGeometry::build(&shape, IndexBox::from_size(n, n), h, h, (0.0, 0.0))?;
    for j in (0..n).rev() {
        let row: String = (0..n)
            .map(|i| match g.class[Cell::new(i, j)] {
                CellClass::Regular => '.',
                CellClass::Cut if g.vfrac[Cell::new(i, j)] < 0.5 => 'x',
                CellClass::Cut => 'o',
                CellClass::Body => '#',
            })
            .collect();
        println!("{row}");
    }
    let count = |k: CellClass| g.bx.cells().filter(|c| g.class[*c] == k).count();
    println!(
        "regular {}  cut {}  body {}",
        count(CellClass::Regular),
        count(CellClass::Cut),
        count(CellClass::Body)
    );
    if let Some((c, v)) = g.min_fluid_vfrac(&g.bx) {
        println!("smallest volume fraction {:.3e} at ({}, {})", v, c.i, c.j);
    }
    let fluid: f64 = g.bx.cells().map(|c| g.volume(c)).sum();
    println!(
        "fluid area {:.6}, exact {:.6}",
        fluid,
        1.0 - std::f64::consts::PI * 0.09
    );
    Ok(())
}
