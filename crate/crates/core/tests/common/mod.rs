//! Dense reference construction of the merge matrix and redistribution.

use ebamr::euler::Cons;
use ebamr::geometry::LevelGeometry;
use ebamr::index::{BoxArray, Cell, IndexBox};
use ebamr::wsrd::{build_neighborhoods, MergeStrategy};

/// Dense A from the neighborhood member lists: β for small owners, α from
/// the overlap counts, a_rr = α_r and a_rp = β_r / N_p for the others.
pub fn dense_a(g: &LevelGeometry, region: IndexBox, strategy: MergeStrategy) -> Vec<Vec<f64>> {
    let nb = build_neighborhoods(g, region, strategy).unwrap();
    let n = region.len();
    let cells: Vec<Cell> = region.cells().collect();
    let vol: Vec<f64> = cells.iter().map(|c| g.volume(*c)).collect();
    let vt = 0.5 * g.dx * g.dy;
    let mut count = vec![0.0; n];
    for m in &nb.members {
        for &p in m {
            count[p] += 1.0;
        }
    }
    let mut beta = vec![0.0; n];
    for (r, m) in nb.members.iter().enumerate() {
        if m.len() > 1 && vol[r] < vt {
            let others: f64 = m[1..].iter().map(|p| vol[*p]).sum();
            beta[r] = f64::min((vt - vol[r]) / others, 1.0);
        }
    }
    let mut alpha = vec![0.0; n];
    for p in 0..n {
        if count[p] > 0.0 {
            let mut s = 0.0;
            for (r, m) in nb.members.iter().enumerate() {
                if m[1.min(m.len())..].contains(&p) {
                    s += beta[r];
                }
            }
            alpha[p] = 1.0 - s / count[p];
        }
    }
    let mut a = vec![vec![0.0; n]; n];
    for (r, m) in nb.members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        a[r][r] = alpha[r];
        for &p in &m[1..] {
            a[r][p] = beta[r] / count[p];
        }
    }
    a
}

/// Dense redistribution with given gradients: Q̂ = A V Û / V̂ and
/// U_p = Σ_r a_rp (Q̂_r + σ_r · (x_p − x̂_r)).
pub fn dense_apply(
    g: &LevelGeometry,
    region: IndexBox,
    a: &[Vec<f64>],
    u: &BoxArray<Cons>,
    grads: &[(Cons, Cons)],
) -> Vec<Cons> {
    let cells: Vec<Cell> = region.cells().collect();
    let n = cells.len();
    let vol: Vec<f64> = cells.iter().map(|c| g.volume(*c)).collect();
    let cen: Vec<(f64, f64)> = cells.iter().map(|c| g.centroid[*c]).collect();
    let mut out = vec![Cons::ZERO; n];
    for r in 0..n {
        let vh: f64 = (0..n).map(|p| a[r][p] * vol[p]).sum();
        if vh == 0.0 {
            continue;
        }
        let q: Cons = (0..n).map(|p| u[cells[p]] * (a[r][p] * vol[p])).sum::<Cons>() / vh;
        let xh = (0..n).map(|p| a[r][p] * vol[p] * cen[p].0).sum::<f64>() / vh;
        let yh = (0..n).map(|p| a[r][p] * vol[p] * cen[p].1).sum::<f64>() / vh;
        for p in 0..n {
            if a[r][p] != 0.0 {
                let (gx, gy) = grads[r];
                out[p] += (q + gx * (cen[p].0 - xh) + gy * (cen[p].1 - yh)) * a[r][p];
            }
        }
    }
    out
}
