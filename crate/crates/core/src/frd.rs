//! Flux redistribution.

use crate::euler::Cons;
use crate::geometry::{CellClass, LevelGeometry};
use crate::index::{Axis, BoxArray, Cell, IndexBox};

/// Cells of the 3×3 box reachable from the center by a monotone path of
/// fluid cells, for every cut cell of a region.
#[derive(Clone, Debug)]
pub struct FrdNeighborhoods {
    pub region: IndexBox,
    pub members: BoxArray<Vec<Cell>>,
}

fn step_open(g: &LevelGeometry, region: &IndexBox, from: Cell, axis: Axis, s: i32) -> bool {
    let to = from.step(axis, s);
    if !region.contains(to) || !g.is_fluid(to) {
        return false;
    }
    let face = if s > 0 { to } else { from };
    g.afrac.dir(axis)[face] > 0.0
}

/// Monotone-path neighborhood of one cell (the cell itself first).
pub fn monotone_neighborhood(g: &LevelGeometry, region: &IndexBox, p: Cell) -> Vec<Cell> {
    let mut out = vec![p];
    if !g.is_fluid(p) {
        return Vec::new();
    }
    for dj in -1..=1 {
        for di in -1..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            let ok = if dj == 0 {
                step_open(g, region, p, Axis::X, di)
            } else if di == 0 {
                step_open(g, region, p, Axis::Y, dj)
            } else {
                (step_open(g, region, p, Axis::X, di)
                    && step_open(g, region, p.step(Axis::X, di), Axis::Y, dj))
                    || (step_open(g, region, p, Axis::Y, dj)
                        && step_open(g, region, p.step(Axis::Y, dj), Axis::X, di))
            };
            if ok {
                out.push(p.shift(di, dj));
            }
        }
    }
    out
}

pub fn build_frd_neighborhoods(g: &LevelGeometry, region: IndexBox) -> FrdNeighborhoods {
    let members = BoxArray::from_fn(region, |c| {
        if g.class[c] == CellClass::Cut {
            monotone_neighborhood(g, &region, c)
        } else {
            Vec::new()
        }
    });
    FrdNeighborhoods { region, members }
}

/// Λ-weighted average of δU^c over N(p) for every cut cell.
pub fn nonconservative_update(
    g: &LevelGeometry,
    nb: &FrdNeighborhoods,
    duc: &BoxArray<Cons>,
) -> BoxArray<Cons> {
    let mut out = BoxArray::new(nb.region, Cons::ZERO);
    for c in nb.region.cells() {
        let m = &nb.members[c];
        if m.is_empty() {
            continue;
        }
        let mut num = Cons::ZERO;
        let mut den = 0.0;
        for q in m {
            let l = g.vfrac[*q];
            num += duc[*q] * l;
            den += l;
        }
        out[c] = num / den;
    }
    out
}

/// One redistribution transfer: `amount` (extensive per unit time) moved
/// from `src` to `dst`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer {
    pub src: Cell,
    pub dst: Cell,
    pub amount: Cons,
}

/// Stabilized update and the ledger of δM transfers.
#[derive(Clone, Debug)]
pub struct FrdResult {
    pub du: BoxArray<Cons>,
    pub transfers: Vec<Transfer>,
}

/// δU^EB = Λ δU^c + (1−Λ) δU^nc on cut cells, plus redistribution of
/// δM = V(1−Λ)(δU^c − δU^nc) over N(p) with volume weights (or density
/// weights when `rho` is given).
pub fn frd_apply(
    g: &LevelGeometry,
    nb: &FrdNeighborhoods,
    duc: &BoxArray<Cons>,
    rho: Option<&BoxArray<Cons>>,
) -> FrdResult {
    let region = nb.region;
    let nc = nonconservative_update(g, nb, duc);
    let mut du = BoxArray::from_fn(region, |c| duc[c]);
    let mut transfers = Vec::new();
    for s in region.cells() {
        if !nb.members[s].is_empty() {
            let l = g.vfrac[s];
            du[s] = duc[s] * l + nc[s] * (1.0 - l);
        }
    }
    for s in region.cells() {
        let m = &nb.members[s];
        if m.is_empty() {
            continue;
        }
        let l = g.vfrac[s];
        let dm = (duc[s] - nc[s]) * (g.volume(s) * (1.0 - l));
        if dm == Cons::ZERO {
            continue;
        }
        let weights: Vec<f64> = match rho {
            None => {
                let vn: f64 = m.iter().map(|q| g.volume(*q)).sum();
                m.iter().map(|_| 1.0 / vn).collect()
            }
            Some(u) => {
                let den: f64 = m.iter().map(|q| u[*q].rho * g.volume(*q)).sum();
                m.iter().map(|q| u[*q].rho / den).collect()
            }
        };
        for (q, w) in m.iter().zip(weights) {
            du[*q] += dm * w;
            transfers.push(Transfer {
                src: s,
                dst: *q,
                amount: dm * (w * g.volume(*q)),
            });
        }
    }
    FrdResult { du, transfers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImplicitFn;

    #[test]
    fn interior_regular_cell_has_full_box() {
        let g = LevelGeometry::build(
            &ImplicitFn::AllFluid,
            IndexBox::from_size(3, 3),
            1.0,
            1.0,
            (0.0, 0.0),
        )
        .unwrap();
        let n = monotone_neighborhood(&g, &g.bx, Cell::new(1, 1));
        assert_eq!(n.len(), 9);
    }
}
