//! Re-redistribution: bookkeeping of redistribution across the coarse/fine
//! interface and the synchronization that applies it.
//!
//! Redistribution on a level moves mass between cells of different roles
//! (uncovered, covered, ghost). Amounts that enter covered cells are lost
//! when the coarse data is replaced by averaged fine data, and amounts
//! exchanged with fine ghost cells never reach the composite solution. The
//! negatives of these amounts are gathered in the register and applied to
//! uncovered coarse cells during synchronization.

use crate::amr::{Category, Hierarchy, Level, RATIO};
use crate::error::{Error, Result, Site};
use crate::euler::Cons;
use crate::frd::{monotone_neighborhood, Transfer};
use crate::index::{BoxArray, Cell, IndexBox};
use crate::sync::SyncRegister;
use crate::wsrd::{MergeMatrix, WsrdRecord};

/// Redistribution-aware value of member `p` seen from row `r`:
/// Û_p − σ_r·(x_p − x̂_r).
fn pair_value(m: &MergeMatrix, rec: &WsrdRecord, r: usize, p: usize) -> Cons {
    let (gx, gy) = rec.grads[r];
    let (xp, yp) = m.cent[p];
    let (xr, yr) = m.xhat[r];
    rec.uhat[m.cell(p)] - gx * (xp - xr) - gy * (yp - yr)
}

/// Add `w` times the redistribution corrections of one state
/// redistribution on level `lev` to the registers.
///
/// For a pair (p, q) of members of row r the row moves
/// K (X_q − X_p), K = V_p a_rp V_q a_rq / V̂_r, from q to p, where X is
/// [`pair_value`]. Only pairs crossing a role boundary matter.
pub fn accumulate_wsrd(
    levels: &[Level],
    regs: &mut [SyncRegister],
    lev: usize,
    m: &MergeMatrix,
    rec: &WsrdRecord,
    w: f64,
) {
    let l = &levels[lev];
    let has_finer = lev < regs.len();
    if !has_finer && lev == 0 {
        return;
    }
    for r in m.merged_rows() {
        let entries: Vec<(usize, f64)> = m.row(r).collect();
        let cats: Vec<Category> = entries.iter().map(|(p, _)| l.category(m.cell(*p))).collect();
        if cats.iter().all(|c| *c == cats[0]) {
            continue;
        }
        let vhat = m.vhat[r];
        for a in 0..entries.len() {
            for b in a + 1..entries.len() {
                let (ca, cb) = (cats[a], cats[b]);
                if ca == cb {
                    continue;
                }
                let (p, ap) = entries[a];
                let (q, aq) = entries[b];
                let k = m.vol[p] * ap * m.vol[q] * aq / vhat;
                if k == 0.0 {
                    continue;
                }
                let xp = pair_value(m, rec, r, p);
                let xq = pair_value(m, rec, r, q);
                let (cp, cq) = (m.cell(p), m.cell(q));
                match (ca, cb) {
                    (Category::Uncovered, Category::Covered) => {
                        regs[lev].dr_coarse[cp] += (xp - xq) * (w * k);
                    }
                    (Category::Covered, Category::Uncovered) => {
                        regs[lev].dr_coarse[cq] += (xq - xp) * (w * k);
                    }
                    (Category::Ghost, _) => {
                        regs[lev - 1].dr_fine[cp.coarsen(RATIO)] += (xq - xp) * (w * k);
                    }
                    (_, Category::Ghost) => {
                        regs[lev - 1].dr_fine[cq.coarsen(RATIO)] += (xp - xq) * (w * k);
                    }
                    _ => {}
                }
            }
        }
    }
}

/// Add the role-crossing transfers of one flux redistribution on level
/// `lev`, scaled by `wdt`, to the registers.
pub fn accumulate_frd(
    levels: &[Level],
    regs: &mut [SyncRegister],
    lev: usize,
    transfers: &[Transfer],
    wdt: f64,
) {
    let l = &levels[lev];
    for t in transfers {
        let (cs, cd) = (l.category(t.src), l.category(t.dst));
        if cs == cd {
            continue;
        }
        let amt = t.amount * wdt;
        match (cs, cd) {
            (Category::Uncovered, Category::Covered) => regs[lev].dr_coarse[t.src] += amt,
            (Category::Covered, Category::Uncovered) => regs[lev].dr_coarse[t.dst] -= amt,
            (_, Category::Ghost) => regs[lev - 1].dr_fine[t.dst.coarsen(RATIO)] += amt,
            (Category::Ghost, _) => regs[lev - 1].dr_fine[t.src.coarsen(RATIO)] -= amt,
            _ => {}
        }
    }
}

/// Add the intensive increment `du` to coarse cell `c` of level `lev` and,
/// if it is covered, to all its fluid descendants.
fn inject(levels: &mut [Level], lev: usize, c: Cell, du: Cons, touched: &mut Vec<(usize, Cell)>) {
    levels[lev].u[c] += du;
    touched.push((lev, c));
    if lev + 1 < levels.len() && levels[lev].covered.contains(c) {
        let fine = &levels[lev + 1];
        let kids: Vec<Cell> = IndexBox::new(c, c)
            .refine(RATIO)
            .cells()
            .filter(|f| fine.geom.is_fluid(*f))
            .collect();
        for f in kids {
            inject(levels, lev + 1, f, du, touched);
        }
    }
}

/// Apply the register between `lev` and `lev + 1` to the uncovered cells
/// of `lev`. The correction D of a cell is split into ΛD applied to the
/// cell itself and (1 − Λ)D spread over its monotone neighborhood by
/// volume, so small cells never receive an increment larger than
/// D / (Δx Δy). With `stabilize_sync` off the cell takes all of D.
///
/// Returns the applied and the accumulated-but-unapplied totals.
pub fn apply_sync(h: &mut Hierarchy, lev: usize) -> Result<(Cons, Cons)> {
    let reflux = h.opts.refluxing;
    let rerd = h.opts.rerd;
    let step = h.step;
    let stabilize = h.opts.stabilize_sync;
    let gas = h.opts.gas;
    let reg = &h.regs[lev];
    let dfc = reg.flux_corrections();
    let area = reg.area;
    let mut corr: Vec<(Cell, Cons)> = Vec::new();
    let mut applied = Cons::ZERO;
    let mut unapplied = Cons::ZERO;
    {
        let l = &h.levels[lev];
        for c in area.intersect(&l.valid).cells() {
            if l.category(c) != Category::Uncovered || !l.geom.is_fluid(c) {
                continue;
            }
            let (f, r) = (dfc[c], reg.combined(c));
            let mut d = Cons::ZERO;
            if reflux {
                d += f;
            } else {
                unapplied += f;
            }
            if rerd {
                d += r;
            } else {
                unapplied += r;
            }
            if d != Cons::ZERO {
                applied += d;
                corr.push((c, d));
            }
        }
    }
    let mut touched = Vec::new();
    for (c, d) in corr {
        let l = &h.levels[lev];
        let g = &l.geom;
        let lam = g.vfrac[c];
        let full = g.cell_volume();
        if !stabilize {
            let v = g.volume(c);
            inject(&mut h.levels, lev, c, d / v, &mut touched);
            continue;
        }
        if lam >= 1.0 {
            inject(&mut h.levels, lev, c, d / full, &mut touched);
            continue;
        }
        let nbh = monotone_neighborhood(g, &l.valid, c);
        let vn: f64 = nbh.iter().map(|q| g.volume(*q)).sum();
        let spread = d * ((1.0 - lam) / vn);
        inject(&mut h.levels, lev, c, d / full, &mut touched);
        for q in nbh {
            inject(&mut h.levels, lev, q, spread, &mut touched);
        }
    }
    for (l, c) in touched {
        let u = h.levels[l].u[c];
        if gas.prim(&u).is_err() {
            let pressure = (gas.gamma - 1.0) * u.internal_energy();
            return Err(Error::NegativeStateAfterSync {
                energy: u.e,
                pressure,
                site: Site {
                    level: Some(l),
                    step: Some(step),
                    cell: Some(c),
                },
            });
        }
    }
    Ok((applied, unapplied))
}

/// ℛ = Diag(V) Aᵀ Diag(V̂)⁻¹ A Diag(V) Diag(Û), stored by rows with the
/// sparsity of AᵀA. Entry (p, q) is the extensive contribution of the
/// provisional state of q to the gradient-free final state of p.
#[derive(Clone, Debug)]
pub struct RMatrix {
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<Cons>,
}

impl RMatrix {
    pub fn row(&self, p: usize) -> impl Iterator<Item = (usize, Cons)> + '_ {
        let s = self.row_ptr[p]..self.row_ptr[p + 1];
        self.col[s.clone()].iter().copied().zip(self.val[s].iter().copied())
    }

    pub fn entry(&self, p: usize, q: usize) -> Cons {
        self.row(p).find(|(c, _)| *c == q).map_or(Cons::ZERO, |(_, v)| v)
    }

    pub fn row_sum(&self, p: usize) -> Cons {
        self.row(p).map(|(_, v)| v).sum()
    }
}

pub fn build_r_matrix(m: &MergeMatrix, uhat: &BoxArray<Cons>) -> RMatrix {
    let n = m.len();
    let mut row_ptr = vec![0];
    let mut col = Vec::new();
    let mut val = Vec::new();
    let mut acc: Vec<(usize, Cons)> = Vec::new();
    for p in 0..n {
        acc.clear();
        if m.vol[p] > 0.0 {
            for (r, arp) in m.column(p) {
                let s = m.vol[p] * arp / m.vhat[r];
                for (q, arq) in m.row(r) {
                    let x = uhat[m.cell(q)] * (s * arq * m.vol[q]);
                    match acc.iter_mut().find(|(c, _)| *c == q) {
                        Some((_, v)) => *v += x,
                        None => acc.push((q, x)),
                    }
                }
            }
        }
        acc.sort_by_key(|(c, _)| *c);
        for &(q, x) in &acc {
            col.push(q);
            val.push(x);
        }
        row_ptr.push(col.len());
    }
    RMatrix { row_ptr, col, val }
}
