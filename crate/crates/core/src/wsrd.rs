//! Weighted state redistribution.
//!
//! Every fluid cell `r` owns a merging neighborhood `M(r)` (just `{r}` unless
//! `r` is small). The merge matrix stores row `r` as the weighted
//! contributions `a_{r,p}` of each member `p`; its columns sum to one, which
//! is what makes the redistribution conservative.

use crate::error::{Error, Result};
use crate::euler::Cons;
use crate::geometry::LevelGeometry;
use crate::index::{Axis, BoxArray, Cell, IndexBox};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MergeStrategy {
    /// Merge along the boundary normal, completing a 2×2 block if needed.
    #[default]
    Normal,
    /// Merge with every fluid cell of the surrounding 3×3 box.
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WsrdOptions {
    pub gradients: bool,
    pub limit: bool,
}

impl Default for WsrdOptions {
    fn default() -> Self {
        WsrdOptions {
            gradients: true,
            limit: true,
        }
    }
}

/// Merging neighborhoods of all fluid cells of a region.
#[derive(Clone, Debug)]
pub struct Neighborhoods {
    pub region: IndexBox,
    /// Members of M(r), owner first, as linear indices into `region`.
    pub members: Vec<Vec<usize>>,
}

/// Choose neighborhoods for every small cell of `region` (V < ΔxΔy/2).
/// Neighborhoods never leave `region`. Cells within one cell of the region
/// edge whose neighborhood is truncated keep what they can reach; elsewhere
/// failure to reach the target is an error.
pub fn build_neighborhoods(
    g: &LevelGeometry,
    region: IndexBox,
    strategy: MergeStrategy,
) -> Result<Neighborhoods> {
    let lin = |c: Cell| -> usize {
        ((c.j - region.lo.j) as usize) * region.nx() as usize + (c.i - region.lo.i) as usize
    };
    let vt = g.v_target();
    let fluid = |c: Cell| region.contains(c) && g.is_fluid(c);
    let inner = region.grow(-1);
    let mut members = Vec::with_capacity(region.len());
    for p in region.cells() {
        let mut m: Vec<Cell> = Vec::new();
        if !g.is_fluid(p) {
            members.push(Vec::new());
            continue;
        }
        m.push(p);
        let vp = g.volume(p);
        if vp < vt {
            let mut set: Vec<Cell> = vec![p];
            if strategy == MergeStrategy::Normal {
                normal_candidates(g, p, &fluid, &mut set);
            }
            let total = |s: &[Cell]| s.iter().map(|c| g.volume(*c)).sum::<f64>();
            if strategy == MergeStrategy::Central || total(&set) < vt {
                set.truncate(1);
                for dj in -1..=1 {
                    for di in -1..=1 {
                        let q = p.shift(di, dj);
                        if q != p && fluid(q) {
                            set.push(q);
                        }
                    }
                }
            }
            if total(&set) < vt && inner.contains(p) {
                return Err(Error::InsufficientVolume(p));
            }
            m = set;
        }
        members.push(m.into_iter().map(lin).collect());
    }
    Ok(Neighborhoods { region, members })
}

fn normal_candidates(
    g: &LevelGeometry,
    p: Cell,
    fluid: &impl Fn(Cell) -> bool,
    set: &mut Vec<Cell>,
) {
    let (nx, ny) = g.eb_normal[p];
    let vt = g.v_target();
    let (dom, oth, nd, no) = if nx.abs() >= ny.abs() {
        (Axis::X, Axis::Y, nx, ny)
    } else {
        (Axis::Y, Axis::X, ny, nx)
    };
    if nd == 0.0 && no == 0.0 {
        return;
    }
    let sd = if nd >= 0.0 { 1 } else { -1 };
    let c1 = p.step(dom, sd);
    let face1 = if sd > 0 { c1 } else { p };
    let c1_ok = fluid(c1) && g.afrac.dir(dom)[face1] > 0.0;
    if c1_ok {
        set.push(c1);
    }
    let vol: f64 = set.iter().map(|c| g.volume(*c)).sum();
    if vol >= vt {
        return;
    }
    let so = if no > 0.0 {
        1
    } else if no < 0.0 {
        -1
    } else {
        // no transverse component: take the larger side
        let up = p.step(oth, 1);
        let dn = p.step(oth, -1);
        let vu = if fluid(up) { g.volume(up) } else { 0.0 };
        let vd = if fluid(dn) { g.volume(dn) } else { 0.0 };
        if vu >= vd {
            1
        } else {
            -1
        }
    };
    let c2 = p.step(oth, so);
    if fluid(c2) {
        set.push(c2);
    }
    let diag = c1.step(oth, so);
    if fluid(diag) {
        set.push(diag);
    }
}

/// Sparse merge matrix with neighborhood volumes and centroids.
#[derive(Clone, Debug)]
pub struct MergeMatrix {
    pub region: IndexBox,
    /// Row r: entries (p, a_{r,p}), diagonal first.
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
    /// Column p: entries (r, a_{r,p}).
    pub tptr: Vec<usize>,
    pub trow: Vec<usize>,
    pub tval: Vec<f64>,
    pub vol: Vec<f64>,
    pub cent: Vec<(f64, f64)>,
    pub vhat: Vec<f64>,
    pub xhat: Vec<(f64, f64)>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub count: Vec<u32>,
    /// Cells whose final value can differ from the provisional one.
    pub active: Vec<usize>,
    pub dx: f64,
    pub dy: f64,
}

impl MergeMatrix {
    pub fn len(&self) -> usize {
        self.vol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vol.is_empty()
    }

    pub fn cell(&self, k: usize) -> Cell {
        let nx = self.region.nx() as usize;
        Cell::new(
            self.region.lo.i + (k % nx) as i32,
            self.region.lo.j + (k / nx) as i32,
        )
    }

    pub fn index(&self, c: Cell) -> usize {
        ((c.j - self.region.lo.j) as usize) * self.region.nx() as usize
            + (c.i - self.region.lo.i) as usize
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col[s.clone()].iter().copied().zip(self.val[s].iter().copied())
    }

    pub fn column(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.tptr[p]..self.tptr[p + 1];
        self.trow[s.clone()].iter().copied().zip(self.tval[s].iter().copied())
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    /// Entry a_{r,p} (zero if absent).
    pub fn entry(&self, r: usize, p: usize) -> f64 {
        self.row(r).find(|(c, _)| *c == p).map_or(0.0, |(_, v)| v)
    }

    /// Neighborhood-owning rows with more than one member.
    pub fn merged_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|r| self.row_len(*r) > 1)
    }

    /// Largest deviation of a column sum from one over fluid columns.
    pub fn column_sum_error(&self) -> f64 {
        let mut sums = vec![0.0; self.len()];
        for r in 0..self.len() {
            for (p, a) in self.row(r) {
                sums[p] += a;
            }
        }
        sums.iter()
            .zip(&self.vol)
            .filter(|(_, v)| **v > 0.0)
            .map(|(s, _)| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Test hook: scale one off-diagonal entry so column sums no longer hold.
    pub fn corrupt(&mut self) {
        let first = self.merged_rows().next();
        if let Some(r) = first {
            let k = self.row_ptr[r] + 1;
            self.val[k] *= 1.5;
        } else if !self.val.is_empty() {
            self.val[0] *= 1.5;
        }
    }
}

/// β, α, the merge matrix, neighborhood volumes and centroids.
pub fn assemble(g: &LevelGeometry, nb: &Neighborhoods) -> MergeMatrix {
    let region = nb.region;
    let n = region.len();
    let vt = g.v_target();
    let cells: Vec<Cell> = region.cells().collect();
    let vol: Vec<f64> = cells.iter().map(|c| g.volume(*c)).collect();
    let cent: Vec<(f64, f64)> = cells.iter().map(|c| g.centroid[*c]).collect();
    let mut count = vec![0u32; n];
    for m in &nb.members {
        for &p in m {
            count[p] += 1;
        }
    }
    let mut beta = vec![0.0; n];
    for (r, m) in nb.members.iter().enumerate() {
        if m.len() > 1 && vol[r] < vt {
            let others: f64 = m[1..].iter().map(|p| vol[*p]).sum();
            if others > 0.0 {
                beta[r] = ((vt - vol[r]) / others).min(1.0);
            }
        }
    }
    let mut bsum = vec![0.0; n];
    for (r, m) in nb.members.iter().enumerate() {
        for &p in m.iter().skip(1) {
            bsum[p] += beta[r];
        }
    }
    let alpha: Vec<f64> = (0..n)
        .map(|p| {
            if count[p] == 0 {
                0.0
            } else {
                1.0 - bsum[p] / count[p] as f64
            }
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    let mut vhat = vec![0.0; n];
    let mut xhat = cent.clone();
    row_ptr.push(0);
    for (r, m) in nb.members.iter().enumerate() {
        if !m.is_empty() {
            col.push(r);
            val.push(alpha[r]);
            let mut vh = alpha[r] * vol[r];
            let mut mx = vh * cent[r].0;
            let mut my = vh * cent[r].1;
            for &p in m.iter().skip(1) {
                let a = beta[r] / count[p] as f64;
                col.push(p);
                val.push(a);
                let w = a * vol[p];
                vh += w;
                mx += w * cent[p].0;
                my += w * cent[p].1;
            }
            vhat[r] = vh;
            if m.len() > 1 && vh > 0.0 {
                xhat[r] = (mx / vh, my / vh);
            }
        }
        row_ptr.push(col.len());
    }

    // transpose
    let mut tcount = vec![0usize; n + 1];
    for &p in &col {
        tcount[p + 1] += 1;
    }
    for k in 0..n {
        tcount[k + 1] += tcount[k];
    }
    let tptr = tcount.clone();
    let mut fill = tcount;
    let mut trow = vec![0; col.len()];
    let mut tval = vec![0.0; col.len()];
    for r in 0..n {
        for k in row_ptr[r]..row_ptr[r + 1] {
            let p = col[k];
            trow[fill[p]] = r;
            tval[fill[p]] = val[k];
            fill[p] += 1;
        }
    }

    let mut active = Vec::new();
    for p in 0..n {
        let rl = row_ptr[p + 1] - row_ptr[p];
        let cl = tptr[p + 1] - tptr[p];
        if rl > 1 || cl > 1 {
            active.push(p);
        }
    }

    MergeMatrix {
        region,
        row_ptr,
        col,
        val,
        tptr,
        trow,
        tval,
        vol,
        cent,
        vhat,
        xhat,
        alpha,
        beta,
        count,
        active,
        dx: g.dx,
        dy: g.dy,
    }
}

/// Build neighborhoods and assemble the merge matrix in one step.
pub fn merge_matrix(
    g: &LevelGeometry,
    region: IndexBox,
    strategy: MergeStrategy,
) -> Result<MergeMatrix> {
    let nb = build_neighborhoods(g, region, strategy)?;
    Ok(assemble(g, &nb))
}

/// Q̂ = Diag(V̂)⁻¹ A Diag(V) Û over the region; singleton rows return Û.
pub fn neighborhood_averages(m: &MergeMatrix, uhat: &BoxArray<Cons>) -> Vec<Cons> {
    let mut q: Vec<Cons> = (0..m.len()).map(|k| uhat[m.cell(k)]).collect();
    for r in m.merged_rows() {
        if m.vhat[r] <= 0.0 {
            continue;
        }
        let mut acc = Cons::ZERO;
        for (p, a) in m.row(r) {
            acc += uhat[m.cell(p)] * (a * m.vol[p]);
        }
        q[r] = acc / m.vhat[r];
    }
    q
}

/// Limited least-squares gradients of Q̂ for every merged neighborhood.
/// Entry r is (σ̂x, σ̂y); singleton neighborhoods have zero gradient.
pub fn neighborhood_gradients(
    m: &MergeMatrix,
    qhat: &[Cons],
    opts: WsrdOptions,
) -> Vec<(Cons, Cons)> {
    let mut out = vec![(Cons::ZERO, Cons::ZERO); m.len()];
    if !opts.gradients {
        return out;
    }
    let region = m.region;
    let mut pts: Vec<usize> = Vec::with_capacity(25);
    for r in m.merged_rows() {
        let rc = m.cell(r);
        let gather = |wx: i32, wy: i32, pts: &mut Vec<usize>| {
            pts.clear();
            for dj in -wy..=wy {
                for di in -wx..=wx {
                    let c = rc.shift(di, dj);
                    if region.contains(c) {
                        let k = m.index(c);
                        if m.vol[k] > 0.0 {
                            pts.push(k);
                        }
                    }
                }
            }
        };
        let spread = |pts: &[usize]| -> (f64, f64) {
            let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for &k in pts {
                let (x, y) = m.xhat[k];
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
            (x1 - x0, y1 - y0)
        };
        gather(1, 1, &mut pts);
        let (sx, sy) = spread(&pts);
        let wx = if sx < 0.5 * m.dx { 2 } else { 1 };
        let wy = if sy < 0.5 * m.dy { 2 } else { 1 };
        if wx > 1 || wy > 1 {
            gather(wx, wy, &mut pts);
        }
        let (sx, sy) = spread(&pts);
        let use_x = sx >= 0.5 * m.dx;
        let use_y = sy >= 0.5 * m.dy;
        let (xr, yr) = m.xhat[r];
        let qr = qhat[r];
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        let (mut bx, mut by) = (Cons::ZERO, Cons::ZERO);
        let mut npts = 0;
        for &k in &pts {
            if k == r {
                continue;
            }
            let dx = m.xhat[k].0 - xr;
            let dy = m.xhat[k].1 - yr;
            let dq = qhat[k] - qr;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
            bx += dq * dx;
            by += dq * dy;
            npts += 1;
        }
        let (gx, gy) = if use_x && use_y && npts >= 2 {
            let det = sxx * syy - sxy * sxy;
            if det > 1e-12 * sxx * syy {
                (
                    (bx * syy - by * sxy) / det,
                    (by * sxx - bx * sxy) / det,
                )
            } else {
                (Cons::ZERO, Cons::ZERO)
            }
        } else if use_x && npts >= 1 && sxx > 0.0 {
            (bx / sxx, Cons::ZERO)
        } else if use_y && npts >= 1 && syy > 0.0 {
            (Cons::ZERO, by / syy)
        } else {
            (Cons::ZERO, Cons::ZERO)
        };
        let (gx, gy) = if opts.limit {
            barth_jespersen(m, r, qhat, &pts, gx, gy)
        } else {
            (gx, gy)
        };
        out[r] = (gx, gy);
    }
    out
}

/// Scale each component of the gradient so that the reconstruction at the
/// member centroids stays within the stencil bounds of Q̂.
fn barth_jespersen(
    m: &MergeMatrix,
    r: usize,
    qhat: &[Cons],
    stencil: &[usize],
    gx: Cons,
    gy: Cons,
) -> (Cons, Cons) {
    let qr = qhat[r];
    let mut qmin = qr;
    let mut qmax = qr;
    for &k in stencil {
        qmin = qmin.zip(qhat[k], f64::min);
        qmax = qmax.zip(qhat[k], f64::max);
    }
    let (xr, yr) = m.xhat[r];
    let mut phi = [1.0f64; 4];
    for (p, _) in m.row(r) {
        let (x, y) = m.cent[p];
        let d = gx * (x - xr) + gy * (y - yr);
        for k in 0..4 {
            let dk = d.comp(k);
            let lim = if dk > 0.0 {
                (qmax.comp(k) - qr.comp(k)) / dk
            } else if dk < 0.0 {
                (qmin.comp(k) - qr.comp(k)) / dk
            } else {
                1.0
            };
            phi[k] = phi[k].min(lim.max(0.0));
        }
    }
    let phi = Cons::from_array(phi);
    (
        gx.zip(phi, |g, f| g * f),
        gy.zip(phi, |g, f| g * f),
    )
}

/// U^{n+1}_p = Σ_{r∈W(p)} a_{r,p} q̂_r(x_p). Cells outside `m.active` are
/// copied unchanged.
pub fn apply(
    m: &MergeMatrix,
    uhat: &BoxArray<Cons>,
    qhat: &[Cons],
    grads: &[(Cons, Cons)],
    out: &mut BoxArray<Cons>,
) {
    for c in m.region.cells() {
        if m.vol[m.index(c)] > 0.0 {
            out[c] = uhat[c];
        }
    }
    for &p in &m.active {
        if m.vol[p] <= 0.0 {
            continue;
        }
        let (xp, yp) = m.cent[p];
        let mut acc = Cons::ZERO;
        for (r, a) in m.column(p) {
            let (xr, yr) = m.xhat[r];
            let (gx, gy) = grads[r];
            acc += (qhat[r] + gx * (xp - xr) + gy * (yp - yr)) * a;
        }
        out[m.cell(p)] = acc;
    }
}

/// Everything a redistribution step leaves behind for the synchronization.
#[derive(Clone, Debug)]
pub struct WsrdRecord {
    pub uhat: BoxArray<Cons>,
    pub grads: Vec<(Cons, Cons)>,
}

/// Full redistribution of a provisional state. Returns the new state on the
/// region together with the provisional state and gradients used.
pub fn redistribute(
    m: &MergeMatrix,
    uhat: &BoxArray<Cons>,
    opts: WsrdOptions,
) -> (BoxArray<Cons>, WsrdRecord) {
    let q = neighborhood_averages(m, uhat);
    let grads = neighborhood_gradients(m, &q, opts);
    let mut out = BoxArray::new(m.region, Cons::ZERO);
    apply(m, uhat, &q, &grads, &mut out);
    let rec_uhat = BoxArray::from_fn(m.region, |c| uhat[c]);
    (
        out,
        WsrdRecord {
            uhat: rec_uhat,
            grads,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImplicitFn;

    #[test]
    fn all_regular_rows_are_identity() {
        let g = LevelGeometry::build(
            &ImplicitFn::AllFluid,
            IndexBox::from_size(5, 4),
            0.1,
            0.1,
            (0.0, 0.0),
        )
        .unwrap();
        let m = merge_matrix(&g, g.bx, MergeStrategy::Normal).unwrap();
        assert!(m.active.is_empty());
        assert!(m.val.iter().all(|v| *v == 1.0));
        assert_eq!(m.val.len(), 20);
    }
}
