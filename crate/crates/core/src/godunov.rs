//! Unsplit piecewise-linear Godunov fluxes with cut-cell gating, the MUSCL
//! variant used by the method-of-lines integrator, and the conservative
//! divergence.

use crate::error::Result;
use crate::euler::{Cons, Gas, Prim};
use crate::geometry::LevelGeometry;
use crate::index::{Axis, BoxArray, Cell, FaceArrays, IndexBox};

/// Primitive vector (rho, u, v, p) for slope arithmetic.
pub type P4 = [f64; 4];

fn to_p4(w: &Prim) -> P4 {
    [w.rho, w.u, w.v, w.p]
}

fn from_p4(a: &P4) -> Prim {
    Prim::new(a[0], a[1], a[2], a[3])
}

/// Spatial reconstruction used to build face states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconstruction {
    /// Fourth-order limited slopes, characteristic tracing and transverse
    /// corrections (single-step, time-centered).
    Godunov,
    /// Second-order MC slopes, spatial extrapolation only.
    Muscl,
}

/// Fluxes per unit area on the faces of a region plus the outward EB flux
/// per unit boundary length of each cut cell.
#[derive(Clone, Debug)]
pub struct FaceFluxes {
    pub region: IndexBox,
    pub f: FaceArrays<Cons>,
    pub eb: BoxArray<Cons>,
}

impl FaceFluxes {
    pub fn dir(&self, axis: Axis) -> &BoxArray<Cons> {
        self.f.dir(axis)
    }
}

/// Domain faces that are slip walls. The flux on such a face is the
/// Riemann flux between the interior state and its mirror image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Walls {
    pub domain: IndexBox,
    /// Indexed by axis: is the low (high) domain side a wall.
    pub lo: [bool; 2],
    pub hi: [bool; 2],
}

impl Walls {
    pub fn none() -> Self {
        Walls {
            domain: IndexBox::new(Cell::new(i32::MIN / 4, i32::MIN / 4), Cell::new(i32::MAX / 4, i32::MAX / 4)),
            lo: [false; 2],
            hi: [false; 2],
        }
    }

    /// Which side of `face` (normal to `axis`) lies inside the domain, if
    /// the face is a wall face: `Some(true)` when the interior is on the high
    /// side.
    pub fn wall_side(&self, axis: Axis, face: Cell) -> Option<bool> {
        let k = axis as usize;
        let f = face.get(axis);
        if self.lo[k] && f == self.domain.lo.get(axis) {
            Some(true)
        } else if self.hi[k] && f == self.domain.hi.get(axis) + 1 {
            Some(false)
        } else {
            None
        }
    }
}

fn mirror(a: &P4, axis: Axis) -> P4 {
    let mut m = *a;
    let ni = match axis {
        Axis::X => 1,
        Axis::Y => 2,
    };
    m[ni] = -m[ni];
    m
}

/// Primitive variables on every fluid cell of the storage box. Body cells
/// get a placeholder that gating keeps out of every stencil.
pub fn primitives(g: &LevelGeometry, u: &BoxArray<Cons>, gas: &Gas) -> Result<BoxArray<Prim>> {
    let mut w = BoxArray::new(*u.domain(), Prim::default());
    for c in u.domain().cells() {
        if g.is_fluid(c) {
            w[c] = gas.prim(&u[c]).map_err(|e| e.with_cell(c))?;
        }
    }
    Ok(w)
}

fn open(g: &LevelGeometry, axis: Axis, face: Cell) -> bool {
    g.afrac.dir(axis).get(face).is_some_and(|a| *a > 0.0)
}

/// Limited slopes in direction `axis` on `region`. Fourth-order MC slopes
/// need the four faces of the five-point stencil open; otherwise the
/// second-order MC slope is used when both faces of the cell are open, and
/// the slope is zero when neither applies (or when `fourth` is false and
/// the second-order test fails).
pub fn slopes(
    g: &LevelGeometry,
    w: &BoxArray<Prim>,
    axis: Axis,
    region: IndexBox,
    fourth: bool,
) -> BoxArray<P4> {
    let mut out = BoxArray::new(region, [0.0; 4]);
    let store = *w.domain();
    let mc2 = |c: Cell| -> Option<(P4, P4, P4)> {
        // (second-order limited slope, dlim, dcen)
        let (cm, cp) = (c.step(axis, -1), c.step(axis, 1));
        if !(store.contains(cm) && store.contains(cp)) {
            return None;
        }
        if !(open(g, axis, c) && open(g, axis, cp)) {
            return None;
        }
        let (a, b, d) = (to_p4(&w[cm]), to_p4(&w[c]), to_p4(&w[cp]));
        let mut s = [0.0; 4];
        let mut lim = [0.0; 4];
        let mut cen = [0.0; 4];
        for k in 0..4 {
            let dl = b[k] - a[k];
            let dr = d[k] - b[k];
            let dc = 0.5 * (d[k] - a[k]);
            let dlim = if dl * dr >= 0.0 {
                2.0 * dl.abs().min(dr.abs())
            } else {
                0.0
            };
            s[k] = dc.signum() * dc.abs().min(dlim);
            lim[k] = dlim;
            cen[k] = dc;
        }
        Some((s, lim, cen))
    };
    for c in region.cells() {
        if !g.is_fluid(c) {
            continue;
        }
        let Some((s2, lim, cen)) = mc2(c) else {
            continue;
        };
        let four_ok = fourth
            && open(g, axis, c.step(axis, -1))
            && open(g, axis, c.step(axis, 2))
            && store.contains(c.step(axis, -2))
            && store.contains(c.step(axis, 2));
        if four_ok {
            let sm = mc2(c.step(axis, -1)).map(|t| t.0);
            let sp = mc2(c.step(axis, 1)).map(|t| t.0);
            if let (Some(sm), Some(sp)) = (sm, sp) {
                let mut s = [0.0; 4];
                for k in 0..4 {
                    let t = 4.0 / 3.0 * cen[k] - (sp[k] + sm[k]) / 6.0;
                    s[k] = cen[k].signum() * lim[k].min(t.abs());
                }
                out[c] = s;
                continue;
            }
        }
        out[c] = s2;
    }
    out
}

/// Characteristic tracing of the x-face states of a cell (for `axis` = Y the
/// roles of u and v are swapped). Returns (low-face right state, high-face
/// left state).
pub fn trace(w: &Prim, dw: &P4, axis: Axis, dtdx: f64, gas: &Gas) -> (P4, P4) {
    let c = gas.sound_speed(w);
    let (un, _) = w.split(axis);
    let (ni, ti) = match axis {
        Axis::X => (1, 2),
        Axis::Y => (2, 1),
    };
    let (drho, dun, dut, dp) = (dw[0], dw[ni], dw[ti], dw[3]);
    let rho = w.rho;
    let c2 = c * c;
    let alpha = [
        (dp - rho * c * dun) / (2.0 * c2),
        drho - dp / c2,
        dut,
        (dp + rho * c * dun) / (2.0 * c2),
    ];
    let lambda = [un - c, un, un, un + c];
    // eigenvectors in (rho, un, ut, p)
    let rvec = [
        [1.0, -c / rho, 0.0, c2],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [1.0, c / rho, 0.0, c2],
    ];
    let base = [w.rho, un, w.split(axis).1, w.p];
    let mut hi = base;
    let mut lo = base;
    for k in 0..4 {
        let fp = 0.5 * (1.0 - dtdx * lambda[k].max(0.0)) * alpha[k];
        let fm = 0.5 * (1.0 + dtdx * lambda[k].min(0.0)) * alpha[k];
        for m in 0..4 {
            hi[m] += fp * rvec[k][m];
            lo[m] -= fm * rvec[k][m];
        }
    }
    let unsplit = |s: [f64; 4]| -> P4 {
        let mut o = [0.0; 4];
        o[0] = s[0];
        o[ni] = s[1];
        o[ti] = s[2];
        o[3] = s[3];
        o
    };
    (unsplit(lo), unsplit(hi))
}

/// Face states per cell: `lo[c]` is the state just inside the low face of
/// `c`, `hi[c]` just inside the high face.
struct Predicted {
    lo: BoxArray<P4>,
    hi: BoxArray<P4>,
}

fn predict_normal(
    g: &LevelGeometry,
    w: &BoxArray<Prim>,
    axis: Axis,
    region: IndexBox,
    dt: f64,
    recon: Reconstruction,
    gas: &Gas,
) -> Predicted {
    let fourth = recon == Reconstruction::Godunov;
    let dw = slopes(g, w, axis, region, fourth);
    let dtdx = dt / match axis {
        Axis::X => g.dx,
        Axis::Y => g.dy,
    };
    let mut lo = BoxArray::new(region, [0.0; 4]);
    let mut hi = BoxArray::new(region, [0.0; 4]);
    for c in region.cells() {
        if !g.is_fluid(c) {
            continue;
        }
        let wc = &w[c];
        match recon {
            Reconstruction::Godunov => {
                let (l, h) = trace(wc, &dw[c], axis, dtdx, gas);
                // fall back to the cell value if tracing leaves the admissible set
                let base = to_p4(wc);
                lo[c] = if from_p4(&l).is_physical() { l } else { base };
                hi[c] = if from_p4(&h).is_physical() { h } else { base };
            }
            Reconstruction::Muscl => {
                let b = to_p4(wc);
                let s = dw[c];
                for k in 0..4 {
                    lo[c][k] = b[k] - 0.5 * s[k];
                    hi[c][k] = b[k] + 0.5 * s[k];
                }
            }
        }
    }
    Predicted { lo, hi }
}

/// Riemann fluxes on all open faces normal to `axis` of `faces`, using the
/// high state of the low cell and the low state of the high cell.
fn riemann_faces(
    g: &LevelGeometry,
    pred: &Predicted,
    axis: Axis,
    faces: IndexBox,
    walls: &Walls,
    gas: &Gas,
) -> Result<BoxArray<Cons>> {
    let mut f = BoxArray::new(faces, Cons::ZERO);
    for fc in faces.cells() {
        if !open(g, axis, fc) {
            continue;
        }
        let cl = fc.step(axis, -1);
        let (l, r) = match walls.wall_side(axis, fc) {
            Some(true) => (from_p4(&mirror(&pred.lo[fc], axis)), from_p4(&pred.lo[fc])),
            Some(false) => (from_p4(&pred.hi[cl]), from_p4(&mirror(&pred.hi[cl], axis))),
            None => (from_p4(&pred.hi[cl]), from_p4(&pred.lo[fc])),
        };
        let phys = |p: &Prim, c: Cell| -> Result<()> {
            if p.is_physical() {
                Ok(())
            } else {
                Err(crate::Error::NegativePressure {
                    value: p.p.min(p.rho),
                    site: Default::default(),
                }
                .with_cell(c))
            }
        };
        phys(&l, cl)?;
        phys(&r, fc)?;
        f[fc] = gas.riemann_two_shock(&l, &r, axis)?;
    }
    Ok(f)
}

/// Face fluxes on the faces of `region` (stored region must provide a
/// four-cell halo around it).
pub fn compute_fluxes(
    g: &LevelGeometry,
    u: &BoxArray<Cons>,
    region: IndexBox,
    dt: f64,
    recon: Reconstruction,
    walls: &Walls,
    gas: &Gas,
) -> Result<FaceFluxes> {
    let w = primitives(g, u, gas)?;
    compute_fluxes_prim(g, &w, region, dt, recon, walls, gas)
}

pub fn compute_fluxes_prim(
    g: &LevelGeometry,
    w: &BoxArray<Prim>,
    region: IndexBox,
    dt: f64,
    recon: Reconstruction,
    walls: &Walls,
    gas: &Gas,
) -> Result<FaceFluxes> {
    let mut f = FaceArrays::new(region, Cons::ZERO);
    match recon {
        Reconstruction::Muscl => {
            let cells = region.grow(1);
            for axis in Axis::ALL {
                let pred = predict_normal(g, w, axis, cells, 0.0, recon, gas);
                *f.dir_mut(axis) = riemann_faces(g, &pred, axis, region.faces(axis), walls, gas)?;
            }
        }
        Reconstruction::Godunov => {
            let cells = region.grow(1);
            let wide = region.grow(2);
            let px = predict_normal(g, w, Axis::X, wide, dt, recon, gas);
            let py = predict_normal(g, w, Axis::Y, wide, dt, recon, gas);
            // transverse fluxes from the normal predictions
            let tx = riemann_faces(g, &px, Axis::X, wide.shrink_axis(Axis::X).faces(Axis::X), walls, gas)?;
            let ty = riemann_faces(g, &py, Axis::Y, wide.shrink_axis(Axis::Y).faces(Axis::Y), walls, gas)?;
            for axis in Axis::ALL {
                let t = axis.other();
                let (pred, trans) = match axis {
                    Axis::X => (&px, &ty),
                    Axis::Y => (&py, &tx),
                };
                let dtdt = 0.5 * dt
                    / match t {
                        Axis::X => g.dx,
                        Axis::Y => g.dy,
                    };
                let mut corrected = Predicted {
                    lo: BoxArray::new(cells, [0.0; 4]),
                    hi: BoxArray::new(cells, [0.0; 4]),
                };
                for c in cells.cells() {
                    if !g.is_fluid(c) {
                        continue;
                    }
                    corrected.lo[c] = pred.lo[c];
                    corrected.hi[c] = pred.hi[c];
                    let (f_lo, f_hi) = (c, c.step(t, 1));
                    if !(open(g, t, f_lo) && open(g, t, f_hi)) {
                        continue;
                    }
                    let du = (trans[f_hi] - trans[f_lo]) * dtdt;
                    for (src, dst) in [
                        (pred.lo[c], &mut corrected.lo[c]),
                        (pred.hi[c], &mut corrected.hi[c]),
                    ] {
                        let uc = gas.cons(&from_p4(&src)) - du;
                        if let Ok(wc) = gas.prim(&uc) {
                            *dst = to_p4(&wc);
                        }
                    }
                }
                *f.dir_mut(axis) =
                    riemann_faces(g, &corrected, axis, region.faces(axis), walls, gas)?;
            }
        }
    }
    let mut eb = BoxArray::new(region, Cons::ZERO);
    for c in region.cells() {
        if g.eb_area.get(c).is_some_and(|a| *a > 0.0) {
            eb[c] = gas
                .eb_wall_flux(&w[c], g.eb_normal[c])
                .map_err(|e| e.with_cell(c))?;
        }
    }
    let mut out = FaceFluxes { region, f, eb };
    centroid_correct(g, &mut out);
    Ok(out)
}

/// Move fluxes on partially covered faces from the face center to the face
/// centroid by linear interpolation toward the neighboring face.
pub fn centroid_correct(g: &LevelGeometry, ff: &mut FaceFluxes) {
    for axis in Axis::ALL {
        let t = axis.other();
        let src = ff.f.dir(axis).clone();
        let faces = *src.domain();
        for fc in faces.cells() {
            let a = g.afrac.dir(axis)[fc];
            let off = g.fcent.dir(axis)[fc];
            if a <= 0.0 || a >= 1.0 || off == 0.0 {
                continue;
            }
            let nb = fc.step(t, if off > 0.0 { 1 } else { -1 });
            if !faces.contains(nb) || !open(g, axis, nb) {
                continue;
            }
            let w = off.abs();
            ff.f.dir_mut(axis)[fc] = src[fc] * (1.0 - w) + src[nb] * w;
        }
    }
}

/// δU^c = −(Σ_faces ± A F + A_f F^f) / V on every fluid cell of the flux
/// region; zero on body cells.
pub fn divergence(g: &LevelGeometry, ff: &FaceFluxes) -> BoxArray<Cons> {
    let region = ff.region;
    let mut out = BoxArray::new(region, Cons::ZERO);
    for c in region.cells() {
        let v = g.volume(c);
        if v <= 0.0 {
            continue;
        }
        let mut acc = Cons::ZERO;
        for axis in Axis::ALL {
            let len = g.face_len(axis);
            let fa = ff.f.dir(axis);
            let hi = c.step(axis, 1);
            acc += fa[hi] * (g.afrac.dir(axis)[hi] * len) - fa[c] * (g.afrac.dir(axis)[c] * len);
        }
        acc += ff.eb[c] * g.eb_area[c];
        out[c] = -(acc / v);
    }
    out
}
