//! Cut-cell geometry: volume and area fractions, centroids and boundary
//! normals from an implicit description of the body.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{Axis, BoxArray, Cell, FaceArrays, IndexBox};

const SNAP: f64 = 1e-12;

/// Implicit body description: negative is fluid, positive is body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImplicitFn {
    /// Fluid where |−x sinθ + y cosθ − c| < half_width, c = n·center.
    RotatedChannel {
        angle: f64,
        half_width: f64,
        center: (f64, f64),
    },
    Circle {
        center: (f64, f64),
        radius: f64,
        fluid_outside: bool,
    },
    AllFluid,
}

impl ImplicitFn {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            ImplicitFn::RotatedChannel {
                angle,
                half_width,
                center,
            } => {
                let (s, c) = angle.sin_cos();
                let off = -center.0 * s + center.1 * c;
                (-x * s + y * c - off).abs() - half_width
            }
            ImplicitFn::Circle {
                center,
                radius,
                fluid_outside,
            } => {
                let d2 = (x - center.0).powi(2) + (y - center.1).powi(2);
                if fluid_outside {
                    radius * radius - d2
                } else {
                    d2 - radius * radius
                }
            }
            ImplicitFn::AllFluid => -1.0,
        }
    }

    /// Parameters t in (0, 1) where the boundary crosses the segment p0→p1.
    fn roots(&self, p0: (f64, f64), p1: (f64, f64)) -> Vec<f64> {
        let mut out = Vec::new();
        match *self {
            ImplicitFn::RotatedChannel {
                angle,
                half_width,
                center,
            } => {
                let (sn, cs) = angle.sin_cos();
                let off = -center.0 * sn + center.1 * cs;
                let s0 = -p0.0 * sn + p0.1 * cs - off;
                let s1 = -p1.0 * sn + p1.1 * cs - off;
                let ds = s1 - s0;
                if ds != 0.0 {
                    for target in [half_width, -half_width] {
                        out.push((target - s0) / ds);
                    }
                }
            }
            ImplicitFn::Circle { center, radius, .. } => {
                let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
                let (fx, fy) = (p0.0 - center.0, p0.1 - center.1);
                let a = dx * dx + dy * dy;
                let b = 2.0 * (fx * dx + fy * dy);
                let c = fx * fx + fy * fy - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc > 0.0 {
                    let sq = disc.sqrt();
                    // numerically stable pair
                    let q = -0.5 * (b + b.signum() * sq);
                    let (r1, r2) = if q != 0.0 { (q / a, c / q) } else { (0.0, 0.0) };
                    out.push(r1);
                    out.push(r2);
                }
            }
            ImplicitFn::AllFluid => {}
        }
        out.retain(|t| *t > 0.0 && *t < 1.0);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Fluid sub-intervals of the segment p0→p1 as parameter ranges.
    fn fluid_intervals(&self, p0: (f64, f64), p1: (f64, f64)) -> Vec<(f64, f64)> {
        let mut bps = vec![0.0];
        bps.extend(self.roots(p0, p1));
        bps.push(1.0);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in bps.windows(2) {
            let tm = 0.5 * (w[0] + w[1]);
            let pm = (p0.0 + tm * (p1.0 - p0.0), p0.1 + tm * (p1.1 - p0.1));
            if self.eval(pm.0, pm.1) <= 0.0 {
                match out.last_mut() {
                    Some(last) if last.1 == w[0] => last.1 = w[1],
                    _ => out.push((w[0], w[1])),
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Regular,
    Cut,
    Body,
}

impl CellClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CellClass::Regular => "regular",
            CellClass::Cut => "cut",
            CellClass::Body => "body",
        }
    }
}

/// Embedded-boundary description of one level over a storage box.
#[derive(Clone, Debug)]
pub struct LevelGeometry {
    pub bx: IndexBox,
    pub dx: f64,
    pub dy: f64,
    /// Physical coordinates of the lower corner of cell (0, 0).
    pub origin: (f64, f64),
    pub vfrac: BoxArray<f64>,
    pub afrac: FaceArrays<f64>,
    /// Face centroid offset from the face center, in units of face length.
    pub fcent: FaceArrays<f64>,
    pub centroid: BoxArray<(f64, f64)>,
    pub eb_area: BoxArray<f64>,
    /// Unit normal pointing from the body into the fluid.
    pub eb_normal: BoxArray<(f64, f64)>,
    pub eb_centroid: BoxArray<(f64, f64)>,
    pub class: BoxArray<CellClass>,
}

impl LevelGeometry {
    pub fn v_target(&self) -> f64 {
        0.5 * self.dx * self.dy
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn volume(&self, c: Cell) -> f64 {
        self.vfrac[c] * self.dx * self.dy
    }

    pub fn center(&self, c: Cell) -> (f64, f64) {
        (
            self.origin.0 + (c.i as f64 + 0.5) * self.dx,
            self.origin.1 + (c.j as f64 + 0.5) * self.dy,
        )
    }

    pub fn is_fluid(&self, c: Cell) -> bool {
        self.vfrac.get(c).is_some_and(|v| *v > 0.0)
    }

    pub fn is_regular(&self, c: Cell) -> bool {
        self.class[c] == CellClass::Regular
    }

    /// Length of a full face normal to `axis`.
    pub fn face_len(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dy,
            Axis::Y => self.dx,
        }
    }

    /// Area fraction of the low face of `c` normal to `axis`.
    pub fn area_lo(&self, c: Cell, axis: Axis) -> f64 {
        self.afrac.dir(axis)[c]
    }

    pub fn area_hi(&self, c: Cell, axis: Axis) -> f64 {
        self.afrac.dir(axis)[c.step(axis, 1)]
    }

    /// A_f n_f from the face-difference identity.
    pub fn eb_vector(&self, c: Cell) -> (f64, f64) {
        (
            (self.area_hi(c, Axis::X) - self.area_lo(c, Axis::X)) * self.dy,
            (self.area_hi(c, Axis::Y) - self.area_lo(c, Axis::Y)) * self.dx,
        )
    }

    /// Build geometry on `bx` for a level whose cells have size dx × dy and
    /// whose cell (0, 0) has lower corner `origin`.
    pub fn build(
        f: &ImplicitFn,
        bx: IndexBox,
        dx: f64,
        dy: f64,
        origin: (f64, f64),
    ) -> Result<LevelGeometry> {
        assert!(dx > 0.0 && dy > 0.0);
        let corner = |i: i32, j: i32| (origin.0 + i as f64 * dx, origin.1 + j as f64 * dy);

        let mut afrac = FaceArrays::new(bx, 0.0);
        let mut fcent = FaceArrays::new(bx, 0.0);
        for axis in Axis::ALL {
            let fb = *afrac.dir(axis).domain();
            for fc in fb.cells() {
                let (p0, p1) = match axis {
                    Axis::X => (corner(fc.i, fc.j), corner(fc.i, fc.j + 1)),
                    Axis::Y => (corner(fc.i, fc.j), corner(fc.i + 1, fc.j)),
                };
                let ivs = f.fluid_intervals(p0, p1);
                let len: f64 = ivs.iter().map(|(a, b)| b - a).sum();
                let mom: f64 = ivs.iter().map(|(a, b)| 0.5 * (b * b - a * a)).sum();
                afrac.dir_mut(axis)[fc] = len;
                fcent.dir_mut(axis)[fc] = if len > 0.0 { mom / len - 0.5 } else { 0.0 };
            }
        }

        let mut vfrac = BoxArray::new(bx, 0.0);
        let mut centroid = BoxArray::new(bx, (0.0, 0.0));
        let mut eb_centroid = BoxArray::new(bx, (0.0, 0.0));
        for c in bx.cells() {
            let corners = [
                corner(c.i, c.j),
                corner(c.i + 1, c.j),
                corner(c.i + 1, c.j + 1),
                corner(c.i, c.j + 1),
            ];
            let mut poly: Vec<(f64, f64)> = Vec::with_capacity(8);
            let mut fluid_flags: Vec<bool> = Vec::with_capacity(8);
            let mut transitions: Vec<(f64, f64)> = Vec::new();
            for k in 0..4 {
                let (p0, p1) = (corners[k], corners[(k + 1) % 4]);
                let mut bps = vec![0.0];
                bps.extend(f.roots(p0, p1));
                bps.push(1.0);
                for w in bps.windows(2) {
                    let at = |t: f64| (p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1));
                    let pm = at(0.5 * (w[0] + w[1]));
                    let fluid = f.eval(pm.0, pm.1) <= 0.0;
                    if let Some(&prev) = fluid_flags.last() {
                        if prev != fluid {
                            transitions.push(at(w[0]));
                        }
                    }
                    fluid_flags.push(fluid);
                    if fluid {
                        for p in [at(w[0]), at(w[1])] {
                            if poly.last() != Some(&p) {
                                poly.push(p);
                            }
                        }
                    }
                }
            }
            if let (Some(&first), Some(&last)) = (fluid_flags.first(), fluid_flags.last()) {
                if first != last {
                    transitions.push(corners[0]);
                }
            }
            if transitions.len() > 2 {
                return Err(Error::MultiplyCutCell(c));
            }
            if poly.len() > 1 && poly.first() == poly.last() {
                poly.pop();
            }
            let (area, cx, cy) = polygon_area_centroid(&poly);
            let frac = area / (dx * dy);
            if !(-SNAP..=1.0 + SNAP).contains(&frac) {
                return Err(Error::DegenerateGeometry {
                    cell: c,
                    value: frac,
                });
            }
            vfrac[c] = frac.clamp(0.0, 1.0);
            let ctr = (corners[0].0 + 0.5 * dx, corners[0].1 + 0.5 * dy);
            centroid[c] = if area > 0.0 { (cx, cy) } else { ctr };
            eb_centroid[c] = if transitions.len() == 2 {
                (
                    0.5 * (transitions[0].0 + transitions[1].0),
                    0.5 * (transitions[0].1 + transitions[1].1),
                )
            } else {
                ctr
            };
        }

        let mut g = LevelGeometry {
            bx,
            dx,
            dy,
            origin,
            vfrac,
            afrac,
            fcent,
            centroid,
            eb_area: BoxArray::new(bx, 0.0),
            eb_normal: BoxArray::new(bx, (0.0, 0.0)),
            eb_centroid,
            class: BoxArray::new(bx, CellClass::Body),
        };
        g.finalize();
        Ok(g)
    }

    /// Snap tiny fractions, close faces next to body cells and recompute the
    /// boundary vectors and classification.
    fn finalize(&mut self) {
        for c in self.bx.cells() {
            let v = &mut self.vfrac[c];
            if *v < SNAP {
                *v = 0.0;
            }
        }
        for axis in Axis::ALL {
            let fb = *self.afrac.dir(axis).domain();
            for fc in fb.cells() {
                let lo = fc.step(axis, -1);
                let body_lo = self.vfrac.get(lo).is_some_and(|v| *v == 0.0);
                let body_hi = self.vfrac.get(fc).is_some_and(|v| *v == 0.0);
                let a = &mut self.afrac.dir_mut(axis)[fc];
                if *a < SNAP || body_lo || body_hi {
                    *a = 0.0;
                } else if *a > 1.0 - SNAP {
                    *a = 1.0;
                }
                if *a == 0.0 || *a == 1.0 {
                    self.fcent.dir_mut(axis)[fc] = 0.0;
                }
            }
        }
        for c in self.bx.cells() {
            let full_faces = Axis::ALL
                .iter()
                .all(|&ax| self.area_lo(c, ax) == 1.0 && self.area_hi(c, ax) == 1.0);
            if self.vfrac[c] > 1.0 - SNAP && full_faces {
                self.vfrac[c] = 1.0;
            }
            let v = self.vfrac[c];
            let (ax, ay) = self.eb_vector(c);
            let af = ax.hypot(ay);
            if v == 0.0 {
                self.class[c] = CellClass::Body;
                self.eb_area[c] = 0.0;
                self.eb_normal[c] = (0.0, 0.0);
                self.centroid[c] = self.center(c);
            } else if v == 1.0 && full_faces {
                self.class[c] = CellClass::Regular;
                self.eb_area[c] = 0.0;
                self.eb_normal[c] = (0.0, 0.0);
                self.centroid[c] = self.center(c);
            } else {
                self.class[c] = CellClass::Cut;
                self.eb_area[c] = af;
                self.eb_normal[c] = if af > 0.0 { (ax / af, ay / af) } else { (0.0, 0.0) };
            }
        }
    }

    /// Average this geometry onto a level coarser by `r`.
    pub fn coarsen(&self, r: i32) -> Result<LevelGeometry> {
        if !self.bx.is_coarsenable(r) {
            return Err(Error::IncompatibleBoxes(format!(
                "{:?} not divisible by {r}",
                self.bx
            )));
        }
        let cbx = self.bx.coarsen(r);
        let rf = r as f64;
        let (dx, dy) = (self.dx * rf, self.dy * rf);
        let origin = self.origin;
        let mut vfrac = BoxArray::new(cbx, 0.0);
        let mut centroid = BoxArray::new(cbx, (0.0, 0.0));
        let mut eb_centroid = BoxArray::new(cbx, (0.0, 0.0));
        for cc in cbx.cells() {
            let (mut sv, mut sx, mut sy) = (0.0, 0.0, 0.0);
            let (mut sa, mut ex, mut ey) = (0.0, 0.0, 0.0);
            for fc in IndexBox::new(cc, cc).refine(r).cells() {
                let v = self.vfrac[fc];
                let (x, y) = self.centroid[fc];
                sv += v;
                sx += v * x;
                sy += v * y;
                let a = self.eb_area[fc];
                let (px, py) = self.eb_centroid[fc];
                sa += a;
                ex += a * px;
                ey += a * py;
            }
            let ctr = (
                origin.0 + (cc.i as f64 + 0.5) * dx,
                origin.1 + (cc.j as f64 + 0.5) * dy,
            );
            vfrac[cc] = sv / (rf * rf);
            centroid[cc] = if sv > 0.0 { (sx / sv, sy / sv) } else { ctr };
            eb_centroid[cc] = if sa > 0.0 { (ex / sa, ey / sa) } else { ctr };
        }
        let mut afrac = FaceArrays::new(cbx, 0.0);
        let mut fcent = FaceArrays::new(cbx, 0.0);
        for axis in Axis::ALL {
            let t = axis.other();
            let fb = *afrac.dir(axis).domain();
            for cf in fb.cells() {
                let base = Cell::new(cf.i * r, cf.j * r);
                let (mut sa, mut sm) = (0.0, 0.0);
                for k in 0..r {
                    let ff = base.step(t, k);
                    let a = self.afrac.dir(axis)[ff];
                    // fine centroid position in coarse face units, from coarse face center
                    let pos = ((k as f64 + 0.5 + self.fcent.dir(axis)[ff]) / rf) - 0.5;
                    sa += a;
                    sm += a * pos;
                }
                afrac.dir_mut(axis)[cf] = sa / rf;
                fcent.dir_mut(axis)[cf] = if sa > 0.0 { sm / sa } else { 0.0 };
            }
        }
        let mut g = LevelGeometry {
            bx: cbx,
            dx,
            dy,
            origin,
            vfrac,
            afrac,
            fcent,
            centroid,
            eb_area: BoxArray::new(cbx, 0.0),
            eb_normal: BoxArray::new(cbx, (0.0, 0.0)),
            eb_centroid,
            class: BoxArray::new(cbx, CellClass::Body),
        };
        g.finalize();
        Ok(g)
    }

    /// Replace cells and faces inside `coarse.bx` by the given coarsened
    /// geometry, so that both levels agree wherever they overlap.
    pub fn overlay(&mut self, coarse: &LevelGeometry) {
        let ov = self.bx.intersect(&coarse.bx);
        if ov.is_empty() {
            return;
        }
        for c in ov.cells() {
            self.vfrac[c] = coarse.vfrac[c];
            self.centroid[c] = coarse.centroid[c];
            self.eb_centroid[c] = coarse.eb_centroid[c];
        }
        for axis in Axis::ALL {
            for fc in ov.faces(axis).cells() {
                self.afrac.dir_mut(axis)[fc] = coarse.afrac.dir(axis)[fc];
                self.fcent.dir_mut(axis)[fc] = coarse.fcent.dir(axis)[fc];
            }
        }
        self.finalize();
    }

    /// Smallest volume fraction over non-body cells of `region`.
    pub fn min_fluid_vfrac(&self, region: &IndexBox) -> Option<(Cell, f64)> {
        region
            .intersect(&self.bx)
            .cells()
            .filter(|c| self.vfrac[*c] > 0.0)
            .map(|c| (c, self.vfrac[c]))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    }

    /// Rows of the geometry dump for `region`.
    pub fn dump_rows(&self, region: &IndexBox) -> Vec<GeomRow> {
        region
            .intersect(&self.bx)
            .cells()
            .map(|c| GeomRow {
                i: c.i,
                j: c.j,
                vfrac: self.vfrac[c],
                ax_lo: self.area_lo(c, Axis::X),
                ax_hi: self.area_hi(c, Axis::X),
                ay_lo: self.area_lo(c, Axis::Y),
                ay_hi: self.area_hi(c, Axis::Y),
                af: self.eb_area[c],
                nfx: self.eb_normal[c].0,
                nfy: self.eb_normal[c].1,
                class: self.class[c],
            })
            .collect()
    }
}

/// One line of the geometry dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeomRow {
    pub i: i32,
    pub j: i32,
    #[serde(rename = "Λ")]
    pub vfrac: f64,
    pub ax_lo: f64,
    pub ax_hi: f64,
    pub ay_lo: f64,
    pub ay_hi: f64,
    #[serde(rename = "Af")]
    pub af: f64,
    pub nfx: f64,
    pub nfy: f64,
    pub class: CellClass,
}

fn polygon_area_centroid(p: &[(f64, f64)]) -> (f64, f64, f64) {
    if p.len() < 3 {
        return (0.0, 0.0, 0.0);
    }
    // shift for accuracy
    let o = p[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..p.len() {
        let (x0, y0) = (p[k].0 - o.0, p[k].1 - o.1);
        let q = p[(k + 1) % p.len()];
        let (x1, y1) = (q.0 - o.0, q.1 - o.1);
        let cr = x0 * y1 - x1 * y0;
        a2 += cr;
        cx += (x0 + x1) * cr;
        cy += (y0 + y1) * cr;
    }
    if a2 <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    (0.5 * a2, o.0 + cx / (3.0 * a2), o.1 + cy / (3.0 * a2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fluid_is_regular() {
        let g = LevelGeometry::build(
            &ImplicitFn::AllFluid,
            IndexBox::from_size(4, 3),
            0.5,
            0.5,
            (0.0, 0.0),
        )
        .unwrap();
        assert!(g.class.values().iter().all(|c| *c == CellClass::Regular));
        assert!(g.vfrac.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn horizontal_channel_fractions() {
        // walls at y = ±0.3 on unit cells: boundary rows are 30% / 70% fluid
        let f = ImplicitFn::RotatedChannel {
            angle: 0.0,
            half_width: 1.3,
            center: (0.0, 0.0),
        };
        let g = LevelGeometry::build(
            &f,
            IndexBox::new(Cell::new(-2, -2), Cell::new(1, 1)),
            1.0,
            1.0,
            (0.0, 0.0),
        )
        .unwrap();
        let top = Cell::new(0, 1);
        assert!((g.vfrac[top] - 0.3).abs() < 1e-14);
        assert!((g.area_lo(top, Axis::X) - 0.3).abs() < 1e-14);
        assert_eq!(g.area_lo(top, Axis::Y), 1.0);
        assert_eq!(g.area_hi(top, Axis::Y), 0.0);
        assert_eq!(g.eb_normal[top], (0.0, -1.0));
        assert!((g.centroid[top].1 - 1.15).abs() < 1e-14);
        let bot = Cell::new(0, -2);
        assert!((g.vfrac[bot] - 0.3).abs() < 1e-14);
        assert_eq!(g.eb_normal[bot], (0.0, 1.0));
    }
}
