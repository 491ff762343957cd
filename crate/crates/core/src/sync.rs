//! Coarse/fine synchronization registers.
//!
//! One register lives between each pair of adjacent levels. It holds the
//! extensive flux corrections on the coarse faces of the coarse/fine
//! boundary and the redistribution corrections gathered on both levels.

use crate::euler::{Cons, COMPONENT_NAMES};
use crate::geometry::LevelGeometry;
use crate::godunov::FaceFluxes;
use crate::index::{Axis, BoxArray, Cell, FaceArrays, IndexBox};

/// Cells within this distance of the covered region can receive
/// redistribution corrections.
pub const REGISTER_HALO: i32 = 4;

/// A face of the coarse/fine boundary as seen from the coarse level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfFace {
    pub axis: Axis,
    /// Coarse face index (low face of the cell with that index).
    pub face: Cell,
    /// The uncovered coarse cell sharing the face.
    pub uncovered: Cell,
    /// +1 if the uncovered cell is on the low side of the face.
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct SyncRegister {
    pub ratio: i32,
    /// Coarse cells covered by the fine level.
    pub covered: IndexBox,
    /// Coarse level domain.
    pub domain: IndexBox,
    /// Cells that may carry corrections.
    pub area: IndexBox,
    /// δF per coarse face, signed as the amount added to the uncovered
    /// neighbor.
    pub df: FaceArrays<Cons>,
    /// Coarse-level redistribution correction per uncovered cell.
    pub dr_coarse: BoxArray<Cons>,
    /// Fine-level redistribution correction, summed over the ghost cells
    /// overlaying each coarse cell.
    pub dr_fine: BoxArray<Cons>,
    faces: Vec<CfFace>,
}

impl SyncRegister {
    pub fn new(covered: IndexBox, domain: IndexBox, ratio: i32) -> Self {
        let area = covered.grow(REGISTER_HALO);
        let mut faces = Vec::new();
        for axis in Axis::ALL {
            let t = axis.other();
            let (tlo, thi) = (covered.lo.get(t), covered.hi.get(t));
            for s in tlo..=thi {
                let base = match axis {
                    Axis::X => Cell::new(covered.lo.i, s),
                    Axis::Y => Cell::new(s, covered.lo.j),
                };
                let lo_face = base;
                let hi_face = base.step(axis, covered.size(axis));
                let cand = [
                    (lo_face, lo_face.step(axis, -1), 1.0),
                    (hi_face, hi_face, -1.0),
                ];
                for (face, unc, sign) in cand {
                    if domain.contains(unc) {
                        faces.push(CfFace {
                            axis,
                            face,
                            uncovered: unc,
                            sign,
                        });
                    }
                }
            }
        }
        SyncRegister {
            ratio,
            covered,
            domain,
            area,
            df: FaceArrays::new(covered, Cons::ZERO),
            dr_coarse: BoxArray::new(area, Cons::ZERO),
            dr_fine: BoxArray::new(area, Cons::ZERO),
            faces,
        }
    }

    pub fn reset(&mut self) {
        self.df.x.fill(Cons::ZERO);
        self.df.y.fill(Cons::ZERO);
        self.dr_coarse.fill(Cons::ZERO);
        self.dr_fine.fill(Cons::ZERO);
    }

    pub fn faces(&self) -> &[CfFace] {
        &self.faces
    }

    /// Add `wdt` times the coarse extensive fluxes on every boundary face.
    pub fn accumulate_coarse(&mut self, g: &LevelGeometry, ff: &FaceFluxes, wdt: f64) {
        for f in &self.faces {
            let a = g.afrac.dir(f.axis)[f.face] * g.face_len(f.axis);
            if a == 0.0 {
                continue;
            }
            let flux = ff.dir(f.axis)[f.face];
            self.df.dir_mut(f.axis)[f.face] += flux * (f.sign * wdt * a);
        }
    }

    /// Subtract `wdt` times the fine extensive fluxes on the fine faces that
    /// make up each coarse boundary face. Returns the mass moved across the
    /// interface, summed in absolute value over fine faces.
    pub fn accumulate_fine(&mut self, g: &LevelGeometry, ff: &FaceFluxes, wdt: f64) -> f64 {
        let r = self.ratio;
        let mut crossing = 0.0;
        for f in &self.faces {
            let t = f.axis.other();
            let base = Cell::new(f.face.i * r, f.face.j * r);
            let mut acc = Cons::ZERO;
            for k in 0..r {
                let fine = base.step(t, k);
                let a = g.afrac.dir(f.axis)[fine] * g.face_len(f.axis);
                if a == 0.0 {
                    continue;
                }
                let flux = ff.dir(f.axis)[fine] * (wdt * a);
                crossing += flux.rho.abs();
                acc += flux;
            }
            self.df.dir_mut(f.axis)[f.face] -= acc * f.sign;
        }
        crossing
    }

    /// Sum of the face corrections of an uncovered cell.
    pub fn flux_correction(&self, c: Cell) -> Cons {
        let mut s = Cons::ZERO;
        for f in &self.faces {
            if f.uncovered == c {
                s += self.df.dir(f.axis)[f.face];
            }
        }
        s
    }

    /// Face corrections folded onto their uncovered cells.
    pub fn flux_corrections(&self) -> BoxArray<Cons> {
        let mut out = BoxArray::new(self.area, Cons::ZERO);
        for f in &self.faces {
            out[f.uncovered] += self.df.dir(f.axis)[f.face];
        }
        out
    }

    /// δ𝐑: coarse and fine redistribution corrections combined.
    pub fn combined(&self, c: Cell) -> Cons {
        self.dr_coarse[c] + self.dr_fine[c]
    }

    /// Register dump rows: (I, J, component, δR coarse, δR fine, δF, δ𝐑).
    pub fn dump_rows(&self) -> Vec<RegisterRow> {
        let dfc = self.flux_corrections();
        let mut rows = Vec::new();
        for c in self.area.cells() {
            let (rc, rf, f) = (self.dr_coarse[c], self.dr_fine[c], dfc[c]);
            if rc == Cons::ZERO && rf == Cons::ZERO && f == Cons::ZERO {
                continue;
            }
            for (k, name) in COMPONENT_NAMES.iter().enumerate() {
                rows.push(RegisterRow {
                    i: c.i,
                    j: c.j,
                    component: name,
                    dr_coarse: rc.comp(k),
                    dr_fine: rf.comp(k),
                    df: f.comp(k),
                    dr_total: rc.comp(k) + rf.comp(k),
                });
            }
        }
        rows
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RegisterRow {
    #[serde(rename = "I")]
    pub i: i32,
    #[serde(rename = "J")]
    pub j: i32,
    pub component: &'static str,
    #[serde(rename = "δR_coarse")]
    pub dr_coarse: f64,
    #[serde(rename = "δR_fine")]
    pub dr_fine: f64,
    #[serde(rename = "δF")]
    pub df: f64,
    #[serde(rename = "δ𝐑")]
    pub dr_total: f64,
}
