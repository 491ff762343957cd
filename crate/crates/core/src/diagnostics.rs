//! Conservation ledger, centerline profiles, schlieren fields and output
//! files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::amr::{Hierarchy, Totals};
use crate::error::Result;
use crate::euler::{Cons, ExactRiemann, Prim, COMPONENT_NAMES, NCOMP};
use crate::index::{Axis, BoxArray, Cell};

/// One coarse step of the conservation ledger. All per-step quantities are
/// extensive.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub refluxing: bool,
    pub rerd: bool,
    /// Composite totals after the step.
    pub total: Cons,
    /// Change of the composite totals over the step.
    pub change: Cons,
    /// Flux through domain boundary faces and the embedded boundary.
    pub bflux: Cons,
    /// Mass crossing coarse/fine interfaces (fine-side, absolute).
    pub cfflux_mass: f64,
    /// Change the synchronization failed to make: minus the accumulated but
    /// unapplied corrections.
    pub sync: Cons,
    /// change − bflux.
    pub defect: Cons,
    /// defect − sync; zero up to round-off when the register explains the
    /// whole defect.
    pub residual: Cons,
    /// Per-component scale for relative measures.
    pub scale: Cons,
}

impl LedgerRow {
    /// Build a row from the totals before and after a step and the step's
    /// budget. `moved` is Σ V|ΔU| over composite cells.
    pub fn new(h: &Hierarchy, dt: f64, before: &Totals, after: &Totals, moved: Cons) -> Self {
        let b = &h.budget;
        let change = after.sum - before.sum;
        let defect = change - b.boundary;
        let sync = -b.unapplied;
        LedgerRow {
            step: h.step,
            time: h.time,
            dt,
            refluxing: h.opts.refluxing,
            rerd: h.opts.rerd,
            total: after.sum,
            change,
            bflux: b.boundary,
            cfflux_mass: b.cf_mass,
            sync,
            defect,
            residual: defect - sync,
            scale: before.abs + b.boundary_abs + moved,
        }
    }

    fn rel(x: Cons, s: Cons) -> Cons {
        x.zip(s, |a, b| if b > 0.0 { a.abs() / b } else { a.abs() })
    }

    /// |defect| relative to the component scale.
    pub fn rel_defect(&self) -> Cons {
        Self::rel(self.defect, self.scale)
    }

    /// |residual| relative to the component scale.
    pub fn rel_residual(&self) -> Cons {
        Self::rel(self.residual, self.scale)
    }

    pub fn header() -> Vec<String> {
        let mut h: Vec<String> = ["step", "time", "dt"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(COMPONENT_NAMES.iter().map(|s| s.to_string()));
        for prefix in ["d", "bflux"] {
            h.extend(COMPONENT_NAMES.iter().map(|c| format!("{prefix}_{c}")));
        }
        h.push("cfflux_mass".into());
        for prefix in ["sync", "defect", "residual", "rel_residual"] {
            h.extend(COMPONENT_NAMES.iter().map(|c| format!("{prefix}_{c}")));
        }
        h.push("refluxing".into());
        h.push("rerd".into());
        h
    }

    pub fn record(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.17e}");
        let mut r = vec![
            self.step.to_string(),
            f(self.time),
            f(self.dt),
        ];
        let rel = self.rel_residual();
        for c in [self.total, self.change, self.bflux] {
            r.extend((0..NCOMP).map(|k| f(c.comp(k))));
        }
        r.push(f(self.cfflux_mass));
        for c in [self.sync, self.defect, self.residual, rel] {
            r.extend((0..NCOMP).map(|k| f(c.comp(k))));
        }
        r.push((self.refluxing as u8).to_string());
        r.push((self.rerd as u8).to_string());
        r
    }
}

pub fn write_ledger(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(LedgerRow::header()).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

/// Σ V |ΔU| per component between two composite snapshots of the same
/// layout.
pub fn snapshot_change(a: &[Cons], b: &[Cons]) -> Cons {
    assert_eq!(a.len(), b.len(), "composite layout changed within a step");
    a.iter()
        .zip(b)
        .fold(Cons::ZERO, |acc, (x, y)| acc + (*y - *x).abs())
}

/// Sample of the finest valid fluid cell containing a point.
pub fn sample(h: &Hierarchy, x: f64, y: f64) -> Option<(usize, Cell, Cons)> {
    for l in h.levels.iter().rev() {
        let g = &l.geom;
        let c = Cell::new(
            ((x - g.origin.0) / g.dx).floor() as i32,
            ((y - g.origin.1) / g.dy).floor() as i32,
        );
        if l.valid.contains(c) {
            if g.is_fluid(c) {
                return Some((l.lev, c, l.u[c]));
            }
            return None;
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub s: f64,
    pub rho: f64,
    /// Velocity along the line.
    pub u: f64,
    /// Velocity across the line.
    pub v: f64,
    pub p: f64,
    pub exact_rho: f64,
    pub exact_u: f64,
    pub exact_p: f64,
}

/// Line through `center` in direction `angle` (radians), sampled at `n`
/// equally spaced points with |s| ≤ `half_length`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub center: (f64, f64),
    pub angle: f64,
    pub half_length: f64,
    pub n: usize,
}

impl Line {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let (sn, cs) = self.angle.sin_cos();
        (0..self.n).map(move |k| {
            let s = -self.half_length + 2.0 * self.half_length * (k as f64 + 0.5) / self.n as f64;
            (s, self.center.0 + s * cs, self.center.1 + s * sn)
        })
    }
}

/// Nearest-cell samples along a line, rotated into line coordinates. If an
/// exact Riemann solution is given (with the discontinuity at s = 0 at
/// time zero), its values at `time` fill the exact columns; otherwise they
/// are NaN.
pub fn centerline_profile(
    h: &Hierarchy,
    line: &Line,
    exact: Option<&ExactRiemann>,
    time: f64,
) -> Result<Vec<ProfilePoint>> {
    let (sn, cs) = line.angle.sin_cos();
    let mut out = Vec::new();
    for (s, x, y) in line.points() {
        let Some((_, _, u)) = sample(h, x, y) else {
            continue;
        };
        let w = h.opts.gas.prim(&u)?;
        let (er, eu, ep) = match exact {
            Some(ex) if time > 0.0 => {
                let e = ex.sample(s / time);
                (e.rho, e.u, e.p)
            }
            Some(ex) => {
                let e = if s <= 0.0 { ex.left } else { ex.right };
                (e.rho, e.u, e.p)
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        out.push(ProfilePoint {
            s,
            rho: w.rho,
            u: w.u * cs + w.v * sn,
            v: -w.u * sn + w.v * cs,
            p: w.p,
            exact_rho: er,
            exact_u: eu,
            exact_p: ep,
        });
    }
    Ok(out)
}

/// ∫ |ρ − ρ_exact| ds along a profile, by the midpoint rule.
pub fn l1_density_error(profile: &[ProfilePoint], line: &Line) -> f64 {
    let ds = 2.0 * line.half_length / line.n as f64;
    profile
        .iter()
        .map(|p| (p.rho - p.exact_rho).abs() * ds)
        .sum()
}

/// |∇ρ| on every cell of `cells`, from central differences over fluid
/// neighbors (one-sided next to the body, zero if both neighbors are
/// body). Body cells get NaN.
pub fn schlieren(
    g: &crate::geometry::LevelGeometry,
    u: &BoxArray<Cons>,
    cells: crate::index::IndexBox,
) -> BoxArray<f64> {
    BoxArray::from_fn(cells, |c| {
        if !g.is_fluid(c) {
            return f64::NAN;
        }
        let mut grad = [0.0; 2];
        for axis in Axis::ALL {
            let h = match axis {
                Axis::X => g.dx,
                Axis::Y => g.dy,
            };
            let rho = |q: Cell| {
                if g.is_fluid(q) {
                    u.get(q).map(|v| v.rho)
                } else {
                    None
                }
            };
            let (m, p) = (rho(c.step(axis, -1)), rho(c.step(axis, 1)));
            let r0 = u[c].rho;
            grad[axis as usize] = match (m, p) {
                (Some(a), Some(b)) => (b - a) / (2.0 * h),
                (Some(a), None) => (r0 - a) / h,
                (None, Some(b)) => (b - r0) / h,
                (None, None) => 0.0,
            };
        }
        grad[0].hypot(grad[1])
    })
}

#[derive(Serialize)]
struct Manifest {
    step: usize,
    time: f64,
    nlevels: usize,
    levels: Vec<ManifestLevel>,
}

#[derive(Serialize)]
struct ManifestLevel {
    level: usize,
    lo: [i32; 2],
    hi: [i32; 2],
    dx: f64,
    dy: f64,
    file: String,
}

fn prim_or_nan(h: &Hierarchy, u: &Cons, fluid: bool) -> Prim {
    if fluid {
        h.opts
            .gas
            .prim(u)
            .unwrap_or(Prim::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN))
    } else {
        Prim::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    }
}

/// Write one CSV per level (valid cells) and a manifest. Returns the
/// manifest path.
pub fn write_plotfile(h: &Hierarchy, dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut levels = Vec::new();
    for l in &h.levels {
        let file = format!("{name}_level{}.csv", l.lev);
        let mut w = csv::Writer::from_path(dir.join(&file)).map_err(csv_err)?;
        w.write_record(["i", "j", "x", "y", "Λ", "rho", "u", "v", "p"])
            .map_err(csv_err)?;
        for c in l.valid.cells() {
            let (x, y) = l.geom.center(c);
            let fluid = l.geom.is_fluid(c);
            let p = prim_or_nan(h, &l.u[c], fluid);
            w.write_record(&[
                c.i.to_string(),
                c.j.to_string(),
                format!("{x:.10e}"),
                format!("{y:.10e}"),
                format!("{:.17e}", l.geom.vfrac[c]),
                format!("{:.17e}", p.rho),
                format!("{:.17e}", p.u),
                format!("{:.17e}", p.v),
                format!("{:.17e}", p.p),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        levels.push(ManifestLevel {
            level: l.lev,
            lo: [l.valid.lo.i, l.valid.lo.j],
            hi: [l.valid.hi.i, l.valid.hi.j],
            dx: l.dx(),
            dy: l.dy(),
            file,
        });
    }
    let m = Manifest {
        step: h.step,
        time: h.time,
        nlevels: h.nlevels(),
        levels,
    };
    let path = dir.join(format!("{name}_manifest.toml"));
    std::fs::write(&path, toml::to_string(&m).expect("manifest serializes"))?;
    Ok(path)
}

/// Schlieren CSV of all levels' valid cells: level,i,j,x,y,grad_rho.
pub fn write_schlieren(h: &Hierarchy, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["level", "i", "j", "x", "y", "grad_rho"])
        .map_err(csv_err)?;
    for l in &h.levels {
        let s = schlieren(&l.geom, &l.u, l.valid);
        for c in l.valid.cells() {
            let (x, y) = l.geom.center(c);
            w.write_record(&[
                l.lev.to_string(),
                c.i.to_string(),
                c.j.to_string(),
                format!("{x:.10e}"),
                format!("{y:.10e}"),
                format!("{:.10e}", s[c]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile(path: &Path, profile: &[ProfilePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for p in profile {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Geometry of every level's storage box, one CSV per level:
/// i,j,Λ,ax_lo,ax_hi,ay_lo,ay_hi,Af,nfx,nfy,class.
pub fn write_geometry(h: &Hierarchy, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for l in &h.levels {
        let p = dir.join(format!("geometry_level{}.csv", l.lev));
        let mut w = csv::Writer::from_path(&p).map_err(csv_err)?;
        for row in l.geom.dump_rows(&l.valid) {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush()?;
        files.push(p);
    }
    Ok(files)
}

/// Merge matrix of every level that has one, as CSV triplets
/// row,col,value followed by the (i, j) of both cells. Rows and columns
/// index the level's redistribution region in row-major order.
pub fn write_merge_matrices(h: &Hierarchy, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for l in &h.levels {
        let Some(m) = &l.merge else { continue };
        let p = dir.join(format!("merge_level{}.csv", l.lev));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&p)?);
        writeln!(w, "row,col,value,row_i,row_j,col_i,col_j")?;
        for r in 0..m.len() {
            let rc = m.cell(r);
            for (c, v) in m.row(r) {
                let cc = m.cell(c);
                writeln!(w, "{r},{c},{v:.17e},{},{},{},{}", rc.i, rc.j, cc.i, cc.j)?;
            }
        }
        w.flush()?;
        files.push(p);
    }
    Ok(files)
}

/// Append the register rows of one synchronization to a CSV stream.
pub fn write_register_rows(
    out: &mut impl Write,
    step: usize,
    level: usize,
    rows: &[crate::sync::RegisterRow],
    header: bool,
) -> Result<()> {
    if header {
        writeln!(out, "step,level,I,J,component,δR_coarse,δR_fine,δF,δ𝐑")?;
    }
    for r in rows {
        writeln!(
            out,
            "{step},{level},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.i, r.j, r.component, r.dr_coarse, r.dr_fine, r.df, r.dr_total
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ImplicitFn, LevelGeometry};
    use crate::index::IndexBox;

    #[test]
    fn schlieren_of_linear_density_is_constant() {
        let g = LevelGeometry::build(
            &ImplicitFn::AllFluid,
            IndexBox::from_size(6, 6),
            0.5,
            0.5,
            (0.0, 0.0),
        )
        .unwrap();
        let u = BoxArray::from_fn(g.bx, |c| Cons::new(1.0 + 0.3 * c.i as f64 * 0.5, 0.0, 0.0, 1.0));
        let s = schlieren(&g, &u, g.bx);
        for (_, v) in s.iter() {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }
}
