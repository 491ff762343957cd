//! Block-structured hierarchy with one rectangular box per level, refinement
//! ratio two and subcycling in time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{Cons, Gas, Prim};
use crate::frd::{self, FrdNeighborhoods};
use crate::geometry::{ImplicitFn, LevelGeometry};
use crate::godunov::{self, FaceFluxes, Reconstruction, Walls};
use crate::index::{Axis, BoxArray, Cell, IndexBox};
use crate::rerd;
use crate::sync::SyncRegister;
use crate::wsrd::{self, MergeMatrix, MergeStrategy, WsrdOptions};

/// Ghost frame of every level's storage.
pub const NGHOST: i32 = 8;
/// Fluxes and redistribution are computed on the valid box grown by this.
pub const FLUX_HALO: i32 = 4;
pub const RATIO: i32 = 2;
/// Minimum distance from a fine box to its parent's own boundary.
pub const NEST_MARGIN: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Godunov,
    Mol,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Redistribution {
    #[default]
    WsrdNormal,
    WsrdCentral,
    Frd,
}

impl Redistribution {
    pub fn strategy(self) -> Option<MergeStrategy> {
        match self {
            Redistribution::WsrdNormal => Some(MergeStrategy::Normal),
            Redistribution::WsrdCentral => Some(MergeStrategy::Central),
            Redistribution::Frd => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Outflow,
    SlipWall,
    Periodic,
}

/// Physical boundary conditions, indexed by axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Boundary {
    pub lo: [BcKind; 2],
    pub hi: [BcKind; 2],
}

impl Boundary {
    pub fn all(kind: BcKind) -> Self {
        Boundary {
            lo: [kind; 2],
            hi: [kind; 2],
        }
    }

    pub fn walls(&self, domain: IndexBox) -> Walls {
        Walls {
            domain,
            lo: [self.lo[0] == BcKind::SlipWall, self.lo[1] == BcKind::SlipWall],
            hi: [self.hi[0] == BcKind::SlipWall, self.hi[1] == BcKind::SlipWall],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub integrator: Integrator,
    pub redistribution: Redistribution,
    pub wsrd: WsrdOptions,
    /// Density-weighted instead of volume-weighted flux redistribution.
    pub frd_density_weights: bool,
    pub refluxing: bool,
    pub rerd: bool,
    /// Split corrections to cut cells between the cell and its neighbors.
    /// Off, the whole correction goes into the cell.
    pub stabilize_sync: bool,
    pub cfl: f64,
    pub gas: Gas,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            integrator: Integrator::Godunov,
            redistribution: Redistribution::WsrdNormal,
            wsrd: WsrdOptions::default(),
            frd_density_weights: false,
            refluxing: true,
            rerd: true,
            stabilize_sync: true,
            cfl: 0.4,
            gas: Gas::default(),
        }
    }
}

/// Role of a cell of a level with respect to the composite solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// Valid and not overlaid by the next finer level.
    Uncovered,
    /// Valid and overlaid by the next finer level.
    Covered,
    /// Outside the valid box.
    Ghost,
}

/// Uniform mesh description of the coarsest level.
#[derive(Clone, Debug)]
pub struct BaseGrid {
    pub domain: IndexBox,
    pub dx: f64,
    pub dy: f64,
    /// Physical position of the lower corner of cell (0, 0).
    pub origin: (f64, f64),
}

impl BaseGrid {
    pub fn new(n: (i32, i32), lo: (f64, f64), hi: (f64, f64)) -> Self {
        BaseGrid {
            domain: IndexBox::from_size(n.0, n.1),
            dx: (hi.0 - lo.0) / n.0 as f64,
            dy: (hi.1 - lo.1) / n.1 as f64,
            origin: lo,
        }
    }

    pub fn level_domain(&self, lev: usize) -> IndexBox {
        self.domain.refine(RATIO.pow(lev as u32))
    }

    pub fn spacing(&self, lev: usize) -> (f64, f64) {
        let r = RATIO.pow(lev as u32) as f64;
        (self.dx / r, self.dy / r)
    }

    /// Smallest box of cells at `lev` containing the physical rectangle,
    /// aligned so that it can be coarsened to `lev - 1`.
    pub fn box_from_physical(&self, lev: usize, lo: (f64, f64), hi: (f64, f64)) -> IndexBox {
        let (dx, dy) = self.spacing(lev);
        let fl = |x: f64, o: f64, d: f64| ((x - o) / d + 1e-9).floor() as i32;
        let cl = |x: f64, o: f64, d: f64| ((x - o) / d - 1e-9).ceil() as i32 - 1;
        let mut b = IndexBox::new(
            Cell::new(fl(lo.0, self.origin.0, dx), fl(lo.1, self.origin.1, dy)),
            Cell::new(cl(hi.0, self.origin.0, dx), cl(hi.1, self.origin.1, dy)),
        );
        if lev > 0 {
            b = b.coarsen(RATIO).refine(RATIO);
        }
        b.intersect(&self.level_domain(lev))
    }
}

pub struct Level {
    pub lev: usize,
    pub valid: IndexBox,
    pub storage: IndexBox,
    /// Cells whose fluxes and redistribution are computed.
    pub region: IndexBox,
    pub domain: IndexBox,
    pub geom: LevelGeometry,
    pub u: BoxArray<Cons>,
    pub u_old: BoxArray<Cons>,
    pub t_old: f64,
    pub t_new: f64,
    /// Next finer level's valid box, coarsened; empty if none.
    pub covered: IndexBox,
    pub merge: Option<MergeMatrix>,
    pub frd: Option<FrdNeighborhoods>,
}

impl Level {
    pub fn category(&self, c: Cell) -> Category {
        if !self.valid.contains(c) {
            Category::Ghost
        } else if self.covered.contains(c) {
            Category::Covered
        } else {
            Category::Uncovered
        }
    }

    pub fn dx(&self) -> f64 {
        self.geom.dx
    }

    pub fn dy(&self) -> f64 {
        self.geom.dy
    }
}

/// Per coarse step accounting of everything that changes the composite
/// totals besides interior fluxes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepBudget {
    /// Extensive change through domain boundary faces and the embedded
    /// boundary of composite cells.
    pub boundary: Cons,
    /// Sum of the magnitudes of the terms in `boundary`.
    pub boundary_abs: Cons,
    /// Mass moved across coarse/fine interfaces (fine side, absolute).
    pub cf_mass: f64,
    /// Corrections that were accumulated but not applied.
    pub unapplied: Cons,
    /// Corrections that were applied.
    pub applied: Cons,
}

/// Composite extensive totals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Totals {
    pub sum: Cons,
    /// Σ V |U| per component.
    pub abs: Cons,
}

pub struct Hierarchy {
    pub base: BaseGrid,
    pub levels: Vec<Level>,
    /// `regs[l]` couples levels l and l + 1.
    pub regs: Vec<SyncRegister>,
    pub opts: SolverOptions,
    pub bc: Boundary,
    pub shape: ImplicitFn,
    pub step: usize,
    pub time: f64,
    pub budget: StepBudget,
}

/// Build level geometries for the given valid boxes, finest first, so that
/// every coarse cell under a finer level carries the averaged fine
/// geometry.
pub fn build_geometries(
    shape: &ImplicitFn,
    base: &BaseGrid,
    boxes: &[IndexBox],
) -> Result<Vec<LevelGeometry>> {
    let mut out: Vec<LevelGeometry> = Vec::with_capacity(boxes.len());
    for lev in (0..boxes.len()).rev() {
        let (dx, dy) = base.spacing(lev);
        let storage = boxes[lev].grow(NGHOST);
        let mut g = LevelGeometry::build(shape, storage, dx, dy, base.origin)?;
        if let Some(fine) = out.last() {
            let c = fine.coarsen(RATIO)?;
            g.overlay(&c);
        }
        out.push(g);
    }
    out.reverse();
    Ok(out)
}

impl Hierarchy {
    /// Create a hierarchy with the given valid boxes (level 0 is the
    /// domain) and initial primitive state evaluated at cell centroids.
    pub fn new(
        base: BaseGrid,
        boxes: &[IndexBox],
        shape: ImplicitFn,
        bc: Boundary,
        opts: SolverOptions,
        init: &dyn Fn(f64, f64) -> Prim,
    ) -> Result<Hierarchy> {
        let mut all = vec![base.domain];
        all.extend_from_slice(boxes);
        check_nesting(&base, &all)?;
        let geoms = build_geometries(&shape, &base, &all)?;
        let mut levels = Vec::new();
        for (lev, g) in geoms.into_iter().enumerate() {
            let u = BoxArray::from_fn(g.bx, |c| opts.gas.cons(&init_state(&g, c, init)));
            levels.push(make_level(lev, all[lev], base.level_domain(lev), g, u, &opts)?);
        }
        let mut h = Hierarchy {
            base,
            levels,
            regs: Vec::new(),
            opts,
            bc,
            shape,
            step: 0,
            time: 0.0,
            budget: StepBudget::default(),
        };
        h.link_levels();
        for lev in (0..h.levels.len() - 1).rev() {
            h.average_down(lev)?;
        }
        for lev in 0..h.levels.len() {
            h.fill_ghost(lev, 0.0);
            let l = &mut h.levels[lev];
            l.u_old = l.u.clone();
        }
        Ok(h)
    }

    /// Overwrite the state of every level from a primitive initial
    /// condition, then make levels consistent.
    pub fn set_state(&mut self, init: &dyn Fn(f64, f64) -> Prim) -> Result<()> {
        let gas = self.opts.gas;
        for l in &mut self.levels {
            let g = &l.geom;
            l.u = BoxArray::from_fn(g.bx, |c| gas.cons(&init_state(g, c, init)));
        }
        for lev in (0..self.levels.len() - 1).rev() {
            self.average_down(lev)?;
        }
        let t = self.time;
        for lev in 0..self.levels.len() {
            self.fill_ghost(lev, t);
            let l = &mut self.levels[lev];
            l.u_old = l.u.clone();
        }
        Ok(())
    }

    fn link_levels(&mut self) {
        let n = self.levels.len();
        self.regs.clear();
        for lev in 0..n {
            let cov = if lev + 1 < n {
                self.levels[lev + 1].valid.coarsen(RATIO)
            } else {
                empty_box()
            };
            self.levels[lev].covered = cov;
            if lev + 1 < n {
                self.regs
                    .push(SyncRegister::new(cov, self.levels[lev].domain, RATIO));
            }
        }
    }

    pub fn nlevels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn boxes(&self) -> Vec<IndexBox> {
        self.levels.iter().map(|l| l.valid).collect()
    }

    /// Fill the ghost frame of `lev` at time `t`: interpolation from the
    /// next coarser level inside the domain, then physical boundaries.
    pub fn fill_ghost(&mut self, lev: usize, t: f64) {
        if lev > 0 {
            let (lo, hi) = self.levels.split_at_mut(lev);
            let coarse = &lo[lev - 1];
            let fine = &mut hi[0];
            let span = coarse.t_new - coarse.t_old;
            let theta = if span > 0.0 {
                ((t - coarse.t_old) / span).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let targets = fine.storage.intersect(&fine.domain);
            let valid = fine.valid;
            interpolate_from_coarse(coarse, theta, &fine.geom, &mut fine.u, targets, &self.opts.gas, |c| {
                !valid.contains(c)
            });
        }
        let l = &mut self.levels[lev];
        fill_physical(&mut l.u, &l.domain, &self.bc);
    }

    /// Replace covered cells of `lev` by the volume-weighted average of the
    /// valid cells of `lev + 1`.
    pub fn average_down(&mut self, lev: usize) -> Result<()> {
        let (lo, hi) = self.levels.split_at_mut(lev + 1);
        let coarse = &mut lo[lev];
        let fine = &hi[0];
        average_down_into(&fine.geom, &fine.u, &coarse.geom, &mut coarse.u, coarse.covered)
    }

    /// Composite totals over uncovered valid cells of all levels.
    pub fn totals(&self) -> Totals {
        let mut t = Totals::default();
        for l in &self.levels {
            for c in l.valid.cells() {
                if l.covered.contains(c) {
                    continue;
                }
                let v = l.geom.volume(c);
                if v > 0.0 {
                    t.sum += l.u[c] * v;
                    t.abs += l.u[c].abs() * v;
                }
            }
        }
        t
    }

    /// Extensive state of every composite cell, in a fixed order.
    pub fn composite_snapshot(&self) -> Vec<Cons> {
        let mut out = Vec::new();
        for l in &self.levels {
            for c in l.valid.cells() {
                if !l.covered.contains(c) && l.geom.is_fluid(c) {
                    out.push(l.u[c] * l.geom.volume(c));
                }
            }
        }
        out
    }

    /// Stable coarse time step from the CFL condition on every level.
    pub fn estimate_dt(&self) -> Result<f64> {
        let mut dt = f64::INFINITY;
        for l in &self.levels {
            let mut s: f64 = 0.0;
            let mut any = false;
            for c in l.valid.cells() {
                if !l.geom.is_fluid(c) {
                    continue;
                }
                let w = self
                    .opts
                    .gas
                    .prim(&l.u[c])
                    .map_err(|e| e.with_cell(c).at(l.lev, Some(self.step)))?;
                let a = self.opts.gas.sound_speed(&w);
                s = s.max(w.u.abs() + a).max(w.v.abs() + a);
                any = true;
            }
            if !any {
                continue;
            }
            let scale = RATIO.pow(l.lev as u32) as f64;
            dt = dt.min(self.opts.cfl * l.dx().min(l.dy()) / s * scale);
        }
        if dt.is_finite() {
            Ok(dt)
        } else {
            Err(Error::EmptyFluid)
        }
    }

    /// Advance the whole hierarchy by one coarse step.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        self.budget = StepBudget::default();
        self.advance_level(0, dt)?;
        self.time = self.levels[0].t_new;
        self.step += 1;
        Ok(())
    }

    fn advance_level(&mut self, lev: usize, dt: f64) -> Result<()> {
        let t = self.levels[lev].t_new;
        self.fill_ghost(lev, t);
        if lev + 1 < self.levels.len() {
            self.regs[lev].reset();
        }
        self.single_step(lev, dt)?;
        let t1 = self.levels[lev].t_new;
        self.fill_ghost(lev, t1);
        if lev + 1 < self.levels.len() {
            for _ in 0..RATIO {
                self.advance_level(lev + 1, dt / RATIO as f64)?;
            }
            self.synchronize(lev)?;
        }
        Ok(())
    }

    /// One time step of a single level, without synchronization.
    fn single_step(&mut self, lev: usize, dt: f64) -> Result<()> {
        let step = self.step;
        {
            let l = &mut self.levels[lev];
            l.u_old = l.u.clone();
            l.t_old = l.t_new;
        }
        match self.opts.integrator {
            Integrator::Godunov => {
                let u0 = self.levels[lev].u.clone();
                let out = self.stage(lev, &u0, dt, 1.0, Reconstruction::Godunov)?;
                write_region(&mut self.levels[lev], &out);
            }
            Integrator::Mol => {
                let u0 = self.levels[lev].u.clone();
                let ustar = self.stage(lev, &u0, dt, 0.5, Reconstruction::Muscl)?;
                write_region(&mut self.levels[lev], &ustar);
                self.levels[lev].t_new = self.levels[lev].t_old + dt;
                self.fill_ghost(lev, self.levels[lev].t_new);
                let u1 = self.levels[lev].u.clone();
                let v = self.stage(lev, &u1, dt, 0.5, Reconstruction::Muscl)?;
                let l = &mut self.levels[lev];
                for c in l.region.cells() {
                    if l.geom.is_fluid(c) {
                        l.u[c] = (l.u_old[c] + v[c]) * 0.5;
                    }
                }
            }
        }
        let l = &mut self.levels[lev];
        l.t_new = l.t_old + dt;
        for c in l.valid.cells() {
            if l.geom.is_fluid(c) {
                self.opts
                    .gas
                    .prim(&l.u[c])
                    .map_err(|e| e.with_cell(c).at(lev, Some(step)))?;
            }
        }
        Ok(())
    }

    /// Flux computation, conservative update and stabilization of one
    /// stage. Registers and the step budget receive the stage's
    /// contributions with weight `w`.
    fn stage(
        &mut self,
        lev: usize,
        u: &BoxArray<Cons>,
        dt: f64,
        w: f64,
        recon: Reconstruction,
    ) -> Result<BoxArray<Cons>> {
        let step = self.step;
        let gas = self.opts.gas;
        let l = &self.levels[lev];
        let walls = self.bc.walls(l.domain);
        let ff = godunov::compute_fluxes(&l.geom, u, l.region, dt, recon, &walls, &gas)
            .map_err(|e| e.at(lev, Some(step)))?;
        let duc = godunov::divergence(&l.geom, &ff);
        self.record_fluxes(lev, &ff, w * dt);
        let l = &self.levels[lev];
        let mut out = BoxArray::from_fn(l.region, |c| u[c]);
        match self.opts.redistribution.strategy() {
            Some(_) => {
                let m = l.merge.as_ref().expect("merge matrix");
                let uhat = BoxArray::from_fn(l.region, |c| {
                    if l.geom.is_fluid(c) {
                        u[c] + duc[c] * dt
                    } else {
                        u[c]
                    }
                });
                let (new, rec) = wsrd::redistribute(m, &uhat, self.opts.wsrd);
                for c in l.region.cells() {
                    if l.geom.is_fluid(c) {
                        out[c] = new[c];
                    }
                }
                let (levels, regs) = (&self.levels, &mut self.regs);
                rerd::accumulate_wsrd(levels, regs, lev, m, &rec, w);
            }
            None => {
                let nb = l.frd.as_ref().expect("frd neighborhoods");
                let rho = if self.opts.frd_density_weights {
                    Some(u)
                } else {
                    None
                };
                let res = frd::frd_apply(&l.geom, nb, &duc, rho);
                for c in l.region.cells() {
                    if l.geom.is_fluid(c) {
                        out[c] = u[c] + res.du[c] * dt;
                    }
                }
                let (levels, regs) = (&self.levels, &mut self.regs);
                rerd::accumulate_frd(levels, regs, lev, &res.transfers, w * dt);
            }
        }
        Ok(out)
    }

    /// Feed a stage's fluxes to the registers on both sides and to the
    /// boundary budget of composite cells.
    fn record_fluxes(&mut self, lev: usize, ff: &FaceFluxes, wdt: f64) {
        let n = self.levels.len();
        let l = &self.levels[lev];
        if lev + 1 < n {
            self.regs[lev].accumulate_coarse(&l.geom, ff, wdt);
        }
        if lev > 0 {
            self.budget.cf_mass += self.regs[lev - 1].accumulate_fine(&l.geom, ff, wdt);
        }
        let (b, babs) = boundary_budget(l, ff, wdt);
        self.budget.boundary += b;
        self.budget.boundary_abs += babs;
    }

    /// Average down, then apply refluxing and re-redistribution between
    /// `lev` and `lev + 1`.
    fn synchronize(&mut self, lev: usize) -> Result<()> {
        self.average_down(lev)?;
        let (applied, unapplied) = rerd::apply_sync(self, lev)?;
        self.budget.applied += applied;
        self.budget.unapplied += unapplied;
        Ok(())
    }

    /// Replace the hierarchy's boxes, keeping data where levels overlap and
    /// interpolating elsewhere. `boxes[0]` must be the base domain.
    pub fn regrid(&mut self, boxes: &[IndexBox]) -> Result<()> {
        check_nesting(&self.base, boxes)?;
        if boxes == self.boxes().as_slice() {
            return Ok(());
        }
        let geoms = build_geometries(&self.shape, &self.base, boxes)?;
        let mut old: Vec<Level> = std::mem::take(&mut self.levels);
        let time = self.time;
        for (lev, g) in geoms.into_iter().enumerate() {
            let mut u = BoxArray::new(g.bx, Cons::ZERO);
            if lev == 0 {
                for c in g.bx.cells() {
                    u[c] = old[0].u[c];
                }
            } else {
                let parent = &self.levels[lev - 1];
                let targets = g.bx.intersect(&self.base.level_domain(lev));
                interpolate_from_coarse(parent, 1.0, &g, &mut u, targets, &self.opts.gas, |_| true);
                if let Some(prev) = old.get(lev) {
                    for c in boxes[lev].intersect(&prev.valid).cells() {
                        u[c] = prev.u[c];
                    }
                }
                fill_body_cells(&g, &mut u, parent, RATIO);
            }
            let mut l = make_level(lev, boxes[lev], self.base.level_domain(lev), g, u, &self.opts)?;
            l.t_old = time;
            l.t_new = time;
            l.u_old = l.u.clone();
            self.levels.push(l);
            // covered box of the parent is needed for average-down below
        }
        old.clear();
        self.link_levels();
        for lev in (0..self.levels.len() - 1).rev() {
            self.average_down(lev)?;
        }
        for lev in 0..self.levels.len() {
            self.fill_ghost(lev, time);
            let l = &mut self.levels[lev];
            l.u_old = l.u.clone();
        }
        Ok(())
    }

    /// Cells of `lev` whose density jump to an adjacent fluid cell exceeds
    /// `threshold`.
    pub fn tag(&self, lev: usize, threshold: f64) -> Vec<Cell> {
        let l = &self.levels[lev];
        let mut tags = Vec::new();
        for c in l.valid.cells() {
            if !l.geom.is_fluid(c) {
                continue;
            }
            let r = l.u[c].rho;
            let hit = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                let q = c.shift(di, dj);
                l.valid.contains(q) && l.geom.is_fluid(q) && (l.u[q].rho - r).abs() > threshold
            });
            if hit {
                tags.push(c);
            }
        }
        tags
    }

    /// New boxes from density tagging: the bounding box of the tags of each
    /// level, grown by `buffer`, kept inside the parent with the nesting
    /// margin. Levels without tags are dropped.
    pub fn tagged_boxes(&self, max_levels: usize, threshold: f64, buffer: i32) -> Vec<IndexBox> {
        let mut boxes = vec![self.base.domain];
        for lev in 0..max_levels.saturating_sub(1) {
            if lev >= self.levels.len() {
                break;
            }
            let parent = boxes[lev];
            let tags: Vec<Cell> = self
                .tag(lev, threshold)
                .into_iter()
                .filter(|c| parent.contains(*c))
                .collect();
            if tags.is_empty() {
                break;
            }
            let mut b = IndexBox::new(tags[0], tags[0]);
            for t in &tags {
                b.lo.i = b.lo.i.min(t.i);
                b.lo.j = b.lo.j.min(t.j);
                b.hi.i = b.hi.i.max(t.i);
                b.hi.j = b.hi.j.max(t.j);
            }
            let limit = if lev == 0 {
                self.base.domain
            } else {
                parent.grow(-NEST_MARGIN)
            };
            let b = b.grow(buffer).intersect(&limit);
            if b.is_empty() {
                break;
            }
            boxes.push(b.refine(RATIO));
        }
        boxes
    }
}

fn empty_box() -> IndexBox {
    IndexBox::new(Cell::new(0, 0), Cell::new(-1, -1))
}

fn init_state(g: &LevelGeometry, c: Cell, init: &dyn Fn(f64, f64) -> Prim) -> Prim {
    let (x, y) = if g.is_fluid(c) { g.centroid[c] } else { g.center(c) };
    init(x, y)
}

fn make_level(
    lev: usize,
    valid: IndexBox,
    domain: IndexBox,
    geom: LevelGeometry,
    u: BoxArray<Cons>,
    opts: &SolverOptions,
) -> Result<Level> {
    let region = valid.grow(FLUX_HALO).intersect(&domain);
    let (merge, frd) = match opts.redistribution.strategy() {
        Some(s) => (Some(wsrd::merge_matrix(&geom, region, s)?), None),
        None => (None, Some(frd::build_frd_neighborhoods(&geom, region))),
    };
    Ok(Level {
        lev,
        valid,
        storage: valid.grow(NGHOST),
        region,
        domain,
        u_old: u.clone(),
        u,
        geom,
        t_old: 0.0,
        t_new: 0.0,
        covered: empty_box(),
        merge,
        frd,
    })
}

/// Check that every fine box is aligned, inside the domain, and properly
/// nested in its parent.
pub fn check_nesting(base: &BaseGrid, boxes: &[IndexBox]) -> Result<()> {
    if boxes.is_empty() || boxes[0] != base.domain {
        return Err(Error::IncompatibleBoxes("level 0 must be the domain".into()));
    }
    for lev in 1..boxes.len() {
        let b = boxes[lev];
        if b.is_empty() || !b.is_coarsenable(RATIO) {
            return Err(Error::IncompatibleBoxes(format!(
                "level {lev} box {b:?} is empty or not aligned"
            )));
        }
        let parent = boxes[lev - 1];
        let allowed = if lev == 1 {
            parent
        } else {
            parent.grow(-NEST_MARGIN)
        };
        if !allowed.contains_box(&b.coarsen(RATIO)) {
            return Err(Error::IncompatibleBoxes(format!(
                "level {lev} box {b:?} is not nested in {parent:?}"
            )));
        }
    }
    Ok(())
}

fn write_region(l: &mut Level, out: &BoxArray<Cons>) {
    for c in l.region.cells() {
        if l.geom.is_fluid(c) {
            l.u[c] = out[c];
        }
    }
}

/// Boundary-face and embedded-boundary contributions of the composite
/// cells of a level, as extensive changes.
fn boundary_budget(l: &Level, ff: &FaceFluxes, wdt: f64) -> (Cons, Cons) {
    let mut sum = Cons::ZERO;
    let mut abs = Cons::ZERO;
    let d = l.domain;
    let g = &l.geom;
    let mut add = |x: Cons| {
        sum += x;
        abs += x.abs();
    };
    for c in l.valid.cells() {
        if l.covered.contains(c) || !g.is_fluid(c) {
            continue;
        }
        if g.eb_area[c] > 0.0 {
            add(ff.eb[c] * (-wdt * g.eb_area[c]));
        }
        for axis in Axis::ALL {
            let len = g.face_len(axis);
            if c.get(axis) == d.lo.get(axis) {
                let a = g.afrac.dir(axis)[c] * len;
                if a > 0.0 {
                    add(ff.dir(axis)[c] * (wdt * a));
                }
            }
            if c.get(axis) == d.hi.get(axis) {
                let f = c.step(axis, 1);
                let a = g.afrac.dir(axis)[f] * len;
                if a > 0.0 {
                    add(ff.dir(axis)[f] * (-wdt * a));
                }
            }
        }
    }
    (sum, abs)
}

/// Fill storage cells outside the domain from the physical boundary
/// conditions. The x sides are filled first, then the y sides over the full
/// width, which also fills the corners.
pub fn fill_physical(u: &mut BoxArray<Cons>, domain: &IndexBox, bc: &Boundary) {
    let st = *u.domain();
    for axis in Axis::ALL {
        let k = axis as usize;
        let (dlo, dhi) = (domain.lo.get(axis), domain.hi.get(axis));
        let n = dhi - dlo + 1;
        for c in st.cells() {
            let x = c.get(axis);
            let (kind, src, flip) = if x < dlo {
                match bc.lo[k] {
                    BcKind::Outflow => (bc.lo[k], dlo, false),
                    BcKind::SlipWall => (bc.lo[k], 2 * dlo - 1 - x, true),
                    BcKind::Periodic => (bc.lo[k], x + n, false),
                }
            } else if x > dhi {
                match bc.hi[k] {
                    BcKind::Outflow => (bc.hi[k], dhi, false),
                    BcKind::SlipWall => (bc.hi[k], 2 * dhi + 1 - x, true),
                    BcKind::Periodic => (bc.hi[k], x - n, false),
                }
            } else {
                continue;
            };
            let _ = kind;
            let s = c.step(axis, src - x);
            if !st.contains(s) {
                continue;
            }
            let mut v = u[s];
            if flip {
                match axis {
                    Axis::X => v.mx = -v.mx,
                    Axis::Y => v.my = -v.my,
                }
            }
            u[c] = v;
        }
    }
}

fn mc(dl: f64, dr: f64) -> f64 {
    if dl * dr <= 0.0 {
        0.0
    } else {
        let dc = 0.5 * (dl + dr);
        dc.signum() * dc.abs().min(2.0 * dl.abs()).min(2.0 * dr.abs())
    }
}

/// Conservative piecewise-linear interpolation of the coarse state at time
/// fraction `theta` onto the fine cells of `targets` selected by `want`.
/// Slopes are MC-limited differences over fluid neighbors, applied at
/// centroid offsets; a coarse cell whose children would become
/// non-physical is injected piecewise constant.
pub fn interpolate_from_coarse(
    coarse: &Level,
    theta: f64,
    fg: &LevelGeometry,
    u: &mut BoxArray<Cons>,
    targets: IndexBox,
    gas: &Gas,
    want: impl Fn(Cell) -> bool,
) {
    let cg = &coarse.geom;
    let cbox = targets.coarsen(RATIO);
    let at = |c: Cell| -> Option<Cons> {
        if !cg.is_fluid(c) || coarse.u.get(c).is_none() {
            return None;
        }
        Some(if theta >= 1.0 {
            coarse.u[c]
        } else if theta <= 0.0 {
            coarse.u_old[c]
        } else {
            coarse.u_old[c] * (1.0 - theta) + coarse.u[c] * theta
        })
    };
    for cc in cbox.cells() {
        let Some(uc) = at(cc) else {
            continue;
        };
        let mut slope = [Cons::ZERO; 2];
        for axis in Axis::ALL {
            let h = match axis {
                Axis::X => cg.dx,
                Axis::Y => cg.dy,
            };
            if let (Some(um), Some(up)) = (at(cc.step(axis, -1)), at(cc.step(axis, 1))) {
                slope[axis as usize] = (uc - um).zip(up - uc, mc) / h;
            }
        }
        let (xc, yc) = cg.centroid[cc];
        let children = IndexBox::new(cc, cc).refine(RATIO).intersect(&targets);
        let mut vals = [(Cell::default(), Cons::ZERO); 4];
        let mut n = 0;
        let mut ok = true;
        for f in children.cells() {
            if !want(f) {
                continue;
            }
            let v = if fg.is_fluid(f) {
                let (x, y) = fg.centroid[f];
                let v = uc + slope[0] * (x - xc) + slope[1] * (y - yc);
                ok &= gas.prim(&v).is_ok();
                v
            } else {
                uc
            };
            vals[n] = (f, v);
            n += 1;
        }
        for &(f, v) in &vals[..n] {
            u[f] = if ok { v } else { uc };
        }
    }
}

/// Body cells of a new fine level take the parent value so that every
/// stored state is finite.
fn fill_body_cells(g: &LevelGeometry, u: &mut BoxArray<Cons>, parent: &Level, r: i32) {
    for c in g.bx.cells() {
        if !g.is_fluid(c) {
            if let Some(v) = parent.u.get(c.coarsen(r)) {
                u[c] = *v;
            }
        }
    }
}

/// Volume-weighted average of fine fluid children onto the covered coarse
/// cells of `covered`.
pub fn average_down_into(
    fg: &LevelGeometry,
    fu: &BoxArray<Cons>,
    cg: &LevelGeometry,
    cu: &mut BoxArray<Cons>,
    covered: IndexBox,
) -> Result<()> {
    for cc in covered.cells() {
        if !cg.is_fluid(cc) {
            continue;
        }
        let mut sv = 0.0;
        let mut su = Cons::ZERO;
        for f in IndexBox::new(cc, cc).refine(RATIO).cells() {
            let v = fg.volume(f);
            if v > 0.0 {
                sv += v;
                su += fu[f] * v;
            }
        }
        if sv == 0.0 {
            return Err(Error::EmptyFluidUnderCoarse(cc));
        }
        cu[cc] = su / sv;
    }
    Ok(())
}
