//! Run orchestration: hierarchy setup from a configuration, the time loop
//! with regridding, and output.

use std::path::{Path, PathBuf};

use crate::amr::{BaseGrid, Hierarchy};
use crate::config::{GeometryConfig, InitialConfig, Problem, RefinementMode, Resolved, RunConfig};
use crate::diagnostics::{self, LedgerRow, Line, ProfilePoint};
use crate::error::{Error, Result};
use crate::euler::{ExactRiemann, Prim};
use crate::index::IndexBox;

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "EBAMR_OUT";

pub type InitFn = Box<dyn Fn(f64, f64) -> Prim + Send + Sync>;

pub struct Simulation {
    pub cfg: RunConfig,
    pub setup: Resolved,
    pub h: Hierarchy,
    pub ledger: Vec<LedgerRow>,
    init: InitFn,
}

pub fn base_grid(cfg: &RunConfig) -> BaseGrid {
    let g = &cfg.grid;
    BaseGrid::new(
        (g.n_cell[0], g.n_cell[1]),
        (g.prob_lo[0], g.prob_lo[1]),
        (g.prob_hi[0], g.prob_hi[1]),
    )
}

/// Index boxes of the static refinement levels.
pub fn static_boxes(cfg: &RunConfig, base: &BaseGrid) -> Result<Vec<IndexBox>> {
    let mut out = Vec::new();
    for (k, b) in cfg.refinement.boxes.iter().enumerate() {
        let bx = base.box_from_physical(k + 1, (b.lo[0], b.lo[1]), (b.hi[0], b.hi[1]));
        if bx.is_empty() {
            return Err(Error::Validation {
                key: "refinement.boxes".into(),
                msg: format!("box {} does not cover any cell", k + 1),
            });
        }
        out.push(bx);
    }
    Ok(out)
}

impl Simulation {
    pub fn new(cfg: RunConfig) -> Result<Simulation> {
        let setup = cfg.validate()?;
        let base = base_grid(&cfg);
        let init = setup.initial.state_fn(cfg.gas());
        let boxes = match cfg.refinement.mode {
            RefinementMode::Static => static_boxes(&cfg, &base)?,
            RefinementMode::Dynamic => Vec::new(),
        };
        let h = Hierarchy::new(
            base,
            &boxes,
            setup.geometry.implicit(),
            setup.bc.boundary(),
            cfg.solver_options(),
            &*init,
        )
        .map_err(|e| match e {
            Error::IncompatibleBoxes(msg) => Error::Validation {
                key: "refinement.boxes".into(),
                msg,
            },
            e => e,
        })?;
        let mut sim = Simulation {
            cfg,
            setup,
            h,
            ledger: Vec::new(),
            init,
        };
        if sim.cfg.refinement.mode == RefinementMode::Dynamic {
            for _ in 0..sim.cfg.grid.max_level {
                sim.regrid()?;
                sim.h.set_state(&*sim.init)?;
            }
        }
        Ok(sim)
    }

    fn regrid(&mut self) -> Result<()> {
        let r = &self.cfg.refinement;
        let boxes = self.h.tagged_boxes(
            self.cfg.grid.max_level + 1,
            r.threshold.unwrap_or(f64::INFINITY),
            r.buffer,
        );
        self.h.regrid(&boxes)
    }

    pub fn done(&self) -> bool {
        self.h.time >= self.cfg.t_end * (1.0 - 1e-12)
            || self.cfg.max_steps.is_some_and(|m| self.h.step >= m)
    }

    /// Advance one coarse step, regridding first if due. The step size is
    /// clipped to land on `stop`.
    pub fn step_to(&mut self, stop: f64) -> Result<&LedgerRow> {
        let r = &self.cfg.refinement;
        if r.mode == RefinementMode::Dynamic && self.h.step > 0 && self.h.step % r.interval == 0 {
            self.regrid()?;
        }
        let dt = self.h.estimate_dt()?.min(stop - self.h.time);
        let before = self.h.totals();
        let snap0 = self.h.composite_snapshot();
        self.h.advance(dt)?;
        let after = self.h.totals();
        let moved = diagnostics::snapshot_change(&snap0, &self.h.composite_snapshot());
        self.ledger
            .push(LedgerRow::new(&self.h, dt, &before, &after, moved));
        Ok(self.ledger.last().unwrap())
    }

    pub fn step(&mut self) -> Result<&LedgerRow> {
        let stop = self.cfg.t_end;
        self.step_to(stop)
    }

    /// Run to `t_end`, calling `each` after every step.
    pub fn run_with(&mut self, mut each: impl FnMut(&Simulation) -> Result<()>) -> Result<()> {
        let mut plots: Vec<f64> = self.cfg.output.plot_times.clone();
        plots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        while !self.done() {
            let stop = plots
                .iter()
                .copied()
                .find(|t| *t > self.h.time * (1.0 + 1e-12))
                .unwrap_or(self.cfg.t_end)
                .min(self.cfg.t_end);
            self.step_to(stop)?;
            each(self)?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_| Ok(()))
    }

    /// Centerline of the rotated channel geometry, if any.
    pub fn centerline(&self) -> Option<Line> {
        let GeometryConfig::RotatedChannel {
            angle_deg, center, ..
        } = self.setup.geometry
        else {
            return None;
        };
        let g = &self.cfg.grid;
        let th = angle_deg.to_radians();
        let (sn, cs) = th.sin_cos();
        // longest segment through the center that stays in the domain
        let mut half = f64::INFINITY;
        for (k, dir) in [cs, sn].into_iter().enumerate() {
            if dir.abs() > 1e-14 {
                let c = [center[0], center[1]][k];
                let to_hi = (g.prob_hi[k] - c) / dir.abs();
                let to_lo = (c - g.prob_lo[k]) / dir.abs();
                half = half.min(to_hi.min(to_lo));
            }
        }
        let fine = self.h.base.spacing(self.cfg.grid.max_level).0;
        let n = ((2.0 * half / fine).floor() as usize).max(1);
        Some(Line {
            center: (center[0], center[1]),
            angle: th,
            half_length: half * (1.0 - 1e-9),
            n,
        })
    }

    /// Exact Riemann solution along the centerline for the Sod setup.
    pub fn exact_solution(&self) -> Result<Option<ExactRiemann>> {
        if self.setup.problem != Problem::RotatedSod {
            return Ok(None);
        }
        let InitialConfig::Riemann {
            left,
            right,
            angle_deg,
            ..
        } = self.setup.initial
        else {
            return Ok(None);
        };
        let (sn, cs) = angle_deg.to_radians().sin_cos();
        let rot = |p: Prim| Prim::new(p.rho, p.u * cs + p.v * sn, -p.u * sn + p.v * cs, p.p);
        Ok(Some(ExactRiemann::solve(
            rot(left.prim()),
            rot(right.prim()),
            self.cfg.gas(),
        )?))
    }

    pub fn profile(&self, line: &Line) -> Result<Vec<ProfilePoint>> {
        let ex = self.exact_solution()?;
        diagnostics::centerline_profile(&self.h, line, ex.as_ref(), self.h.time)
    }

    pub fn max_rel_residual(&self) -> f64 {
        self.ledger
            .iter()
            .map(|r| r.rel_residual().max_abs())
            .fold(0.0, f64::max)
    }
}

/// Directory for run output: the environment variable, then the config,
/// then `out`.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub steps: usize,
    pub time: f64,
    pub max_rel_residual: f64,
    pub files: Vec<PathBuf>,
}

/// Run a configuration to completion and write the requested artifacts to
/// `dir`.
pub fn run_config(cfg: RunConfig, dir: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(dir)?;
    let mut sim = Simulation::new(cfg)?;
    let mut files = Vec::new();
    let out = sim.cfg.output.clone();
    let plot_times = out.plot_times.clone();
    let mut reg_file = if out.register_dump {
        let p = dir.join("registers.csv");
        files.push(p.clone());
        Some((std::io::BufWriter::new(std::fs::File::create(p)?), true))
    } else {
        None
    };
    let mut plotted = Vec::new();
    sim.run_with(|s| {
        if let Some((w, first)) = reg_file.as_mut() {
            for (lev, reg) in s.h.regs.iter().enumerate() {
                diagnostics::write_register_rows(w, s.h.step, lev, &reg.dump_rows(), *first)?;
                *first = false;
            }
        }
        for t in &plot_times {
            if (s.h.time - t).abs() <= 1e-12 * t.max(1.0) && !plotted.contains(&s.h.step) {
                plotted.push(s.h.step);
                let name = format!("plt{:05}", s.h.step);
                diagnostics::write_plotfile(&s.h, dir, &name)?;
                if out.schlieren {
                    diagnostics::write_schlieren(&s.h, &dir.join(format!("{name}_schlieren.csv")))?;
                }
            }
        }
        Ok(())
    })?;
    if let Some((mut w, _)) = reg_file {
        use std::io::Write;
        w.flush()?;
    }
    let name = "plt_final";
    files.push(diagnostics::write_plotfile(&sim.h, dir, name)?);
    if out.schlieren {
        let p = dir.join(format!("{name}_schlieren.csv"));
        diagnostics::write_schlieren(&sim.h, &p)?;
        files.push(p);
    }
    if out.ledger {
        let p = dir.join("ledger.csv");
        diagnostics::write_ledger(&p, &sim.ledger)?;
        files.push(p);
    }
    if out.profile {
        if let Some(line) = sim.centerline() {
            let p = dir.join("profile.csv");
            diagnostics::write_profile(&p, &sim.profile(&line)?)?;
            files.push(p);
        }
    }
    Ok(RunReport {
        steps: sim.h.step,
        time: sim.h.time,
        max_rel_residual: sim.max_rel_residual(),
        files,
    })
}
