//! Self-checks run by `ebamr validate`: conservation of the shipped channel
//! preset, identities of the redistribution operator, free-stream
//! preservation and small-cell stability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amr::Hierarchy;
use crate::config::{parse_config, RunConfig};
use crate::diagnostics::{l1_density_error, LedgerRow};
use crate::error::{Error, Result};
use crate::euler::Cons;
use crate::geometry::{ImplicitFn, LevelGeometry};
use crate::index::{BoxArray, Cell, IndexBox};
use crate::rerd::build_r_matrix;
use crate::run::Simulation;
use crate::wsrd::{self, MergeMatrix, MergeStrategy, WsrdOptions};

pub const CHANNEL: &str = include_str!("../../../presets/rotated_channel_shock.toml");
pub const CHANNEL_MOL: &str = include_str!("../../../presets/rotated_channel_shock_mol.toml");
pub const CHANNEL_FRD: &str = include_str!("../../../presets/rotated_channel_shock_frd.toml");
pub const CHANNEL_NO_RERD: &str =
    include_str!("../../../presets/rotated_channel_shock_no_rerd.toml");
pub const FREE_STREAM: &str = include_str!("../../../presets/free_stream.toml");
pub const SMALL_CELL: &str = include_str!("../../../presets/small_cell.toml");
pub const SMALL_CELL_CF: &str = include_str!("../../../presets/small_cell_cf.toml");
pub const SOD: [&str; 3] = [
    include_str!("../../../presets/rotated_sod_96.toml"),
    include_str!("../../../presets/rotated_sod_192.toml"),
    include_str!("../../../presets/rotated_sod_384.toml"),
];
pub const CYLINDER: &str = include_str!("../../../presets/shock_cylinder.toml");
pub const CYLINDER_FULL: &str = include_str!("../../../presets/shock_cylinder_full.toml");

/// Seed of the randomized operator checks.
pub const SEED: u64 = 20_240_611;

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Run the conservation check with re-redistribution disabled.
    pub no_rerd: bool,
    /// Corrupt one merge matrix entry before the column-sum check.
    pub corrupt_a: bool,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= tol`.
    pub fn at_most(name: &str, value: f64, tol: f64) -> Check {
        Check {
            name: name.into(),
            value,
            tol,
            passed: value <= tol,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Check {
        self.detail = d.into();
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut s = format!("{:<w$}  {:>11}  {:>9}  result\n", "check", "value", "tol");
        for c in &self.checks {
            s += &format!(
                "{:<w$}  {:>11.3e}  {:>9.1e}  {}",
                c.name,
                c.value,
                c.tol,
                if c.passed { "PASS" } else { "FAIL" }
            );
            if !c.detail.is_empty() {
                s += &format!("  ({})", c.detail);
            }
            s.push('\n');
        }
        s
    }
}

/// Summary of a full run of a preset.
#[derive(Clone, Debug)]
pub struct ConservationStats {
    pub steps: usize,
    pub max_rel_defect: f64,
    pub max_rel_residual: f64,
    /// Largest |mass defect| / c/f mass flux over steps with nonzero flux.
    pub max_defect_cf_ratio: f64,
    pub any_nonzero_defect: bool,
}

pub fn preset(text: &str) -> RunConfig {
    parse_config(text).expect("shipped preset parses")
}

/// Run a configuration to completion and summarize its ledger.
pub fn conservation(cfg: RunConfig) -> Result<ConservationStats> {
    let mut sim = Simulation::new(cfg)?;
    sim.run()?;
    Ok(summarize(&sim.ledger))
}

pub fn summarize(ledger: &[LedgerRow]) -> ConservationStats {
    let mut st = ConservationStats {
        steps: ledger.len(),
        max_rel_defect: 0.0,
        max_rel_residual: 0.0,
        max_defect_cf_ratio: 0.0,
        any_nonzero_defect: false,
    };
    for r in ledger {
        st.max_rel_defect = st.max_rel_defect.max(r.rel_defect().max_abs());
        st.max_rel_residual = st.max_rel_residual.max(r.rel_residual().max_abs());
        if r.rel_defect().max_abs() > 1e-12 {
            st.any_nonzero_defect = true;
        }
        if r.cfflux_mass > 0.0 {
            st.max_defect_cf_ratio = st.max_defect_cf_ratio.max(r.defect.rho.abs() / r.cfflux_mass);
        }
    }
    st
}

#[derive(Clone, Debug)]
pub struct SodResult {
    pub dx: f64,
    pub steps: usize,
    /// Centerline L1 density error against the exact solution.
    pub l1: f64,
    pub ledger: ConservationStats,
}

pub fn sod(cfg: RunConfig) -> Result<SodResult> {
    let mut sim = Simulation::new(cfg)?;
    sim.run()?;
    let line = sim.centerline().ok_or_else(|| Error::Validation {
        key: "geometry".into(),
        msg: "profile needs a rotated channel".into(),
    })?;
    let prof = sim.profile(&line)?;
    Ok(SodResult {
        dx: sim.h.base.dx,
        steps: sim.h.step,
        l1: l1_density_error(&prof, &line),
        ledger: summarize(&sim.ledger),
    })
}

/// log2 of successive error ratios for resolutions halving each time.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Σ|ρ_a − ρ_b| V / Σ|ρ_b| V over the fluid cells of the finest level of `a`,
/// with `b` sampled on the same level. Both hierarchies must share the base
/// grid and `b` must have that level wherever `a` does.
pub fn finest_density_l1(a: &Hierarchy, b: &Hierarchy) -> Option<f64> {
    let lev = a.finest();
    let la = &a.levels[lev];
    let lb = b.levels.get(lev)?;
    let (mut num, mut den) = (0.0, 0.0);
    for c in la.valid.cells() {
        if !la.geom.is_fluid(c) {
            continue;
        }
        if !lb.valid.contains(c) {
            return None;
        }
        let v = la.geom.volume(c);
        num += (la.u[c].rho - lb.u[c].rho).abs() * v;
        den += lb.u[c].rho.abs() * v;
    }
    Some(num / den)
}

/// A randomly placed circle or rotated channel cutting an n × n unit box.
pub fn random_shape(rng: &mut ChaCha8Rng) -> ImplicitFn {
    if rng.gen_bool(0.5) {
        ImplicitFn::Circle {
            center: (rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)),
            radius: rng.gen_range(0.15..0.3),
            fluid_outside: rng.gen_bool(0.5),
        }
    } else {
        ImplicitFn::RotatedChannel {
            angle: rng.gen_range(0.05..1.5),
            half_width: rng.gen_range(0.2..0.35),
            center: (0.5, rng.gen_range(0.4..0.6)),
        }
    }
}

/// Geometry and merge matrix of a random cut mesh of n × n cells on the
/// unit square. Shapes whose cut cells the construction rejects are redrawn.
pub fn random_mesh(
    rng: &mut ChaCha8Rng,
    n: i32,
    strategy: MergeStrategy,
) -> (LevelGeometry, MergeMatrix) {
    let h = 1.0 / n as f64;
    loop {
        let f = random_shape(rng);
        let Ok(g) = LevelGeometry::build(&f, IndexBox::from_size(n, n), h, h, (0.0, 0.0)) else {
            continue;
        };
        if let Ok(m) = wsrd::merge_matrix(&g, g.bx, strategy) {
            if m.merged_rows().next().is_some() {
                return (g, m);
            }
        }
    }
}

/// Random conserved state with positive density and energy.
pub fn random_state(rng: &mut ChaCha8Rng, bx: IndexBox) -> BoxArray<Cons> {
    BoxArray::from_fn(bx, |_| Cons {
        rho: rng.gen_range(0.5..2.0),
        mx: rng.gen_range(-1.0..1.0),
        my: rng.gen_range(-1.0..1.0),
        e: rng.gen_range(2.0..5.0),
    })
}

/// Σ V U over the fluid cells of the matrix region.
pub fn extensive_total(m: &MergeMatrix, u: &BoxArray<Cons>) -> Cons {
    (0..m.len())
        .filter(|k| m.vol[*k] > 0.0)
        .map(|k| u[m.cell(k)] * m.vol[k])
        .sum()
}

/// Relative conservation error of one redistribution.
pub fn wsrd_conservation_error(m: &MergeMatrix, u: &BoxArray<Cons>, opts: WsrdOptions) -> f64 {
    let (out, _) = wsrd::redistribute(m, u, opts);
    let a = extensive_total(m, u);
    let b = extensive_total(m, &out);
    let s = (0..m.len())
        .filter(|k| m.vol[*k] > 0.0)
        .map(|k| u[m.cell(k)].abs() * m.vol[k])
        .sum::<Cons>();
    (b - a).zip(s, |d, s| d.abs() / s).max_abs()
}

/// Redistribute a linear field with the limiter off and return the largest
/// error over cells whose neighborhoods (and so gradient stencils) lie at
/// least `margin` cells inside the region, relative to the field's range,
/// together with the number of such cells that receive contributions from a
/// merged neighborhood.
pub fn wsrd_linearity_error(m: &MergeMatrix, margin: i32) -> (f64, usize) {
    let lin = |x: f64, y: f64| Cons {
        rho: 1.0 + 0.3 * x - 0.2 * y,
        mx: -0.5 + 0.7 * x + 0.1 * y,
        my: 0.25 - 0.4 * x + 0.9 * y,
        e: 3.0 + x + y,
    };
    let u = BoxArray::from_fn(m.region, |c| {
        let k = m.index(c);
        let (x, y) = m.cent[k];
        lin(x, y)
    });
    let opts = WsrdOptions {
        gradients: true,
        limit: false,
    };
    let (out, _) = wsrd::redistribute(m, &u, opts);
    let inner = m.region.grow(-margin);
    let mut err: f64 = 0.0;
    let mut tested = 0;
    for p in 0..m.len() {
        if m.vol[p] <= 0.0 || !inner.contains(m.cell(p)) {
            continue;
        }
        let in_inner = m
            .column(p)
            .all(|(r, _)| m.row(r).all(|(q, _)| inner.contains(m.cell(q))));
        if !in_inner {
            continue;
        }
        if m.column(p).any(|(r, _)| m.row_len(r) > 1) {
            tested += 1;
        }
        let c = m.cell(p);
        err = err.max((out[c] - u[c]).max_abs());
    }
    (err / 3.0, tested)
}

/// Largest |row sum of ℛ − V U| relative to max |V U| for the gradient-free
/// redistribution.
pub fn r_row_sum_error(m: &MergeMatrix, u: &BoxArray<Cons>) -> f64 {
    let opts = WsrdOptions {
        gradients: false,
        limit: false,
    };
    let (out, _) = wsrd::redistribute(m, u, opts);
    let r = build_r_matrix(m, u);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in 0..m.len() {
        if m.vol[p] <= 0.0 {
            continue;
        }
        let vu = out[m.cell(p)] * m.vol[p];
        scale = scale.max(vu.max_abs());
        err = err.max((r.row_sum(p) - vu).max_abs());
    }
    err / scale
}

/// All-regular mesh: redistribution returns its input bit for bit.
pub fn regular_identity(rng: &mut ChaCha8Rng) -> bool {
    let bx = IndexBox::from_size(8, 8);
    let g = LevelGeometry::build(&ImplicitFn::AllFluid, bx, 0.125, 0.125, (0.0, 0.0))
        .expect("regular geometry");
    let m = wsrd::merge_matrix(&g, bx, MergeStrategy::Normal).expect("regular matrix");
    let u = random_state(rng, bx);
    let (out, _) = wsrd::redistribute(&m, &u, WsrdOptions::default());
    let same = bx.cells().all(|c| out[c] == u[c]);
    same
}

/// Largest change of any fluid cell of any level, relative to the initial
/// magnitude, after running the free-stream preset.
pub fn free_stream_error(cfg: RunConfig) -> Result<f64> {
    let mut sim = Simulation::new(cfg)?;
    let snap = |s: &Simulation| -> Vec<(usize, Cell, Cons)> {
        s.h.levels
            .iter()
            .enumerate()
            .flat_map(|(l, lv)| {
                lv.valid
                    .cells()
                    .filter(|c| lv.geom.is_fluid(*c))
                    .map(move |c| (l, c, lv.u[c]))
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let before = snap(&sim);
    sim.run()?;
    let after = snap(&sim);
    let mut err: f64 = 0.0;
    for ((_, _, a), (_, _, b)) in before.iter().zip(&after) {
        err = err.max((*b - *a).zip(*a, |d, s| d.abs() / s.abs().max(1e-300)).max_abs());
    }
    Ok(err)
}

/// Outcome of a small-cell run.
#[derive(Debug)]
pub struct SmallCellOutcome {
    pub min_vfrac: f64,
    pub steps: usize,
    /// Every fluid state of the final hierarchy is physical.
    pub healthy: bool,
    pub error: Option<Error>,
}

pub fn small_cell(cfg: RunConfig) -> Result<SmallCellOutcome> {
    let mut sim = Simulation::new(cfg)?;
    let l0 = &sim.h.levels[0];
    let uncovered = |c: &Cell| !l0.covered.contains(*c);
    let min_vfrac = l0
        .valid
        .cells()
        .filter(|c| l0.geom.is_fluid(*c) && uncovered(c))
        .map(|c| l0.geom.vfrac[c])
        .fold(f64::INFINITY, f64::min);
    let res = sim.run();
    let healthy = sim.h.levels.iter().all(|l| {
        l.valid
            .cells()
            .filter(|c| l.geom.is_fluid(*c))
            .all(|c| sim.h.opts.gas.prim(&l.u[c]).is_ok())
    });
    Ok(SmallCellOutcome {
        min_vfrac,
        steps: sim.h.step,
        healthy,
        error: res.err(),
    })
}

fn failed(name: &str, e: &Error) -> Check {
    Check {
        name: name.into(),
        value: f64::NAN,
        tol: 0.0,
        passed: false,
        detail: e.to_string(),
    }
}

/// Run every check.
pub fn run(opts: &ValidateOptions) -> Report {
    let mut rep = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut cfg = preset(CHANNEL);
    cfg.sync.rerd = !opts.no_rerd;
    let name = if opts.no_rerd {
        "conservation (rerd off)"
    } else {
        "conservation"
    };
    rep.checks.push(match conservation(cfg) {
        Ok(st) => Check::at_most(name, st.max_rel_defect, 1e-12)
            .with_detail(format!("{} steps, max relative defect", st.steps)),
        Err(e) => failed(name, &e),
    });

    let mut col: f64 = 0.0;
    let mut cons_g: f64 = 0.0;
    let mut cons_n: f64 = 0.0;
    let mut lin: f64 = 0.0;
    let mut rsum: f64 = 0.0;
    let mut lin_cells = 0;
    for k in 0..20 {
        let strategy = if k % 2 == 0 {
            MergeStrategy::Normal
        } else {
            MergeStrategy::Central
        };
        let (_, mut m) = random_mesh(&mut rng, 16, strategy);
        if opts.corrupt_a && k == 0 {
            m.corrupt();
        }
        col = col.max(m.column_sum_error());
        let u = random_state(&mut rng, m.region);
        cons_g = cons_g.max(wsrd_conservation_error(&m, &u, WsrdOptions::default()));
        cons_n = cons_n.max(wsrd_conservation_error(
            &m,
            &u,
            WsrdOptions {
                gradients: false,
                limit: false,
            },
        ));
        let (e, n) = wsrd_linearity_error(&m, 1);
        lin = lin.max(e);
        lin_cells += n;
        rsum = rsum.max(r_row_sum_error(&m, &u));
    }
    rep.checks
        .push(Check::at_most("merge matrix column sums", col, 1e-14).with_detail("20 random meshes"));
    rep.checks
        .push(Check::at_most("wsrd conservation (gradients)", cons_g, 1e-13));
    rep.checks
        .push(Check::at_most("wsrd conservation (no gradients)", cons_n, 1e-13));
    rep.checks
        .push(
            Check::at_most("wsrd linearity (no limiter)", lin, 1e-12)
                .with_detail(format!("{lin_cells} cells fed by merged rows")),
        );
    rep.checks.push(Check::at_most("R row sums", rsum, 1e-12));
    let ident = regular_identity(&mut rng);
    rep.checks.push(Check {
        name: "all-regular identity".into(),
        value: if ident { 0.0 } else { 1.0 },
        tol: 0.0,
        passed: ident,
        detail: "bit-exact".into(),
    });

    rep.checks.push(match free_stream_error(preset(FREE_STREAM)) {
        Ok(e) => Check::at_most("free stream", e, 1e-12),
        Err(e) => failed("free stream", &e),
    });

    rep.checks.push(match small_cell(preset(SMALL_CELL)) {
        Ok(o) => Check {
            name: "small-cell stability".into(),
            value: o.min_vfrac,
            tol: 1e-8 * 1.01,
            passed: o.error.is_none() && o.healthy && o.steps == 100 && o.min_vfrac <= 1e-8 * 1.01,
            detail: match o.error {
                None => format!("{} steps, min uncovered volume fraction", o.steps),
                Some(e) => e.to_string(),
            },
        },
        Err(e) => failed("small-cell stability", &e),
    });
    rep
}
