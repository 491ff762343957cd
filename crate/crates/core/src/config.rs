//! Run configuration: TOML text with a few sections, unknown keys rejected.
//!
//! ```toml
//! problem = "rotated_channel_shock"
//! t_end = 0.4
//!
//! [grid]
//! n_cell = [64, 64]
//! prob_lo = [-2.0, -2.0]
//! prob_hi = [2.0, 2.0]
//! max_level = 1
//!
//! [refinement]
//! mode = "static"
//! boxes = [{ lo = [-2.0, -0.125], hi = [2.0, 0.125] }]
//! ```

use serde::{Deserialize, Serialize};

use crate::amr::{BcKind, Boundary, Integrator, Redistribution, SolverOptions};
use crate::error::{Error, Result};
use crate::euler::{shock_jump, Gas, Prim};
use crate::geometry::ImplicitFn;
use crate::wsrd::WsrdOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    RotatedChannelShock,
    RotatedSod,
    ShockCylinder,
    Custom,
}

impl Problem {
    pub const ALL: [Problem; 4] = [
        Problem::RotatedChannelShock,
        Problem::RotatedSod,
        Problem::ShockCylinder,
        Problem::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::RotatedChannelShock => "rotated_channel_shock",
            Problem::RotatedSod => "rotated_sod",
            Problem::ShockCylinder => "shock_cylinder",
            Problem::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Problem> {
        Problem::ALL.into_iter().find(|p| p.name() == s)
    }
}

fn d_cfl() -> f64 {
    0.4
}
fn d_gamma() -> f64 {
    1.4
}
fn d_true() -> bool {
    true
}
fn d_one() -> usize {
    1
}
fn d_buffer() -> i32 {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub t_end: f64,
    #[serde(default = "d_cfl")]
    pub cfl: f64,
    #[serde(default = "d_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub redistribution: Redistribution,
    /// Worker threads for within-level loops.
    #[serde(default = "d_one")]
    pub threads: usize,
    /// Stop after this many coarse steps even if `t_end` is not reached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    pub grid: GridConfig,
    #[serde(default)]
    pub refinement: RefinementConfig,
    #[serde(default)]
    pub sync: SyncConfig,
    #[serde(default)]
    pub wsrd: WsrdConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<BcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_cell: [i32; 2],
    pub prob_lo: [f64; 2],
    pub prob_hi: [f64; 2],
    /// Number of refined levels above the base level.
    #[serde(default)]
    pub max_level: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RefinementMode {
    #[default]
    Static,
    Dynamic,
}

/// Physical rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    #[serde(default)]
    pub mode: RefinementMode,
    /// Static boxes, one per refined level.
    #[serde(default)]
    pub boxes: Vec<PhysBox>,
    /// Density jump that tags a cell in dynamic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Coarse steps between regrids in dynamic mode.
    #[serde(default = "d_one")]
    pub interval: usize,
    /// Cells added around tagged cells.
    #[serde(default = "d_buffer")]
    pub buffer: i32,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            mode: RefinementMode::Static,
            boxes: Vec::new(),
            threshold: None,
            interval: 1,
            buffer: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncConfig {
    #[serde(default = "d_true")]
    pub refluxing: bool,
    #[serde(default = "d_true")]
    pub rerd: bool,
    /// Density-weighted flux redistribution.
    #[serde(default)]
    pub frd_density_weights: bool,
    /// Spread corrections of cut cells over their neighborhoods.
    #[serde(default = "d_true")]
    pub stabilize: bool,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            refluxing: true,
            rerd: true,
            frd_density_weights: false,
            stabilize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WsrdConfig {
    #[serde(default = "d_true")]
    pub gradients: bool,
    #[serde(default = "d_true")]
    pub limit: bool,
}

impl Default for WsrdConfig {
    fn default() -> Self {
        WsrdConfig {
            gradients: true,
            limit: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    RotatedChannel {
        angle_deg: f64,
        half_width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "d_true")]
        fluid_outside: bool,
    },
    AllFluid,
}

impl GeometryConfig {
    pub fn implicit(&self) -> ImplicitFn {
        match *self {
            GeometryConfig::RotatedChannel {
                angle_deg,
                half_width,
                center,
            } => ImplicitFn::RotatedChannel {
                angle: angle_deg.to_radians(),
                half_width,
                center: (center[0], center[1]),
            },
            GeometryConfig::Circle {
                center,
                radius,
                fluid_outside,
            } => ImplicitFn::Circle {
                center: (center[0], center[1]),
                radius,
                fluid_outside,
            },
            GeometryConfig::AllFluid => ImplicitFn::AllFluid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub x_lo: BcKind,
    pub x_hi: BcKind,
    pub y_lo: BcKind,
    pub y_hi: BcKind,
}

impl BcConfig {
    pub fn all(k: BcKind) -> Self {
        BcConfig {
            x_lo: k,
            x_hi: k,
            y_lo: k,
            y_hi: k,
        }
    }

    pub fn boundary(&self) -> Boundary {
        Boundary {
            lo: [self.x_lo, self.y_lo],
            hi: [self.x_hi, self.y_hi],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimConfig {
    pub rho: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    pub p: f64,
}

impl PrimConfig {
    pub fn prim(&self) -> Prim {
        Prim::new(self.rho, self.u, self.v, self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Uniform {
        state: PrimConfig,
    },
    /// Uniform flow at `speed` in direction `angle_deg`.
    Stream {
        rho: f64,
        p: f64,
        speed: f64,
        angle_deg: f64,
    },
    /// `left` where x cosθ + y sinθ ≤ position, `right` elsewhere.
    Riemann {
        left: PrimConfig,
        right: PrimConfig,
        #[serde(default)]
        angle_deg: f64,
        #[serde(default)]
        position: f64,
    },
    /// Shock at x = `position` moving in +x into `pre` at Mach `mach`.
    Shock {
        mach: f64,
        pre: PrimConfig,
        position: f64,
    },
}

impl InitialConfig {
    pub fn state_fn(&self, gas: Gas) -> Box<dyn Fn(f64, f64) -> Prim + Send + Sync> {
        match self.clone() {
            InitialConfig::Uniform { state } => {
                let w = state.prim();
                Box::new(move |_, _| w)
            }
            InitialConfig::Stream {
                rho,
                p,
                speed,
                angle_deg,
            } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let w = Prim::new(rho, speed * c, speed * s, p);
                Box::new(move |_, _| w)
            }
            InitialConfig::Riemann {
                left,
                right,
                angle_deg,
                position,
            } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let (l, r) = (left.prim(), right.prim());
                Box::new(move |x, y| if x * c + y * s <= position { l } else { r })
            }
            InitialConfig::Shock {
                mach,
                pre,
                position,
            } => {
                let pre = pre.prim();
                let post = shock_jump(&pre, mach, gas);
                Box::new(move |x, _| if x <= position { post } else { pre })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; the `EBAMR_OUT` environment variable overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Times at which plotfiles are written, besides the final state.
    #[serde(default)]
    pub plot_times: Vec<f64>,
    #[serde(default)]
    pub ledger: bool,
    /// Centerline profile of the rotated channel at the final time.
    #[serde(default)]
    pub profile: bool,
    #[serde(default)]
    pub schlieren: bool,
    #[serde(default)]
    pub register_dump: bool,
}

/// Everything needed to build a hierarchy, with problem defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub problem: Problem,
    pub geometry: GeometryConfig,
    pub bc: BcConfig,
    pub initial: InitialConfig,
}

fn channel() -> GeometryConfig {
    GeometryConfig::RotatedChannel {
        angle_deg: 30.0,
        half_width: 0.172,
        center: [0.0, 0.0],
    }
}

fn verr(key: &str, msg: impl Into<String>) -> Error {
    Error::Validation {
        key: key.into(),
        msg: msg.into(),
    }
}

fn pick<T: Clone>(given: &Option<T>, def: Option<T>, key: &str) -> Result<T> {
    given
        .clone()
        .or(def)
        .ok_or_else(|| verr(key, "required for problem `custom`"))
}

impl RunConfig {
    pub fn problem(&self) -> Result<Problem> {
        if self.problem.trim().is_empty() {
            return Err(verr("problem", "must not be empty"));
        }
        Problem::parse(&self.problem).ok_or_else(|| {
            verr(
                "problem",
                format!(
                    "unknown problem `{}` (expected one of {})",
                    self.problem,
                    Problem::ALL.map(|p| p.name()).join(", ")
                ),
            )
        })
    }

    /// Problem with the defaults of the named setups applied.
    pub fn resolve(&self) -> Result<Resolved> {
        let problem = self.problem()?;
        let (geometry, bc, initial) = match problem {
            Problem::RotatedChannelShock => (
                Some(channel()),
                Some(BcConfig::all(BcKind::SlipWall)),
                Some(InitialConfig::Riemann {
                    left: PrimConfig {
                        rho: 0.125,
                        u: 0.0,
                        v: 0.0,
                        p: 0.1,
                    },
                    right: PrimConfig {
                        rho: 1.0,
                        u: 0.0,
                        v: 0.0,
                        p: 1.0,
                    },
                    angle_deg: 0.0,
                    position: 0.0,
                }),
            ),
            Problem::RotatedSod => (
                Some(channel()),
                Some(BcConfig::all(BcKind::Outflow)),
                Some(InitialConfig::Riemann {
                    left: PrimConfig {
                        rho: 1.0,
                        u: 0.0,
                        v: 0.0,
                        p: 1.0,
                    },
                    right: PrimConfig {
                        rho: 0.125,
                        u: 0.0,
                        v: 0.0,
                        p: 0.1,
                    },
                    angle_deg: 30.0,
                    position: 0.0,
                }),
            ),
            Problem::ShockCylinder => (
                Some(GeometryConfig::Circle {
                    center: [0.5, 0.5],
                    radius: 0.15,
                    fluid_outside: true,
                }),
                Some(BcConfig {
                    x_lo: BcKind::Outflow,
                    x_hi: BcKind::Outflow,
                    y_lo: BcKind::SlipWall,
                    y_hi: BcKind::SlipWall,
                }),
                Some(InitialConfig::Shock {
                    mach: 2.81,
                    pre: PrimConfig {
                        rho: 1.0,
                        u: 0.0,
                        v: 0.0,
                        p: 1.0 / (self.gamma - 1.0),
                    },
                    position: 0.2,
                }),
            ),
            Problem::Custom => (None, None, None),
        };
        Ok(Resolved {
            problem,
            geometry: pick(&self.geometry, geometry, "geometry")?,
            bc: pick(&self.bc, bc, "bc")?,
            initial: pick(&self.initial, initial, "initial")?,
        })
    }

    pub fn validate(&self) -> Result<Resolved> {
        let r = self.resolve()?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(verr("cfl", format!("{} is not in (0, 1]", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(verr("t_end", "must be positive"));
        }
        if !(self.gamma > 1.0) {
            return Err(verr("gamma", "must exceed 1"));
        }
        if self.threads == 0 {
            return Err(verr("threads", "must be at least 1"));
        }
        let g = &self.grid;
        if g.n_cell.iter().any(|n| *n < 4) {
            return Err(verr("grid.n_cell", "need at least 4 cells per direction"));
        }
        if g.prob_hi.iter().zip(&g.prob_lo).any(|(h, l)| h <= l) {
            return Err(verr("grid.prob_hi", "must exceed prob_lo"));
        }
        let ref_ = &self.refinement;
        match ref_.mode {
            RefinementMode::Static => {
                if ref_.boxes.len() != g.max_level {
                    return Err(verr(
                        "refinement.boxes",
                        format!(
                            "{} boxes given for max_level = {}",
                            ref_.boxes.len(),
                            g.max_level
                        ),
                    ));
                }
            }
            RefinementMode::Dynamic => match ref_.threshold {
                Some(t) if t > 0.0 => {}
                _ => {
                    return Err(verr(
                        "refinement.threshold",
                        "dynamic refinement needs a positive threshold",
                    ))
                }
            },
        }
        if ref_.interval == 0 {
            return Err(verr("refinement.interval", "must be at least 1"));
        }
        if ref_.buffer < 0 {
            return Err(verr("refinement.buffer", "must be non-negative"));
        }
        if g.max_level > 0 {
            let b = r.bc;
            if [b.x_lo, b.x_hi, b.y_lo, b.y_hi].contains(&BcKind::Periodic) {
                return Err(verr("bc", "periodic boundaries are only supported without refinement"));
            }
        }
        let pairs = [(r.bc.x_lo, r.bc.x_hi), (r.bc.y_lo, r.bc.y_hi)];
        if pairs
            .iter()
            .any(|(a, b)| (*a == BcKind::Periodic) != (*b == BcKind::Periodic))
        {
            return Err(verr("bc", "periodic sides must come in pairs"));
        }
        if self.output.profile && !matches!(r.geometry, GeometryConfig::RotatedChannel { .. }) {
            return Err(verr("output.profile", "profiles need a rotated_channel geometry"));
        }
        if self.output.plot_times.iter().any(|t| !(*t > 0.0 && *t <= self.t_end)) {
            return Err(verr("output.plot_times", "times must lie in (0, t_end]"));
        }
        Ok(r)
    }

    pub fn gas(&self) -> Gas {
        Gas::new(self.gamma)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            integrator: self.integrator,
            redistribution: self.redistribution,
            wsrd: WsrdOptions {
                gradients: self.wsrd.gradients,
                limit: self.wsrd.limit,
            },
            frd_density_weights: self.sync.frd_density_weights,
            refluxing: self.sync.refluxing,
            rerd: self.sync.rerd,
            stabilize_sync: self.sync.stabilize,
            cfl: self.cfl,
            gas: self.gas(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            msg: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "rotated_channel_shock"
t_end = 0.4
[grid]
n_cell = [64, 64]
prob_lo = [-2.0, -2.0]
prob_hi = [2.0, 2.0]
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.cfl, 0.4);
        assert_eq!(c.integrator, Integrator::Godunov);
        assert!(c.sync.rerd);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = format!("{MINIMAL}bogus = 1\n");
        match parse_config(&text) {
            Err(Error::Parse { line, .. }) => assert!(line >= 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_needs_geometry() {
        let text = MINIMAL.replace("rotated_channel_shock", "custom");
        match parse_config(&text) {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "geometry"),
            other => panic!("{other:?}"),
        }
    }
}
