use crate::index::Cell;

pub type Result<T> = std::result::Result<T, Error>;

/// Where in the hierarchy a failure happened.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Site {
    pub level: Option<usize>,
    pub step: Option<usize>,
    pub cell: Option<Cell>,
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if let Some(l) = self.level {
            parts.push(format!("level {l}"));
        }
        if let Some(s) = self.step {
            parts.push(format!("step {s}"));
        }
        if let Some(c) = self.cell {
            parts.push(format!("cell ({}, {})", c.i, c.j));
        }
        if parts.is_empty() {
            write!(f, "unknown location")
        } else {
            write!(f, "{}", parts.join(", "))
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("negative density {value:e} at {site}")]
    NegativeDensity { value: f64, site: Site },
    #[error("negative pressure {value:e} at {site}")]
    NegativePressure { value: f64, site: Site },
    #[error("negative energy and pressure after synchronization (rhoE {energy:e}, p {pressure:e}) at {site}")]
    NegativeStateAfterSync {
        energy: f64,
        pressure: f64,
        site: Site,
    },
    #[error("non-finite state at {site}")]
    NotFinite { site: Site },
    #[error("Riemann problem generates vacuum")]
    Vacuum,
    #[error("exact Riemann solver did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("no fluid cells in field")]
    EmptyFluid,
    #[error("cell ({}, {}) is cut more than once", .0.i, .0.j)]
    MultiplyCutCell(Cell),
    #[error("volume fraction {value} out of range in cell ({}, {})", .cell.i, .cell.j)]
    DegenerateGeometry { cell: Cell, value: f64 },
    #[error("incompatible boxes: {0}")]
    IncompatibleBoxes(String),
    #[error("cannot reach target volume for small cell ({}, {})", .0.i, .0.j)]
    InsufficientVolume(Cell),
    #[error("coarse cell ({}, {}) has fluid but all fine children are body", .0.i, .0.j)]
    EmptyFluidUnderCoarse(Cell),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid value for `{key}`: {msg}")]
    Validation { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach hierarchy location to errors that carry one.
    pub fn at(mut self, level: usize, step: Option<usize>) -> Self {
        match &mut self {
            Error::NegativeDensity { site, .. }
            | Error::NegativePressure { site, .. }
            | Error::NegativeStateAfterSync { site, .. }
            | Error::NotFinite { site } => {
                site.level = site.level.or(Some(level));
                site.step = site.step.or(step);
            }
            _ => {}
        }
        self
    }

    pub fn with_cell(mut self, c: Cell) -> Self {
        match &mut self {
            Error::NegativeDensity { site, .. }
            | Error::NegativePressure { site, .. }
            | Error::NegativeStateAfterSync { site, .. }
            | Error::NotFinite { site } => {
                site.cell = site.cell.or(Some(c));
            }
            _ => {}
        }
        self
    }

    /// True for failures of the numerical solution (as opposed to setup).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NegativeDensity { .. }
                | Error::NegativePressure { .. }
                | Error::NegativeStateAfterSync { .. }
                | Error::NotFinite { .. }
                | Error::Vacuum
                | Error::NoConvergence(_)
                | Error::InsufficientVolume(_)
        )
    }
}
