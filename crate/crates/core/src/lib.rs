//! Cut-cell finite-volume solver for the 2D compressible Euler equations on
//! block-structured adaptive meshes, with state and flux redistribution and
//! conservative synchronization across coarse/fine boundaries.

pub mod amr;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod geometry;
pub mod frd;
pub mod godunov;
pub mod index;
pub mod rerd;
pub mod run;
pub mod sync;
pub mod validate;
pub mod wsrd;

pub use error::{Error, Result};
