//! Multi-view RGB-D holography pipeline.
//!
//! Generates object-centered RGB + depth view sets on a circular camera
//! track, estimates depth at held-out viewpoints, synthesizes layer-based
//! computer-generated holograms with Lee four-component encoding,
//! reconstructs them numerically, and sweeps the central angle between
//! adjacent viewpoints to find where quality stops paying for cost.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod depthest;
pub mod error;
pub mod holo;
pub mod imageio;
pub mod metrics;
pub mod recon;
pub mod scenegen;
pub mod sweep;
pub mod viewgeom;

pub use error::{Error, Result};
