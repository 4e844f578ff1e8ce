//! Simulation and analysis toolkit for a Sagnac-type, nondegenerate
//! polarization-entangled photon pair source.
//!
//! The crate is layered bottom-up:
//!
//! - [`polcalc`]: finite-dimensional polarization/path calculus (states,
//!   wave plates, projectors, partial trace, fidelity).
//! - [`source`]: the physical source model with its noise knobs.
//! - [`counts`]: expected rates, Poissonian sampling, heralding/PGR
//!   estimators and fit routines.
//! - [`analysis`]: tomography, CHSH and bootstrap error bars.
//! - [`teleport`]: dual degree-of-freedom teleportation.
//! - [`harness`]: JSON-configured campaigns and CSV/JSON emission behind the
//!   `epl` binary.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod counts;
mod error;
pub mod harness;
pub mod polcalc;
pub mod rng;
pub mod source;
pub mod teleport;

pub use error::{Error, Result};
