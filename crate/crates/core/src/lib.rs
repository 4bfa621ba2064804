//! Weak-probe response of an optomechanical cavity containing a Λ-type
//! three-level atom driven by a control field.
//!
//! [`steady`] solves the pump-only steady state, [`response`] evaluates the
//! linearised sideband amplitudes and transmission, [`oracle`] and
//! [`timedomain`] check those against a direct linear solve and a nonlinear
//! integration, and [`scenarios`] turns spectra into windows, delays and
//! output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod oracle;
pub mod response;
pub mod scenarios;
pub mod steady;
pub mod timedomain;

pub use error::{Error, Result};
pub use model::{load_params, mhz, preset, to_mhz, PresetId, SystemParams};
pub use response::{spectrum, BFactor, ClosedForm, Spectrum};
pub use steady::{solve_steady, SteadyState};
