//! Dressed-state spectroscopy of the NV⁻ excited state.
//!
//! Closed-form PLE and ODMR spectra of the strained E_x/E_y pair under a
//! microwave drive, a time-domain density-matrix oracle, and the fitting
//! routines that turn measured spectra back into couplings and dipoles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod dressed;
pub mod error;
pub mod estimation;
pub mod io;
pub mod lineshape;
pub mod model;
pub mod oracle;
pub mod special;
pub mod spectra;

pub use diagnostics::Warning;
pub use error::{Error, Result};
