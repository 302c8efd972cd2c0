//! Fisher-information toolkit for two-point-source separation estimation:
//! PSF-adapted measurement bases, classical/quantum information bounds and
//! Monte Carlo verification of the Cramér-Rao limit.

pub mod error;
pub mod estimation;
pub mod fisher;
pub mod modes;
pub mod numerics;
pub mod psf;

pub use error::{Error, Result};
