//! Numerical toolkit for Korn-Maxwell-Sobolev (KMS) inequalities.
//!
//! The crate represents constant-coefficient homogeneous differential
//! operators through their symbol maps, decides the algebraic conditions
//! that govern KMS-type inequalities (ellipticity, constant rank,
//! cancellation — plain and reduced relative to a part map), realizes the
//! symbol-kernel projection and the associated correction term as discrete
//! Fourier multipliers on a periodic grid, and estimates inequality
//! constants by ensemble maxima and stochastic ratio ascent.
//!
//! Module map:
//! - [`symbols`]: operators, part maps, and symbol linear algebra,
//! - [`classifier`]: sampled verdicts for the algebraic conditions,
//! - [`spectral`]: grids, fields, and Fourier-multiplier operations,
//! - [`norms`]: Lebesgue and homogeneous Sobolev norms,
//! - [`lab`]: inequality scenarios, test fields, and constant estimation,
//! - [`opspec`]: JSON descriptions of operators, part maps, and scenarios,
//! - [`report`]: canonical (byte-reproducible) JSON rendering.

pub mod classifier;
pub mod error;
pub mod lab;
pub mod norms;
pub mod opspec;
pub mod report;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};
