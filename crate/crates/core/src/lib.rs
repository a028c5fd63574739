//! A numerical laboratory for tau-quantized pseudo-differential operators on
//! discretized Euclidean space.
//!
//! * [`euclid`]: grids, the Japanese bracket, endomorphism classes and `C_tau`.
//! * [`symbolcalc`]: the symbol classes `S^m`, seminorms and scaling.
//! * [`fourierlab`]: transforms, the dyadic partition of unity, decay and Sobolev norms.
//! * [`kernelfactory`]: the kernels `K_{a,b}(tau)`, their smoothed versions and factorizations.
//! * [`quantize`]: `tau`-quantization of phase-space symbols and Schatten diagnostics.
//! * [`harness`]: corpus, configuration, experiments and reports.
//! * [`tolerances`]: default tolerances of the harness checks.

pub mod error;
pub mod euclid;
pub mod fourierlab;
pub mod harness;
pub mod kernelfactory;
pub mod quadrature;
pub mod quantize;
pub mod symbolcalc;
pub mod tolerances;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
