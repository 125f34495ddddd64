//! Numerical toolkit for half-line Schrödinger operators `-u'' + q u = z u`.
//!
//! The crate computes the Weyl m-function, the A-amplitude in the Laplace-type
//! representation `m(-κ²) = -κ - ∫ A(α) e^{-2ακ} dα`, spectral measures and
//! scattering data, and checks the quantitative bounds that tie them together
//! against independent brute-force oracles.

pub mod acceptance;
pub mod amplitude;
pub mod error;
pub mod hboundary;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod report;
pub mod scattering;
pub mod spectral;
pub mod testfn;
pub mod weyl;

mod ode;

pub use error::{Error, Result};
pub use model::{Potential, Problem, ReferenceSet};
pub use num_complex::Complex64;
pub use report::{Verdict, VerificationReport};
