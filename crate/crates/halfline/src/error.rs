use num_complex::Complex64;
use serde::Serialize;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Serialize, thiserror::Error)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Error {
    #[error("x = {x} lies outside the domain [0, {b})")]
    Domain { x: f64, b: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("m has a pole at z = {z} (z is a Dirichlet eigenvalue)")]
    Pole { z: Complex64 },

    #[error("cutoff escalation did not settle (last X_max = {x_max}, last change {change:e})")]
    Truncation { x_max: f64, change: f64 },

    #[error("no closed-form reference for {0}")]
    NotAReference(String),

    #[error("accuracy target missed: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Accuracy {
        estimate: f64,
        tolerance: f64,
        /// Both solutions (coarse, fine) when the estimate came from a step comparison.
        solutions: Option<Box<(Vec<f64>, Vec<f64>)>>,
    },

    #[error("Re κ = {re_kappa} is not above the representation threshold {threshold}")]
    RepresentationDomain { re_kappa: f64, threshold: f64 },

    #[error("Abelian extrapolation residuals do not decrease")]
    DivergenceSuspected { raw: Vec<(f64, f64)>, residuals: Vec<f64> },

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("bound-state search failed: {0}")]
    BoundState(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("special function overflow at x = {0}")]
    Overflow(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}
