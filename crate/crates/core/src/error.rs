use thiserror::Error;

use crate::control::OptState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Array sizes or grids disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    /// The leading coefficient left `[lower, upper]`.
    #[error(
        "non-degeneracy violated at x = {x}, t = {t}: coefficient {value} outside \
         [{lower}, {upper}] (max |2kp| = {max_2kp})"
    )]
    NonDegeneracyViolation {
        x: f64,
        t: f64,
        value: f64,
        lower: f64,
        upper: f64,
        max_2kp: f64,
    },

    #[error("non-finite value in trajectory at step {step}")]
    NumericalBlowup { step: usize },

    #[error(
        "fixed-point iteration did not converge in {iterations} iterations (last relative change {last_change:e})"
    )]
    FixedPointDivergence { iterations: usize, last_change: f64 },

    #[error("nonlinearity coefficient too large: norm {norm} exceeds delta {delta}")]
    SmallnessViolation { norm: f64, delta: f64 },

    /// Armijo backtracking failed repeatedly; the optimizer state at the
    /// point of failure is attached.
    #[error("line search stalled after {} iterations", state.iterations)]
    LineSearchStall { state: Box<OptState> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
