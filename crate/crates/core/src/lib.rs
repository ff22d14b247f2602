//! Simulation and optimal control of a time-fractionally damped Westervelt
//! equation in one space dimension.
//!
//! The crate is organised bottom-up:
//!
//! - [`fractional`]: Caputo derivatives (L1 scheme), Riemann–Liouville
//!   integrals and their adjoints.
//! - [`fem`]: P1 finite elements on an interval.
//! - [`forward`]: Newmark/L1 time stepping for the linearized equation and
//!   Picard iteration for the nonlinear one.
//! - [`adjoint`]: continuous and discrete adjoint states.
//! - [`control`]: objective, admissible sets, gradients and optimization.

pub mod adjoint;
pub mod control;
pub mod error;
pub mod fem;
pub mod field;
pub mod forward;
pub mod fractional;
pub mod linalg;
pub mod special;

#[cfg(test)]
mod test_util;

pub use adjoint::{solve_adjoint, solve_discrete_adjoint, AdjointData, Linearization};
pub use control::{
    condition_boundary_data, evaluate_objective, optimize, project_admissible, reduced_gradient, surrogate_xg_norm,
    AdmissibleSpec, ConditioningParams, ControlMask, GradientMethod, ObjectiveSpec, OptOptions, OptState, TrackingMode,
};
pub use error::{Error, Result};
pub use fem::{assemble, neumann_extension, FemMatrices, Mesh1d, SpatialField};
pub use field::{SpaceTimeField, TimeGrid};
pub use forward::{
    nondimensionalize, solve_linearized, solve_westervelt, BoundarySignal, Controls, LinearizedCoefficients, Model,
    PhysicsParams, SolverOptions, StateTrajectory,
};
pub use fractional::{adjoint_caputo, caputo_derivative, rl_integral, FracOrder, L1Scheme};
