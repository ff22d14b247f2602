//! Optimal control: objective, admissible sets, gradients, optimizer and
//! the experiment drivers built on them.

pub mod admissible;
pub mod conditioning;
pub mod gradient;
pub mod objective;
pub mod optimize;
pub mod studies;

pub use admissible::{project_admissible, surrogate_xg_norm, xg_norm_parts, AdmissibleSpec, XgNormParts};
pub use conditioning::{bump_function, condition_boundary_data, ConditioningParams};
pub use gradient::{evaluate, reduced_gradient, Evaluation, GradientMethod, ReducedGradient};
pub use objective::{control_inner, control_norm, evaluate_objective, ObjectiveSpec, ObjectiveValue, TrackingMode};
pub use optimize::{optimize, stationarity, ControlMask, IterRecord, OptOptions, OptState};
pub use studies::{
    run_target_perturbation_study, run_vanishing_regularization_study, LadderReport, PerturbationReport,
};
