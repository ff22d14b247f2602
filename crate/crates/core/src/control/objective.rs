//! Tracking objective with quadratic control costs.

use serde::{Deserialize, Serialize};

use crate::adjoint::AdjointData;
use crate::error::{Error, Result};
use crate::fem::SpatialField;
use crate::field::SpaceTimeField;
use crate::forward::{Controls, Model, StateTrajectory};

/// Which part of the trajectory is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackingMode {
    /// Whole time interval (`nu = 1`).
    Running,
    /// Final time only (`nu = 0`).
    Terminal,
}

impl TrackingMode {
    pub fn nu(self) -> f64 {
        match self {
            Self::Running => 1.0,
            Self::Terminal => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub target: SpaceTimeField,
    pub mode: TrackingMode,
    /// Boundary control cost.
    pub gamma: f64,
    /// Distributed control cost.
    pub eta: f64,
    /// Nodal indicator of the observation region.
    pub roi: SpatialField,
}

impl ObjectiveSpec {
    pub fn new(target: SpaceTimeField, mode: TrackingMode, gamma: f64, eta: f64, roi: SpatialField) -> Result<Self> {
        if !(gamma >= 0.0 && eta >= 0.0) {
            return Err(Error::Domain(format!(
                "control costs must be nonnegative (gamma = {gamma}, eta = {eta})"
            )));
        }
        if roi.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::Domain("observation mask entries must be 0 or 1".into()));
        }
        Ok(Self {
            target,
            mode,
            gamma,
            eta,
            roi,
        })
    }

    pub fn check(&self, model: &Model) -> Result<()> {
        self.target.check_shape(&model.zero_field(), "target")?;
        if self.roi.len() != model.n_dofs() {
            return Err(Error::Shape(format!(
                "observation mask has {} values, mesh has {} nodes",
                self.roi.len(),
                model.n_dofs()
            )));
        }
        Ok(())
    }

    pub fn adjoint_data<'a>(&'a self, state: &'a StateTrajectory) -> AdjointData<'a> {
        AdjointData {
            state,
            target: &self.target,
            roi: &self.roi,
            nu: self.mode.nu(),
        }
    }

    pub fn with_costs(&self, gamma: f64, eta: f64) -> Self {
        Self {
            gamma,
            eta,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveValue {
    pub tracking: f64,
    pub boundary_cost: f64,
    pub distributed_cost: f64,
}

impl ObjectiveValue {
    pub fn total(&self) -> f64 {
        self.tracking + self.boundary_cost + self.distributed_cost
    }

    /// `||p - p_d||` in the tracked norm.
    pub fn tracking_error(&self) -> f64 {
        (2.0 * self.tracking).max(0.0).sqrt()
    }
}

/// `sum_n tau_n g^n . W g^n` over the boundary nodes.
pub fn boundary_l2_sq(model: &Model, g: &SpaceTimeField) -> f64 {
    let tau = model.grid.trapezoid_weights();
    tau.iter()
        .enumerate()
        .map(|(n, t)| t * model.fem.boundary_norm_sq(g.row(n)))
        .sum()
}

/// `sum_n tau_n f^n . M f^n`
pub fn volume_l2_sq(model: &Model, f: &SpaceTimeField) -> f64 {
    let tau = model.grid.trapezoid_weights();
    tau.iter()
        .enumerate()
        .map(|(n, t)| t * model.fem.mass.quad_form(f.row(n)))
        .sum()
}

/// Discrete `L2(0,T; L2(Gamma)) x L2(0,T; L2(Omega))` inner product.
pub fn control_inner(model: &Model, a: &Controls, b: &Controls) -> f64 {
    let tau = model.grid.trapezoid_weights();
    let mut acc = 0.0;
    for (n, t) in tau.iter().enumerate() {
        acc += t * model.fem.boundary_inner(a.g.values.row(n), b.g.values.row(n));
        acc += t * model.fem.mass.bilinear(a.f.row(n), b.f.row(n));
    }
    acc
}

pub fn control_norm(model: &Model, c: &Controls) -> f64 {
    control_inner(model, c, c).max(0.0).sqrt()
}

pub fn evaluate_objective(
    model: &Model,
    state: &StateTrajectory,
    controls: &Controls,
    spec: &ObjectiveSpec,
) -> Result<ObjectiveValue> {
    spec.check(model)?;
    state.u.check_shape(&spec.target, "state")?;
    let m0 = model.weighted(&spec.roi);
    let nu = spec.mode.nu();
    let last = model.grid.n_steps();
    let err_sq = |n: usize| {
        let e: Vec<f64> = state
            .u
            .row(n)
            .iter()
            .zip(spec.target.row(n))
            .map(|(p, d)| p - d)
            .collect();
        m0.quad_form(&e)
    };
    let mut tracking = 0.0;
    if nu > 0.0 {
        let tau = model.grid.trapezoid_weights();
        tracking += 0.5 * nu * tau.iter().enumerate().map(|(n, t)| t * err_sq(n)).sum::<f64>();
    }
    if nu < 1.0 {
        tracking += 0.5 * (1.0 - nu) * err_sq(last);
    }
    Ok(ObjectiveValue {
        tracking,
        boundary_cost: 0.5 * spec.gamma * boundary_l2_sq(model, &controls.g.values),
        distributed_cost: 0.5 * spec.eta * volume_l2_sq(model, &controls.f),
    })
}
