//! Reduced gradients of `j(g, f) = J(S(g, f), g, f)`.

use serde::{Deserialize, Serialize};

use crate::adjoint::{
    multipliers_to_adjoint, solve_adjoint, solve_discrete_adjoint, tracking_sensitivity, Linearization,
};
use crate::control::objective::{control_inner, evaluate_objective, ObjectiveSpec, ObjectiveValue};
use crate::error::Result;
use crate::field::SpaceTimeField;
use crate::forward::{solve_westervelt, BoundarySignal, Controls, Model, StateTrajectory};

/// How the adjoint state is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    /// Transpose of the discrete forward map; exact up to round-off.
    #[default]
    Discrete,
    /// Discretized continuous adjoint equation; consistent as `dt, h -> 0`.
    Continuous,
}

/// Riesz representatives in the discrete `L2` inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedGradient {
    pub g: SpaceTimeField,
    pub f: SpaceTimeField,
}

impl ReducedGradient {
    pub fn as_controls(&self) -> Controls {
        Controls {
            g: BoundarySignal::new(self.g.clone()),
            f: self.f.clone(),
        }
    }

    /// `<grad, h>` in the control inner product.
    pub fn pair(&self, model: &Model, h: &Controls) -> f64 {
        control_inner(model, &self.as_controls(), h)
    }
}

/// Gradient from a pointwise adjoint trajectory `q`:
/// `grad_f = q + eta f` and on the boundary
/// `grad_g = c^2 q + b D~^alpha q + gamma g`, where `D~^alpha` is the
/// transpose of the L1 operator under the trapezoid pairing.
pub fn reduced_gradient(
    model: &Model,
    controls: &Controls,
    adjoint: &SpaceTimeField,
    spec: &ObjectiveSpec,
) -> Result<ReducedGradient> {
    adjoint.check_shape(&model.zero_field(), "adjoint")?;
    let tau = model.grid.trapezoid_weights();
    let c2 = model.params.c * model.params.c;
    let b = model.params.b;
    let nb = model.fem.n_boundary();
    let nt = model.n_times();

    let mut f = adjoint.clone();
    f.axpy(spec.eta, &controls.f);

    // Boundary multipliers B^T (tau q), one column per boundary node.
    let mut mult = SpaceTimeField::zeros(nt, nb);
    for n in 0..nt {
        let tr = model.fem.boundary_trace_weighted(adjoint.row(n));
        for (m, v) in mult.row_mut(n).iter_mut().zip(tr) {
            *m = tau[n] * v;
        }
    }
    let mut g = SpaceTimeField::zeros(nt, nb);
    for j in 0..nb {
        let col = mult.column(j);
        let frac = model.l1().apply_transpose(&col);
        let w = model.fem.boundary_weights[j];
        let out: Vec<f64> = (0..nt)
            .map(|n| (c2 * col[n] + b * frac[n]) / (tau[n] * w) + spec.gamma * controls.g.values.row(n)[j])
            .collect();
        g.set_column(j, &out);
    }
    // g(0) is pinned by compatibility.
    g.row_mut(0).fill(0.0);
    Ok(ReducedGradient { g, f })
}

/// State, objective value and gradient at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub state: StateTrajectory,
    pub objective: ObjectiveValue,
    pub gradient: ReducedGradient,
}

pub fn adjoint_state(
    model: &Model,
    state: &StateTrajectory,
    spec: &ObjectiveSpec,
    method: GradientMethod,
) -> Result<SpaceTimeField> {
    let data = spec.adjoint_data(state);
    match method {
        GradientMethod::Discrete => {
            let dj = tracking_sensitivity(model, &data)?;
            let lambda = solve_discrete_adjoint(model, Linearization::Westervelt(state), &dj)?;
            Ok(multipliers_to_adjoint(model, &lambda))
        }
        GradientMethod::Continuous => Ok(solve_adjoint(model, &data)?.u),
    }
}

/// Objective value only.
pub fn objective_at(
    model: &Model,
    controls: &Controls,
    spec: &ObjectiveSpec,
) -> Result<(StateTrajectory, ObjectiveValue)> {
    let state = solve_westervelt(model, controls)?;
    let value = evaluate_objective(model, &state, controls, spec)?;
    Ok((state, value))
}

pub fn evaluate(
    model: &Model,
    controls: &Controls,
    spec: &ObjectiveSpec,
    method: GradientMethod,
) -> Result<Evaluation> {
    let (state, objective) = objective_at(model, controls, spec)?;
    let q = adjoint_state(model, &state, spec, method)?;
    let gradient = reduced_gradient(model, controls, &q, spec)?;
    Ok(Evaluation {
        state,
        objective,
        gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::objective::TrackingMode;
    use crate::fem::Mesh1d;
    use crate::field::TimeGrid;
    use crate::forward::{PhysicsParams, SolverOptions};
    use crate::fractional::FracOrder;
    use std::f64::consts::PI;

    fn model(nx: usize, nt: usize, k: f64) -> Model {
        let mesh = Mesh1d::uniform(0.0, 1.0, nx).unwrap();
        let p = PhysicsParams {
            c: 1.0,
            b: 0.2,
            alpha: FracOrder::new(0.4).unwrap(),
            k: vec![k; nx + 1],
            horizon: 1.0,
            b_max: 1.0,
            k_delta: 1.0,
        };
        let opts = SolverOptions {
            fp_tol: 1e-14,
            ..SolverOptions::default()
        };
        Model::new(mesh, TimeGrid::with_horizon(1.0, nt).unwrap(), p, opts).unwrap()
    }

    fn setup(m: &Model, mode: TrackingMode) -> (Controls, Controls, ObjectiveSpec) {
        let x = m.mesh.nodes().to_vec();
        let c = Controls {
            g: BoundarySignal::new(SpaceTimeField::from_fn(&m.grid, 2, |t, j| {
                t * t * (1.0 + j as f64) * (2.0 * t).cos()
            })),
            f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| t * (PI * x[i]).cos()),
        };
        let h = Controls {
            g: BoundarySignal::new(SpaceTimeField::from_fn(&m.grid, 2, |t, j| {
                (3.0 * t).sin() * t * (1.0 - 2.0 * j as f64)
            })),
            f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| (t + x[i]).sin()),
        };
        let target = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| 0.3 * t * x[i]);
        let roi = m
            .mesh
            .interpolate(|x| if (0.25..=0.75).contains(&x) { 1.0 } else { 0.0 });
        let spec = ObjectiveSpec::new(target, mode, 1e-2, 1e-2, roi).unwrap();
        (c, h, spec)
    }

    fn shifted(c: &Controls, h: &Controls, e: f64) -> Controls {
        let mut g = c.g.values.clone();
        g.axpy(e, &h.g.values);
        let mut f = c.f.clone();
        f.axpy(e, &h.f);
        Controls {
            g: BoundarySignal::new(g),
            f,
        }
    }

    #[test]
    fn zero_adjoint_gives_regularization_only() {
        let m = model(8, 16, 0.0);
        let (c, _, spec) = setup(&m, TrackingMode::Running);
        let gr = reduced_gradient(&m, &c, &m.zero_field(), &spec.with_costs(0.0, 0.0)).unwrap();
        assert_eq!(gr.g.max_abs(), 0.0);
        assert_eq!(gr.f.max_abs(), 0.0);
        let gr = reduced_gradient(&m, &c, &m.zero_field(), &spec).unwrap();
        let mut expect = c.g.values.scaled(spec.gamma);
        expect.row_mut(0).fill(0.0);
        assert_eq!(gr.g, expect);
    }

    #[test]
    fn discrete_gradient_matches_difference_quotient() {
        for mode in [TrackingMode::Running, TrackingMode::Terminal] {
            let m = model(12, 48, 0.15);
            let (c, h, spec) = setup(&m, mode);
            let ev = evaluate(&m, &c, &spec, GradientMethod::Discrete).unwrap();
            let e = 1e-5;
            let jp = objective_at(&m, &shifted(&c, &h, e), &spec).unwrap().1.total();
            let jm = objective_at(&m, &shifted(&c, &h, -e), &spec).unwrap().1.total();
            let fd = (jp - jm) / (2.0 * e);
            let ad = ev.gradient.pair(&m, &h);
            assert!((fd - ad).abs() < 1e-7 * fd.abs().max(1e-3), "{mode:?}: {fd} vs {ad}");
        }
    }

    #[test]
    fn continuous_gradient_is_close() {
        let m = model(32, 128, 0.1);
        let (c, h, spec) = setup(&m, TrackingMode::Running);
        let d = evaluate(&m, &c, &spec, GradientMethod::Discrete).unwrap();
        let q = adjoint_state(&m, &d.state, &spec, GradientMethod::Continuous).unwrap();
        let cg = reduced_gradient(&m, &c, &q, &spec).unwrap();
        let a = d.gradient.pair(&m, &h);
        let b = cg.pair(&m, &h);
        assert!((a - b).abs() < 0.05 * a.abs(), "{a} vs {b}");
    }
}
