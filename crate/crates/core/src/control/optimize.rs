//! Projected gradient descent with Armijo backtracking.

use serde::{Deserialize, Serialize};

use crate::control::admissible::{project_admissible, AdmissibleSpec};
use crate::control::gradient::{evaluate, Evaluation, GradientMethod, ReducedGradient};
use crate::control::objective::{control_inner, control_norm, ObjectiveSpec, ObjectiveValue};
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::forward::{BoundarySignal, Controls, Model};

/// Which controls are free; the others stay at their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMask {
    #[default]
    Both,
    Boundary,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptOptions {
    pub max_iter: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub stationarity_tol: f64,
    /// Trial step grows by this factor after an accepted step.
    pub growth: f64,
    pub method: GradientMethod,
    pub mask: ControlMask,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            max_backtracks: 30,
            stationarity_tol: 1e-8,
            growth: 2.0,
            method: GradientMethod::Discrete,
            mask: ControlMask::Both,
        }
    }
}

impl OptOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0) || !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Domain(
                "step must be positive and shrink factor in (0, 1)".into(),
            ));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Domain(format!("Armijo constant {} outside (0, 1)", self.armijo)));
        }
        if !(self.growth >= 1.0) {
            return Err(Error::Domain(format!("step growth {} below 1", self.growth)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub stationarity: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct OptState {
    pub controls: Controls,
    pub value: ObjectiveValue,
    pub gradient: ReducedGradient,
    pub iterations: usize,
    pub step: f64,
    pub stationarity: f64,
    pub converged: bool,
    pub history: Vec<IterRecord>,
}

impl OptState {
    pub fn objective(&self) -> f64 {
        self.value.total()
    }
}

fn masked(g: &ReducedGradient, mask: ControlMask) -> Controls {
    let mut c = g.as_controls();
    match mask {
        ControlMask::Both => {}
        ControlMask::Boundary => c.f.as_mut_slice().fill(0.0),
        ControlMask::Distributed => c.g.values.as_mut_slice().fill(0.0),
    }
    c
}

fn step_from(x: &Controls, d: &Controls, s: f64) -> Controls {
    let mut g = x.g.values.clone();
    g.axpy(-s, &d.g.values);
    let mut f = x.f.clone();
    f.axpy(-s, &d.f);
    Controls {
        g: BoundarySignal::new(g),
        f,
    }
}

fn difference(a: &Controls, b: &Controls) -> Controls {
    Controls {
        g: BoundarySignal::new(a.g.values.sub(&b.g.values)),
        f: a.f.sub(&b.f),
    }
}

/// `||P(x - s grad) - x|| / s`
pub fn stationarity(
    model: &Model,
    x: &Controls,
    grad: &ReducedGradient,
    adm: &AdmissibleSpec,
    mask: ControlMask,
    s: f64,
) -> Result<f64> {
    let trial = project_admissible(model, &step_from(x, &masked(grad, mask), s), adm)?;
    Ok(control_norm(model, &difference(&trial, x)) / s)
}

pub fn optimize(
    model: &Model,
    init: &Controls,
    spec: &ObjectiveSpec,
    adm: &AdmissibleSpec,
    opts: &OptOptions,
) -> Result<OptState> {
    opts.validate()?;
    spec.check(model)?;
    // Iterates carry values only; derivatives come from differences.
    let x0 = Controls {
        g: init.g.values_only(),
        f: init.f.clone(),
    };
    if !adm.contains(model, &x0)? {
        return Err(Error::Precondition("initial controls are not admissible".into()));
    }
    let Evaluation {
        objective: mut value,
        gradient: mut grad,
        ..
    } = evaluate(model, &x0, spec, opts.method)?;
    let mut x = x0;
    let s0 = opts.initial_step;
    let mut stat = stationarity(model, &x, &grad, adm, opts.mask, s0)?;
    let mut history = vec![IterRecord {
        iteration: 0,
        objective: value.total(),
        stationarity: stat,
        step: 0.0,
    }];
    let mut step = s0;
    let mut iterations = 0;
    let state =
        |x: &Controls, value, grad: &ReducedGradient, it, step, stat, converged, history: &Vec<IterRecord>| OptState {
            controls: x.clone(),
            value,
            gradient: grad.clone(),
            iterations: it,
            step,
            stationarity: stat,
            converged,
            history: history.clone(),
        };

    while iterations < opts.max_iter && stat > opts.stationarity_tol {
        let dir = masked(&grad, opts.mask);
        let j0 = value.total();
        let mut accepted = None;
        let mut s = step;
        for _ in 0..opts.max_backtracks {
            let trial = project_admissible(model, &step_from(&x, &dir, s), adm)?;
            let delta = difference(&trial, &x);
            // Armijo along the projection arc.
            let slope = control_inner(model, &dir, &delta);
            match evaluate(model, &trial, spec, opts.method) {
                Ok(ev) if ev.objective.total() <= j0 + opts.armijo * slope && ev.objective.total() < j0 => {
                    accepted = Some((trial, ev));
                    break;
                }
                Ok(_) | Err(Error::NonDegeneracyViolation { .. }) | Err(Error::FixedPointDivergence { .. }) => {
                    s *= opts.shrink;
                }
                Err(e) => return Err(e),
            }
        }
        let Some((trial, ev)) = accepted else {
            log::warn!("line search stalled at iteration {iterations}");
            return Err(Error::LineSearchStall {
                state: Box::new(state(&x, value, &grad, iterations, s, stat, false, &history)),
            });
        };
        iterations += 1;
        x = trial;
        value = ev.objective;
        grad = ev.gradient;
        stat = stationarity(model, &x, &grad, adm, opts.mask, s0)?;
        history.push(IterRecord {
            iteration: iterations,
            objective: value.total(),
            stationarity: stat,
            step: s,
        });
        log::debug!(
            "iter {iterations}: j = {:e}, stationarity = {stat:e}, step = {s:e}",
            value.total()
        );
        step = s * opts.growth;
    }
    let converged = stat <= opts.stationarity_tol;
    Ok(state(&x, value, &grad, iterations, step, stat, converged, &history))
}

/// Same shape as `c`, all zero.
pub fn zero_like(c: &Controls) -> Controls {
    Controls {
        g: BoundarySignal::new(SpaceTimeField::zeros(c.g.values.n_times(), c.g.n_boundary())),
        f: SpaceTimeField::zeros(c.f.n_times(), c.f.n_cols()),
    }
}

/// Control-space distance.
pub fn control_distance(model: &Model, a: &Controls, b: &Controls) -> f64 {
    control_norm(model, &difference(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::objective::TrackingMode;
    use crate::fem::Mesh1d;
    use crate::field::TimeGrid;
    use crate::forward::{solve_westervelt, PhysicsParams, SolverOptions};
    use crate::fractional::FracOrder;

    fn model() -> Model {
        let mesh = Mesh1d::uniform(0.0, 1.0, 10).unwrap();
        let p = PhysicsParams {
            c: 1.0,
            b: 0.1,
            alpha: FracOrder::new(0.5).unwrap(),
            k: vec![0.05; 11],
            horizon: 1.0,
            b_max: 1.0,
            k_delta: 1.0,
        };
        Model::new(
            mesh,
            TimeGrid::with_horizon(1.0, 32).unwrap(),
            p,
            SolverOptions::default(),
        )
        .unwrap()
    }

    fn spec(m: &Model, target: SpaceTimeField, cost: f64) -> ObjectiveSpec {
        ObjectiveSpec::new(target, TrackingMode::Running, cost, cost, vec![1.0; m.n_dofs()]).unwrap()
    }

    #[test]
    fn origin_is_optimal_for_zero_target() {
        let m = model();
        let adm = AdmissibleSpec::new(10.0, 10.0).unwrap();
        let st = optimize(
            &m,
            &m.zero_controls(),
            &spec(&m, m.zero_field(), 1e-3),
            &adm,
            &OptOptions::default(),
        )
        .unwrap();
        assert_eq!(st.iterations, 0);
        assert_eq!(st.stationarity, 0.0);
        assert!(st.converged);
    }

    #[test]
    fn descent_is_monotone() {
        let m = model();
        let mut truth = m.zero_controls();
        truth.f = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| t * (i as f64 * 0.3).cos());
        let target = solve_westervelt(&m, &truth).unwrap().u;
        let adm = AdmissibleSpec::new(100.0, 100.0).unwrap();
        let opts = OptOptions {
            max_iter: 15,
            mask: ControlMask::Distributed,
            ..OptOptions::default()
        };
        let st = optimize(&m, &m.zero_controls(), &spec(&m, target, 1e-6), &adm, &opts).unwrap();
        assert_eq!(st.controls.g.values.max_abs(), 0.0);
        for w in st.history.windows(2) {
            assert!(w[1].objective < w[0].objective);
        }
        assert!(st.objective() < 0.5 * st.history[0].objective);
    }

    #[test]
    fn heavy_cost_keeps_origin() {
        let m = model();
        let adm = AdmissibleSpec::new(10.0, 10.0).unwrap();
        let small = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, _| 1e-3 * t * t);
        let st = optimize(
            &m,
            &m.zero_controls(),
            &spec(&m, small, 1e6),
            &adm,
            &OptOptions::default(),
        )
        .unwrap();
        assert!(control_norm(&m, &st.controls) < 1e-8);
    }

    #[test]
    fn stall_returns_state() {
        let m = model();
        let adm = AdmissibleSpec::new(10.0, 10.0).unwrap();
        let target = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, _| t * t);
        let opts = OptOptions {
            max_backtracks: 1,
            initial_step: 1e8,
            ..OptOptions::default()
        };
        match optimize(&m, &m.zero_controls(), &spec(&m, target, 1e-3), &adm, &opts) {
            Err(Error::LineSearchStall { state }) => assert_eq!(state.iterations, 0),
            other => panic!("expected stall, got {:?}", other.map(|s| s.iterations)),
        }
    }
}
