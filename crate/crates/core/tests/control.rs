mod common;

use std::f64::consts::PI;

use common::model;
use fracwave_core::control::gradient::{evaluate, objective_at};
use fracwave_core::control::optimize::zero_like;
use fracwave_core::control::studies::run_target_perturbation_study;
use fracwave_core::{
    optimize, project_admissible, AdmissibleSpec, BoundarySignal, ControlMask, Controls, GradientMethod, Model,
    ObjectiveSpec, OptOptions, SpaceTimeField, TrackingMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn source_target(m: &Model, amp: f64) -> ObjectiveSpec {
    let x = m.mesh.nodes().to_vec();
    let truth = Controls {
        f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| amp * (PI * t).sin() * (PI * x[i]).cos()),
        ..m.zero_controls()
    };
    let target = solve(m, &truth);
    ObjectiveSpec::new(target, TrackingMode::Running, 1e-4, 1e-4, vec![1.0; m.n_dofs()]).unwrap()
}

fn solve(m: &Model, c: &Controls) -> SpaceTimeField {
    fracwave_core::solve_westervelt(m, c).unwrap().u
}

#[test]
fn directional_derivative_matches_central_difference() {
    let m = model(16, 64, 0.3, 0.6, 0.1);
    let spec = source_target(&m, 1.0);
    let x = m.mesh.nodes().to_vec();
    let at = Controls {
        g: BoundarySignal::new(SpaceTimeField::from_fn(&m.grid, 2, |t, j| t * t * (0.5 + j as f64))),
        f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| t * x[i]),
    };
    let dir = Controls {
        g: BoundarySignal::new(SpaceTimeField::from_fn(&m.grid, 2, |t, j| t.powi(3) * (1.0 - j as f64))),
        f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| (2.0 * t).sin() * (1.0 - x[i])),
    };
    let ev = evaluate(&m, &at, &spec, GradientMethod::Discrete).unwrap();
    let e = 1e-5;
    let shifted = |s: f64| {
        let mut c = at.clone();
        c.g.values.axpy(s, &dir.g.values);
        c.f.axpy(s, &dir.f);
        objective_at(&m, &c, &spec).unwrap().1.total()
    };
    let fd = (shifted(e) - shifted(-e)) / (2.0 * e);
    let d = ev.gradient.pair(&m, &dir);
    assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "fd {fd}, adjoint {d}");
}

#[test]
fn constrained_source_satisfies_variational_inequality() {
    let m = model(12, 48, 0.2, 0.5, 0.05);
    let spec = source_target(&m, 2.0);
    let adm = AdmissibleSpec::new(1e6, 0.05).unwrap();
    let opts = OptOptions {
        max_iter: 400,
        stationarity_tol: 1e-9,
        mask: ControlMask::Distributed,
        ..OptOptions::default()
    };
    let st = optimize(&m, &m.zero_controls(), &spec, &adm, &opts).unwrap();
    let norm_f = adm.f_norm(&m, &st.controls.f);
    assert!(
        (norm_f - 0.05).abs() < 1e-9,
        "constraint should be active, |f| = {norm_f}"
    );
    assert!(st.stationarity < 1e-6, "stationarity {}", st.stationarity);

    // <grad_f, v - f> >= 0 for admissible v.
    let only_f = |c: &Controls| Controls {
        g: BoundarySignal::zeros(m.n_times(), 2),
        f: c.f.clone(),
    };
    let scale = st.gradient.f.max_abs();
    let mut r = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let mut v = zero_like(&st.controls);
        for val in v.f.as_mut_slice() {
            *val = r.random_range(-1.0..1.0);
        }
        let v = project_admissible(&m, &v, &adm).unwrap();
        let mut dir = only_f(&v);
        dir.f.axpy(-1.0, &st.controls.f);
        let pairing = st.gradient.pair(&m, &dir);
        assert!(pairing >= -1e-6 * scale, "pairing {pairing}");
    }
}

#[test]
fn perturbation_study_is_reproducible_and_anchored() {
    let m = model(10, 32, 0.2, 0.5, 0.05);
    let spec = source_target(&m, 1.0);
    let adm = AdmissibleSpec::new(1e3, 1e3).unwrap();
    let opts = OptOptions {
        max_iter: 15,
        ..OptOptions::default()
    };
    let deltas = [0.0, 1e-3, 1e-2, 1e-1];
    let run = |seed| run_target_perturbation_study(&m, &spec, &adm, &opts, &m.zero_controls(), &deltas, seed).unwrap();
    let a = run(3);
    let b = run(3);
    assert_eq!(a, b);
    let zero = a.rows.iter().find(|r| r.delta == 0.0).unwrap();
    assert_eq!(zero.distance, 0.0);
    let c = run(4);
    assert_ne!(a.rows, c.rows);
}

#[test]
fn optimizer_rejects_inadmissible_start() {
    let m = model(8, 16, 0.2, 0.5, 0.0);
    let spec = source_target(&m, 1.0);
    let adm = AdmissibleSpec::new(1e3, 1e-3).unwrap();
    let mut init = m.zero_controls();
    init.f = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |_, _| 1.0);
    assert!(optimize(&m, &init, &spec, &adm, &OptOptions::default()).is_err());
}
