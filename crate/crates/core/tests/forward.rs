mod common;

use std::f64::consts::PI;

use common::model;
use fracwave_core::{solve_linearized, solve_westervelt, Controls, Error, LinearizedCoefficients, SpaceTimeField};

#[test]
fn damped_solves_stay_bounded_across_parameters() {
    for b in [0.0, 0.1, 1.0, 5.0] {
        for alpha in [0.1, 0.5, 0.9] {
            let m = model(24, 96, b, alpha, 0.0);
            let mut coeffs = LinearizedCoefficients::unit(&m);
            coeffs.u1 = m.mesh.interpolate(|x| (PI * x).cos());
            let s = solve_linearized(&m, &coeffs).unwrap();
            assert!(s.u.all_finite(), "b = {b}, alpha = {alpha}");
            let e0 = s.energy[0];
            for e in &s.energy {
                assert!(*e <= e0 * (1.0 + 1e-6), "energy grew for b = {b}, alpha = {alpha}");
            }
        }
    }
}

#[test]
fn stronger_damping_dissipates_more() {
    let final_energy = |b: f64| {
        let m = model(24, 96, b, 0.5, 0.0);
        let mut coeffs = LinearizedCoefficients::unit(&m);
        coeffs.u1 = m.mesh.interpolate(|x| (PI * x).cos());
        *solve_linearized(&m, &coeffs).unwrap().energy.last().unwrap()
    };
    let e: Vec<f64> = [0.0, 0.5, 2.0].into_iter().map(final_energy).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn westervelt_with_zero_nonlinearity_matches_linear_solve() {
    let m = model(16, 64, 0.3, 0.4, 0.0);
    let x = m.mesh.nodes().to_vec();
    let f = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| t * (2.0 * PI * x[i]).cos());
    let nonlinear = solve_westervelt(
        &m,
        &Controls {
            f: f.clone(),
            ..m.zero_controls()
        },
    )
    .unwrap();
    let mut coeffs = LinearizedCoefficients::unit(&m);
    coeffs.source = f;
    let linear = solve_linearized(&m, &coeffs).unwrap();
    assert!(nonlinear.u.sub(&linear.u).max_abs() < 1e-12);
}

#[test]
fn degenerate_amplitude_reports_instead_of_blowing_up() {
    let m = model(16, 64, 0.2, 0.5, 0.5);
    let x = m.mesh.nodes().to_vec();
    let controls = Controls {
        f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| 50.0 * (PI * t).sin() * (PI * x[i]).cos()),
        ..m.zero_controls()
    };
    match solve_westervelt(&m, &controls) {
        Err(Error::NonDegeneracyViolation { max_2kp, .. }) => assert!(max_2kp.is_finite()),
        other => panic!("expected a non-degeneracy error, got {other:?}"),
    }
}
