#![allow(dead_code)]

use fracwave_core::{FracOrder, Mesh1d, Model, PhysicsParams, SolverOptions, TimeGrid};

pub fn model(nx: usize, nt: usize, b: f64, alpha: f64, k: f64) -> Model {
    let mesh = Mesh1d::uniform(0.0, 1.0, nx).unwrap();
    let params = PhysicsParams {
        c: 1.0,
        b,
        alpha: FracOrder::new(alpha).unwrap(),
        k: vec![k; nx + 1],
        horizon: 1.0,
        b_max: 10.0,
        k_delta: 10.0,
    };
    let opts = SolverOptions {
        fp_tol: 1e-13,
        ..SolverOptions::default()
    };
    Model::new(mesh, TimeGrid::with_horizon(1.0, nt).unwrap(), params, opts).unwrap()
}
