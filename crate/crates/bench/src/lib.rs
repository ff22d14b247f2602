//! Problem setups shared by the benchmarks.

use std::f64::consts::PI;

use fracwave_core::{
    Controls, FracOrder, Mesh1d, Model, ObjectiveSpec, PhysicsParams, SolverOptions, SpaceTimeField, TimeGrid,
    TrackingMode,
};

pub fn model(nx: usize, nt: usize) -> Model {
    let mesh = Mesh1d::uniform(0.0, 1.0, nx).expect("valid mesh");
    let params = PhysicsParams {
        c: 1.0,
        b: 0.2,
        alpha: FracOrder::new(0.5).expect("valid order"),
        k: vec![0.1; nx + 1],
        horizon: 1.0,
        b_max: 10.0,
        k_delta: 10.0,
    };
    let grid = TimeGrid::with_horizon(1.0, nt).expect("valid grid");
    Model::new(mesh, grid, params, SolverOptions::default()).expect("valid model")
}

pub fn source(m: &Model) -> Controls {
    let x = m.mesh.nodes().to_vec();
    Controls {
        f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| (PI * t).sin() * (PI * x[i]).cos()),
        ..m.zero_controls()
    }
}

pub fn objective(m: &Model) -> ObjectiveSpec {
    let x = m.mesh.nodes().to_vec();
    let target = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| t * (PI * x[i]).cos());
    ObjectiveSpec::new(target, TrackingMode::Running, 1e-4, 1e-4, vec![1.0; m.n_dofs()]).expect("valid objective")
}
