//! Turns a [`RunConfig`] into solver inputs.

use std::f64::consts::PI;

use fracwave_core::{
    condition_boundary_data, solve_westervelt, BoundarySignal, ConditioningParams, Controls, FracOrder, Mesh1d, Model,
    ObjectiveSpec, PhysicsParams, SpaceTimeField, TimeGrid,
};

use crate::arrays::{parse_mesh, read_array, ArrayHeader};
use crate::config::{Forcing, RunConfig};
use crate::error::CliError;

pub fn build_model(cfg: &RunConfig) -> Result<Model, CliError> {
    let mesh = match &cfg.mesh.file {
        Some(path) => parse_mesh(&std::fs::read_to_string(path)?)?,
        None => Mesh1d::uniform(cfg.mesh.extent[0], cfg.mesh.extent[1], cfg.mesh.elements)?,
    };
    let p = &cfg.physics;
    let params = PhysicsParams {
        c: p.c,
        b: p.b,
        alpha: FracOrder::new(p.alpha)?,
        k: vec![p.k; mesh.n_nodes()],
        horizon: cfg.time.horizon,
        b_max: p.b_max,
        k_delta: p.k_delta,
    };
    let grid = TimeGrid::with_horizon(cfg.time.horizon, cfg.time.steps)?;
    Ok(Model::new(mesh, grid, params, cfg.solver)?)
}

/// Header for arrays on this model's grid.
pub fn header(model: &Model, cols: usize) -> ArrayHeader {
    ArrayHeader {
        rows: model.n_times(),
        cols,
        dt: model.grid.dt(),
        h: model.mesh.h(),
        alpha: model.params.alpha.value(),
    }
}

fn read_field(path: &std::path::Path, rows: usize, cols: usize, what: &str) -> Result<SpaceTimeField, CliError> {
    let (h, f) = read_array(path)?;
    if h.rows != rows || h.cols != cols {
        return Err(CliError::Config(format!(
            "{what} file {} is {}x{}, expected {rows}x{cols}",
            path.display(),
            h.rows,
            h.cols
        )));
    }
    Ok(f)
}

pub fn conditioning(cfg: &RunConfig, model: &Model) -> ConditioningParams {
    cfg.conditioning
        .unwrap_or_else(|| ConditioningParams::for_grid(&model.grid))
}

/// Raw boundary data is always passed through the compatibility
/// conditioning; sources are used as given.
pub fn build_controls(cfg: &RunConfig, model: &Model, forcing: &Forcing) -> Result<Controls, CliError> {
    let nt = model.n_times();
    let nb = model.fem.n_boundary();
    let raw = match &forcing.boundary_file {
        Some(path) => read_field(path, nt, nb, "boundary")?,
        None => {
            let amp = &forcing.boundary_amplitude;
            if !amp.is_empty() && amp.len() != nb {
                return Err(CliError::Config(format!(
                    "forcing.boundary_amplitude: expected {nb} values, got {}",
                    amp.len()
                )));
            }
            let w = 2.0 * PI * forcing.boundary_frequency;
            SpaceTimeField::from_fn(&model.grid, nb, |t, j| amp.get(j).map_or(0.0, |a| a * (w * t).sin()))
        }
    };
    let g = if raw.max_abs() == 0.0 {
        BoundarySignal::new(raw)
    } else {
        condition_boundary_data(&BoundarySignal::new(raw), &conditioning(cfg, model), &model.grid)?
    };
    let f = match &forcing.source_file {
        Some(path) => read_field(path, nt, model.n_dofs(), "source")?,
        None => {
            let (x0, x1) = model.mesh.extent();
            let horizon = model.grid.horizon();
            let a = forcing.source_amplitude;
            let x = model.mesh.nodes().to_vec();
            SpaceTimeField::from_fn(&model.grid, model.n_dofs(), |t, i| {
                a * (PI * t / horizon).sin() * (PI * (x[i] - x0) / (x1 - x0)).cos()
            })
        }
    };
    Ok(Controls { g, f })
}

pub fn build_objective(cfg: &RunConfig, model: &Model) -> Result<ObjectiveSpec, CliError> {
    let o = cfg
        .objective
        .as_ref()
        .ok_or_else(|| CliError::Config("objective: section required for optimize".into()))?;
    let target = match (&o.target_file, &o.truth) {
        (Some(path), _) => read_field(path, model.n_times(), model.n_dofs(), "target")?,
        (None, Some(truth)) => solve_westervelt(model, &build_controls(cfg, model, truth)?)?.u,
        (None, None) => return Err(CliError::Config("objective: needs target_file or truth".into())),
    };
    let roi = match o.roi {
        Some([a, b]) => model.mesh.interpolate(|x| if x >= a && x <= b { 1.0 } else { 0.0 }),
        None => vec![1.0; model.n_dofs()],
    };
    Ok(ObjectiveSpec::new(target, o.mode, o.gamma, o.eta, roi)?)
}
