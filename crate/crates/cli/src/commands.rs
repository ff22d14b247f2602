//! `simulate` and `optimize`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fracwave_core::control::studies::{run_target_perturbation_study, run_vanishing_regularization_study};
use fracwave_core::special::gamma;
use fracwave_core::{
    optimize, solve_linearized, solve_westervelt, AdmissibleSpec, LinearizedCoefficients, Mesh1d, Model, PhysicsParams,
    SpaceTimeField, TimeGrid,
};
use serde::Serialize;

use crate::bundle::{cell, OutputBundle};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::scenario::{build_controls, build_model, build_objective, header};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Perturbation,
    VanishingReg,
}

impl std::str::FromStr for Study {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perturbation" => Ok(Self::Perturbation),
            "vanishing-reg" => Ok(Self::VanishingReg),
            other => Err(format!(
                "unknown study '{other}' (expected perturbation or vanishing-reg)"
            )),
        }
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    nodes: usize,
    steps: usize,
    dt: f64,
    fixed_point_iterations: usize,
    fixed_point_changes: Vec<f64>,
    max_2kp: f64,
    min_leading_coefficient: f64,
    max_leading_coefficient: f64,
    final_energy: f64,
    max_pressure: f64,
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let model = build_model(cfg)?;
    let controls = build_controls(cfg, &model, &cfg.forcing)?;
    let state = solve_westervelt(&model, &controls)?;
    let mut bundle = OutputBundle::create(out)?;
    let nx = model.n_dofs();
    bundle.write_array("pressure.f64", &header(&model, nx), &state.u)?;
    bundle.write_array("pressure_rate.f64", &header(&model, nx), &state.u_t)?;
    bundle.write_array(
        "boundary.f64",
        &header(&model, model.fem.n_boundary()),
        &controls.g.values,
    )?;
    let energy: Vec<Vec<String>> = state
        .energy
        .iter()
        .enumerate()
        .map(|(n, e)| vec![n.to_string(), cell(model.grid.t(n)), cell(*e)])
        .collect();
    bundle.write_csv("energy.csv", &["step", "t", "energy"], &energy)?;

    let k = &model.params.k;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in state.u.rows() {
        for (p, kv) in row.iter().zip(k) {
            let a = 1.0 - 2.0 * kv * p;
            lo = lo.min(a);
            hi = hi.max(a);
        }
    }
    let report = state.fixed_point.clone().expect("Picard solve reports iterations");
    let summary = SimulateSummary {
        nodes: nx,
        steps: model.grid.n_steps(),
        dt: model.grid.dt(),
        fixed_point_iterations: report.iterations,
        fixed_point_changes: report.changes.clone(),
        max_2kp: report.max_2kp,
        min_leading_coefficient: lo,
        max_leading_coefficient: hi,
        final_energy: *state.energy.last().unwrap_or(&0.0),
        max_pressure: state.u.max_abs(),
    };
    bundle.write_json("summary.json", &summary)?;

    if let Some(m) = &cfg.manufactured {
        let rows = manufactured_sweep(&model.params, &model.mesh, &model.grid, m.levels)?;
        bundle.write_csv(
            "manufactured.csv",
            &["sweep", "elements", "steps", "error", "order"],
            &rows,
        )?;
    }
    bundle.finish()
}

/// Final-time max error for `u = t^2 cos(pi x / L)` on `[0, L]`, `k = 0`.
pub fn manufactured_error(params: &PhysicsParams, length: f64, elements: usize, steps: usize) -> Result<f64, CliError> {
    let mesh = Mesh1d::uniform(0.0, length, elements)?;
    let grid = TimeGrid::with_horizon(params.horizon, steps)?;
    let p = PhysicsParams {
        k: vec![0.0; elements + 1],
        ..params.clone()
    };
    let model = Model::new(mesh, grid, p, Default::default())?;
    let a = model.params.alpha.value();
    let (c2, b) = (model.params.c.powi(2), model.params.b);
    let w = PI / length;
    let frac = 2.0 / gamma(3.0 - a);
    let x = model.mesh.nodes().to_vec();
    let mut coeffs = LinearizedCoefficients::unit(&model);
    coeffs.source = SpaceTimeField::from_fn(&model.grid, model.n_dofs(), |t, i| {
        let cx = (w * x[i]).cos();
        2.0 * cx + c2 * w * w * t * t * cx + b * w * w * frac * t.powf(2.0 - a) * cx
    });
    let s = solve_linearized(&model, &coeffs)?;
    let t = model.grid.horizon();
    let last = model.grid.n_steps();
    Ok(s.u
        .row(last)
        .iter()
        .zip(&x)
        .fold(0.0_f64, |e, (u, xi)| e.max((u - t * t * (w * xi).cos()).abs())))
}

fn manufactured_sweep(
    params: &PhysicsParams,
    mesh: &Mesh1d,
    grid: &TimeGrid,
    levels: usize,
) -> Result<Vec<Vec<String>>, CliError> {
    let (x0, x1) = mesh.extent();
    let length = x1 - x0;
    let base_e = mesh.n_elements();
    let base_n = grid.n_steps();
    let mut rows = Vec::new();
    for (sweep, fine_other) in [("time", base_e * (1 << levels)), ("space", base_n * (1 << levels))] {
        let mut prev: Option<f64> = None;
        for l in 0..=levels {
            let (e, n) = if sweep == "time" {
                (fine_other, base_n << l)
            } else {
                (base_e << l, fine_other)
            };
            let err = manufactured_error(params, length, e, n)?;
            let order = prev.map_or(String::new(), |p| cell((p / err).log2()));
            rows.push(vec![sweep.to_string(), e.to_string(), n.to_string(), cell(err), order]);
            prev = Some(err);
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct OptimizeSummary {
    iterations: usize,
    converged: bool,
    objective: f64,
    tracking: f64,
    boundary_cost: f64,
    distributed_cost: f64,
    stationarity: f64,
    initial_objective: f64,
}

fn admissible(cfg: &RunConfig) -> Result<AdmissibleSpec, CliError> {
    match cfg.admissible {
        Some(a) => Ok(a),
        None => Ok(AdmissibleSpec::new(1e6, 1e6)?),
    }
}

pub fn run_optimize(cfg: &RunConfig, out: &Path, study: Option<Study>) -> Result<PathBuf, CliError> {
    let model = build_model(cfg)?;
    let spec = build_objective(cfg, &model)?;
    let adm = admissible(cfg)?;
    let init = model.zero_controls();
    let mut bundle = OutputBundle::create(out)?;
    let section = cfg.study.clone().unwrap_or_default();
    match study {
        None => {
            let st = optimize(&model, &init, &spec, &adm, &cfg.optimizer)?;
            let nb = model.fem.n_boundary();
            bundle.write_array("control_boundary.f64", &header(&model, nb), &st.controls.g.values)?;
            bundle.write_array("control_source.f64", &header(&model, model.n_dofs()), &st.controls.f)?;
            let state = solve_westervelt(&model, &st.controls)?;
            bundle.write_array("pressure.f64", &header(&model, model.n_dofs()), &state.u)?;
            let rows: Vec<Vec<String>> = st
                .history
                .iter()
                .map(|r| {
                    vec![
                        r.iteration.to_string(),
                        cell(r.objective),
                        cell(r.stationarity),
                        cell(r.step),
                    ]
                })
                .collect();
            bundle.write_csv("history.csv", &["iterate", "objective", "stationarity", "step"], &rows)?;
            bundle.write_json(
                "summary.json",
                &OptimizeSummary {
                    iterations: st.iterations,
                    converged: st.converged,
                    objective: st.objective(),
                    tracking: st.value.tracking,
                    boundary_cost: st.value.boundary_cost,
                    distributed_cost: st.value.distributed_cost,
                    stationarity: st.stationarity,
                    initial_objective: st.history[0].objective,
                },
            )?;
        }
        Some(Study::Perturbation) => {
            let rep =
                run_target_perturbation_study(&model, &spec, &adm, &cfg.optimizer, &init, &section.deltas, cfg.seed)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.delta),
                        cell(r.distance),
                        cell(r.objective),
                        r.iterations.to_string(),
                    ]
                })
                .collect();
            bundle.write_csv(
                "perturbation.csv",
                &["delta", "distance", "objective", "iterations"],
                &rows,
            )?;
            bundle.write_json("summary.json", &rep)?;
        }
        Some(Study::VanishingReg) => {
            let rep = run_vanishing_regularization_study(&model, &spec, &adm, &cfg.optimizer, &init, &section.costs)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.cost),
                        cell(r.tracking_error),
                        cell(r.objective),
                        r.iterations.to_string(),
                        cell(r.stationarity),
                    ]
                })
                .collect();
            bundle.write_csv(
                "ladder.csv",
                &["cost", "tracking_error", "objective", "iterations", "stationarity"],
                &rows,
            )?;
            bundle.write_json("summary.json", &rep)?;
        }
    }
    bundle.finish()
}
