//! Oracle suites behind `fracwave verify`.

use std::f64::consts::PI;

use fracwave_core::control::gradient::{evaluate, objective_at};
use fracwave_core::fractional::coercivity_check;
use fracwave_core::fractional::oracle::gl_derivative_oracle;
use fracwave_core::special::gamma;
use fracwave_core::{
    adjoint_caputo, assemble, caputo_derivative, neumann_extension, solve_linearized, solve_westervelt, BoundarySignal,
    Controls, FracOrder, GradientMethod, LinearizedCoefficients, Mesh1d, Model, ObjectiveSpec, PhysicsParams,
    SolverOptions, SpaceTimeField, TimeGrid, TrackingMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::manufactured_error;
use crate::error::CliError;

pub const SUITES: [&str; 7] = [
    "frac-ops",
    "coercivity",
    "extension",
    "energy",
    "manufactured",
    "fixed-point",
    "gradient",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn failed_suites(&self) -> Vec<&str> {
        self.suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.suite.as_str())
            .collect()
    }
}

struct Checks {
    scale: f64,
    items: Vec<Check>,
}

impl Checks {
    fn new(scale: f64) -> Self {
        Self {
            scale,
            items: Vec::new(),
        }
    }

    /// `tol_scale` tightens or loosens every bound in the same sense.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        let t = threshold * self.scale;
        self.items.push(Check {
            name: name.into(),
            value,
            bound: Bound::AtMost,
            threshold: t,
            passed: value <= t,
        });
    }

    fn at_least(&mut self, name: &str, value: f64, threshold: f64) {
        let t = threshold / self.scale;
        self.items.push(Check {
            name: name.into(),
            value,
            bound: Bound::AtLeast,
            threshold: t,
            passed: value >= t,
        });
    }

    fn into_report(self, suite: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.into(),
            passed: self.items.iter().all(|c| c.passed),
            checks: self.items,
        }
    }
}

fn smooth_series(rng: &mut ChaCha8Rng, grid: &TimeGrid) -> Vec<f64> {
    let coef: Vec<(f64, f64)> = (1..=4)
        .map(|k| {
            let k = k as f64;
            (rng.random_range(-1.0..1.0) / k, rng.random_range(-1.0..1.0) / k)
        })
        .collect();
    let horizon = grid.horizon();
    grid.nodes()
        .map(|t| {
            coef.iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = (k + 1) as f64 * PI * t / horizon;
                    a * (0.5 * w).sin() + b * (1.0 - w.cos())
                })
                .sum()
        })
        .collect()
}

fn fit_order(hs: &[f64], errs: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn frac_ops(c: &mut Checks, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let alpha = FracOrder::new(0.5)?;
    let a = alpha.value();
    // Power rule for t^2 at t = 1.
    let exact = 2.0 / gamma(3.0 - a);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [64, 128, 256, 512] {
        let grid = TimeGrid::with_horizon(1.0, n)?;
        let v: Vec<f64> = grid.nodes().map(|t| t * t).collect();
        let d = caputo_derivative(&v, alpha, &grid)?;
        hs.push(grid.dt());
        errs.push((d[n] - exact).abs());
    }
    c.at_least("l1_order_t2", fit_order(&hs, &errs), 2.0 - a - 0.2);

    let grid = TimeGrid::with_horizon(1.0, 256)?;
    let dt = grid.dt();
    let mut worst_gl = 0.0_f64;
    let mut worst_dual = 0.0_f64;
    for _ in 0..20 {
        let v = smooth_series(rng, &grid);
        let d1: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        let d2 = d1.windows(2).fold(0.0_f64, |m, w| m.max(((w[1] - w[0]) / dt).abs()));
        let norm = v.iter().chain(&d1).fold(0.0_f64, |m, x| m.max(x.abs())) + d2;
        let l1 = caputo_derivative(&v, alpha, &grid)?;
        let gl = gl_derivative_oracle(&v, alpha, &grid)?;
        let dev = l1.iter().zip(&gl).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        worst_gl = worst_gl.max(dev / (dt * norm));

        let mut phi = smooth_series(rng, &grid);
        phi.reverse();
        let tphi = adjoint_caputo(&phi, alpha, &grid)?;
        let lhs: f64 = l1.iter().zip(&phi).map(|(x, y)| x * y).sum::<f64>() * dt;
        let rhs: f64 = v.iter().zip(&tphi).map(|(x, y)| x * y).sum::<f64>() * dt;
        let nv = (v.iter().map(|x| x * x).sum::<f64>() * dt).sqrt();
        let np = (phi.iter().map(|x| x * x).sum::<f64>() * dt).sqrt();
        worst_dual = worst_dual.max((lhs - rhs).abs() / (nv * np));
    }
    c.at_most("l1_vs_gl_over_dt_norm", worst_gl, 5.0);
    c.at_most("transpose_identity", worst_dual, 1e-12);
    Ok(())
}

fn coercivity(c: &mut Checks, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let grid = TimeGrid::with_horizon(1.0, 200)?;
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let alpha = FracOrder::new(rng.random_range(0.05..0.95))?;
        let mut u: Vec<f64> = grid.nodes().map(|_| rng.random_range(-1.0..1.0)).collect();
        u[0] = 0.0;
        let u = SpaceTimeField::from_vec(grid.len(), 1, u)?;
        let rep = coercivity_check(&u, alpha, &grid)?;
        worst = worst.min(rep.nonneg / rep.norm_sq.max(f64::MIN_POSITIVE));
    }
    c.at_least("min_rl_pairing_over_norm", worst, -1e-10);
    Ok(())
}

fn extension(c: &mut Checks) -> Result<(), CliError> {
    let exact = |x: f64| x.cosh() / 1f64.sinh();
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    let mut g1 = 0.0;
    for n in [16, 32, 64, 128] {
        let mesh = Mesh1d::uniform(0.0, 1.0, n)?;
        let mats = assemble(&mesh)?;
        // du/dn = 0 at x = 0, = 1 at x = 1
        let g = neumann_extension(&mats, &[0.0, 1.0])?;
        let e: Vec<f64> = g.iter().zip(mesh.nodes()).map(|(v, x)| v - exact(*x)).collect();
        errs.push(mats.h1_norm(&e));
        hs.push(mesh.h());
        g1 = g[n];
    }
    c.at_least("h1_order", fit_order(&hs, &errs), 1.9);
    c.at_most("endpoint_error", (g1 - 1.313_035_285_499_331).abs(), 1e-4);
    Ok(())
}

fn small_model(nx: usize, nt: usize, b: f64, k: f64) -> Result<Model, CliError> {
    let mesh = Mesh1d::uniform(0.0, 1.0, nx)?;
    let p = PhysicsParams {
        c: 1.0,
        b,
        alpha: FracOrder::new(0.5)?,
        k: vec![k; nx + 1],
        horizon: 1.0,
        b_max: 10.0,
        k_delta: 10.0,
    };
    let opts = SolverOptions {
        fp_tol: 1e-13,
        ..SolverOptions::default()
    };
    Ok(Model::new(mesh, TimeGrid::with_horizon(1.0, nt)?, p, opts)?)
}

fn energy(c: &mut Checks) -> Result<(), CliError> {
    let m = small_model(40, 400, 0.5, 0.0)?;
    let mut coeffs = LinearizedCoefficients::unit(&m);
    coeffs.u1 = m.mesh.interpolate(|x| (PI * x).cos() + 0.5 * (3.0 * PI * x).cos());
    let s = solve_linearized(&m, &coeffs)?;
    let e0 = s.energy[0];
    let growth = s.energy.iter().fold(0.0_f64, |g, e| g.max(e / e0 - 1.0));
    c.at_most("max_relative_energy_growth", growth, 1e-6);
    Ok(())
}

fn manufactured(c: &mut Checks) -> Result<(), CliError> {
    let p = PhysicsParams {
        c: 1.0,
        b: 0.5,
        alpha: FracOrder::new(0.5)?,
        k: Vec::new(),
        horizon: 1.0,
        b_max: 10.0,
        k_delta: 10.0,
    };
    let steps = [32, 64, 128];
    let errs: Vec<f64> = steps
        .iter()
        .map(|&n| manufactured_error(&p, 1.0, 400, n))
        .collect::<Result<_, _>>()?;
    let hs: Vec<f64> = steps.iter().map(|&n| 1.0 / n as f64).collect();
    c.at_least("time_order", fit_order(&hs, &errs), 1.5 - 0.2);
    let elems = [10, 20, 40];
    let errs: Vec<f64> = elems
        .iter()
        .map(|&e| manufactured_error(&p, 1.0, e, 2048))
        .collect::<Result<_, _>>()?;
    let hs: Vec<f64> = elems.iter().map(|&e| 1.0 / e as f64).collect();
    c.at_least("space_order", fit_order(&hs, &errs), 1.9);
    Ok(())
}

fn fixed_point(c: &mut Checks) -> Result<(), CliError> {
    let source = |m: &Model, amp: f64| Controls {
        f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| {
            amp * (PI * t).sin().powi(2) * (PI * m.mesh.nodes()[i]).cos()
        }),
        ..m.zero_controls()
    };
    let linear = small_model(32, 128, 0.2, 0.0)?;
    let s = solve_westervelt(&linear, &source(&linear, 1.0))?;
    c.at_most(
        "linear_iterations",
        s.fixed_point.map_or(f64::NAN, |r| r.iterations as f64),
        2.0,
    );
    let weak = small_model(32, 128, 0.2, 0.5)?;
    let r = solve_westervelt(&weak, &source(&weak, 1.0))?
        .fixed_point
        .expect("iteration report");
    c.at_most("max_2kp", r.max_2kp, 0.1 + 0.02);
    let worst = r.contraction_ratios().into_iter().fold(0.0_f64, f64::max);
    c.at_most("contraction_ratio", worst, 0.5);
    Ok(())
}

fn gradient(c: &mut Checks) -> Result<(), CliError> {
    let mut worst = 0.0_f64;
    for mode in [TrackingMode::Running, TrackingMode::Terminal] {
        let m = small_model(12, 48, 0.2, 0.1)?;
        let x = m.mesh.nodes().to_vec();
        let ctl = Controls {
            g: BoundarySignal::new(SpaceTimeField::from_fn(&m.grid, 2, |t, j| t * t * (1.0 + j as f64))),
            f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| t * (PI * x[i]).cos()),
        };
        let dir = Controls {
            g: BoundarySignal::new(SpaceTimeField::from_fn(&m.grid, 2, |t, j| {
                (3.0 * t).sin() * t * (1.0 - 2.0 * j as f64)
            })),
            f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| (t + x[i]).sin()),
        };
        let target = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| 0.3 * t * x[i]);
        let roi = m
            .mesh
            .interpolate(|x| if (0.25..=0.75).contains(&x) { 1.0 } else { 0.0 });
        let spec = ObjectiveSpec::new(target, mode, 1e-3, 1e-3, roi)?;
        let ev = evaluate(&m, &ctl, &spec, GradientMethod::Discrete)?;
        let d = ev.gradient.pair(&m, &dir);
        let j0 = ev.objective.total();
        let mut rem = Vec::new();
        for e in [1e-2, 1e-3] {
            let mut shifted = ctl.clone();
            shifted.g.values.axpy(e, &dir.g.values);
            shifted.f.axpy(e, &dir.f);
            rem.push((objective_at(&m, &shifted, &spec)?.1.total() - j0 - e * d).abs());
        }
        let slope = (rem[0] / rem[1]).log10();
        worst = worst.max((slope - 2.0).abs());
    }
    c.at_most("taylor_slope_deviation", worst, 0.1);
    Ok(())
}

/// Runs the named suites (all when `only` is empty).
pub fn run(only: &[String], tol_scale: f64, seed: u64) -> Result<VerifyReport, CliError> {
    for name in only {
        if !SUITES.contains(&name.as_str()) {
            return Err(CliError::Config(format!(
                "unknown suite '{name}' (expected one of {})",
                SUITES.join(", ")
            )));
        }
    }
    if !(tol_scale > 0.0) {
        return Err(CliError::Config(format!("tol-scale must be positive, got {tol_scale}")));
    }
    let mut suites = Vec::new();
    for name in SUITES {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Checks::new(tol_scale);
        match name {
            "frac-ops" => frac_ops(&mut c, &mut rng)?,
            "coercivity" => coercivity(&mut c, &mut rng)?,
            "extension" => extension(&mut c)?,
            "energy" => energy(&mut c)?,
            "manufactured" => manufactured(&mut c)?,
            "fixed-point" => fixed_point(&mut c)?,
            "gradient" => gradient(&mut c)?,
            _ => unreachable!("suite list checked above"),
        }
        suites.push(c.into_report(name));
    }
    Ok(VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}
