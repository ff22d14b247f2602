//! Adjoint problems.
//!
//! Two flavours are provided. [`solve_adjoint`] discretizes the continuous
//! adjoint equation
//!
//! ```text
//! (1 - 2kp) q_tt - c^2 q_xx - b (D~^alpha q)_xx = nu (p - p_d) chi,
//! q(T) = 0,  q_t(T) = -(1 - nu) (p(T) - p_d(T)) chi / (1 - 2kp(T))
//! ```
//!
//! by time reversal and the forward solver. [`solve_discrete_adjoint`] is
//! the transpose of the fully discrete forward map and yields gradients
//! that are exact up to round-off; the optimizer uses it.

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::forward::{solve_linearized, LinearizedCoefficients, Model, StateTrajectory, NEWMARK_BETA, NEWMARK_GAMMA};
use crate::linalg::Tridiag;

/// Inputs of the adjoint problem.
#[derive(Debug, Clone, Copy)]
pub struct AdjointData<'a> {
    pub state: &'a StateTrajectory,
    pub target: &'a SpaceTimeField,
    /// Nodal indicator of the observation region.
    pub roi: &'a [f64],
    /// Weight between running (`nu = 1`) and terminal (`nu = 0`) tracking.
    pub nu: f64,
}

impl AdjointData<'_> {
    fn validate(&self, model: &Model) -> Result<()> {
        self.target.check_shape(&self.state.u, "target")?;
        self.state.u.check_shape(&model.zero_field(), "state")?;
        if self.roi.len() != model.n_dofs() {
            return Err(Error::Shape(format!(
                "observation mask has {} values, mesh has {} nodes",
                self.roi.len(),
                model.n_dofs()
            )));
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(Error::Domain(format!("tracking weight {} outside [0, 1]", self.nu)));
        }
        Ok(())
    }
}

/// Continuous adjoint by reversal: `q(t) = w(T - t)` where `w` solves a
/// forward problem with `a = 1 - 2k p(T - t)` and no first-order term.
pub fn solve_adjoint(model: &Model, data: &AdjointData<'_>) -> Result<StateTrajectory> {
    data.validate(model)?;
    let k = &model.params.k;
    let nt = model.n_times();
    let nx = model.n_dofs();
    let p_rev = data.state.u.time_reversed();
    let d_rev = data.target.time_reversed();

    let mut coeffs = LinearizedCoefficients::unit(model);
    for n in 0..nt {
        for i in 0..nx {
            let p = p_rev.row(n)[i];
            coeffs.a.row_mut(n)[i] = 1.0 - 2.0 * k[i] * p;
            coeffs.source.row_mut(n)[i] = data.nu * (p - d_rev.row(n)[i]) * data.roi[i];
        }
    }
    for i in 0..nx {
        let mismatch = p_rev.row(0)[i] - d_rev.row(0)[i];
        coeffs.u1[i] = (1.0 - data.nu) * mismatch * data.roi[i] / coeffs.a.row(0)[i];
    }
    let w = solve_linearized(model, &coeffs)?;
    Ok(StateTrajectory {
        u: w.u.time_reversed(),
        u_t: w.u_t.time_reversed().scaled(-1.0),
        u_tt: w.u_tt.time_reversed(),
        frac: w.frac.time_reversed(),
        energy: w.energy.into_iter().rev().collect(),
        fixed_point: None,
    })
}

/// Derivative of the discrete tracking functional with respect to each
/// state row: `nu tau_n M_0 e^n + (1 - nu) [n = N] M_0 e^N`.
pub fn tracking_sensitivity(model: &Model, data: &AdjointData<'_>) -> Result<SpaceTimeField> {
    data.validate(model)?;
    let m0 = model.weighted(data.roi);
    let tau = model.grid.trapezoid_weights();
    let last = model.grid.n_steps();
    let mut out = model.zero_field();
    for (n, &tn) in tau.iter().enumerate() {
        let e: Vec<f64> = data
            .state
            .u
            .row(n)
            .iter()
            .zip(data.target.row(n))
            .map(|(p, d)| p - d)
            .collect();
        let mut w = data.nu * tn;
        if n == last {
            w += 1.0 - data.nu;
        }
        if w != 0.0 {
            m0.apply_add(w, &e, out.row_mut(n));
        }
    }
    Ok(out)
}

/// Which forward map the discrete adjoint transposes.
#[derive(Debug, Clone, Copy)]
pub enum Linearization<'a> {
    /// Tangent of the Westervelt map at the given converged state.
    Westervelt(&'a StateTrajectory),
    /// The linear solver with frozen coefficients.
    Frozen(&'a LinearizedCoefficients),
}

struct StepMatrices {
    acc: Tridiag,
    vel: Tridiag,
    disp: Tridiag,
}

fn step_matrices(model: &Model, lin: &Linearization<'_>, n: usize) -> StepMatrices {
    match lin {
        Linearization::Frozen(c) => StepMatrices {
            acc: model.weighted(c.a.row(n)),
            vel: model.weighted(c.l.row(n)),
            disp: model.weighted(c.n.row(n)),
        },
        Linearization::Westervelt(s) => {
            let k = &model.params.k;
            let u = s.u.row(n);
            let v = s.u_t.row(n);
            let a_coef: Vec<f64> = u.iter().zip(k).map(|(u, k)| 1.0 - 2.0 * k * u).collect();
            let kv: Vec<f64> = v.iter().zip(k).map(|(v, k)| k * v).collect();
            let vel = model
                .weighted(&kv)
                .add_scaled(1.0, &model.weighted(v).mul_diag_right(k))
                .scaled(-2.0);
            let disp = model.weighted(s.u_tt.row(n)).mul_diag_right(k).scaled(-2.0);
            StepMatrices {
                acc: model.weighted(&a_coef),
                vel,
                disp,
            }
        }
    }
}

/// Transposed Newmark/L1 sweep. Returns the multipliers `lambda^n`, one
/// per load vector, so that the derivative of the functional with respect
/// to the load at step `n` is `lambda^n`.
pub fn solve_discrete_adjoint(model: &Model, lin: Linearization<'_>, dj_du: &SpaceTimeField) -> Result<SpaceTimeField> {
    dj_du.check_shape(&model.zero_field(), "state sensitivity")?;
    let nt = model.n_times();
    let nx = model.n_dofs();
    let last = nt - 1;
    let dt = model.grid.dt();
    let beta = NEWMARK_BETA * dt * dt;
    let gam = NEWMARK_GAMMA * dt;
    let c2 = model.params.c * model.params.c;
    let b = model.params.b;
    let stiff = c2 + b * model.l1.diagonal();
    let coef = model.l1.coef();
    let w = model.l1.weights();
    let k_mat = &model.fem.stiffness;

    let mut lambda = model.zero_field();
    let mut mu_next = vec![0.0; nx];
    let mut nu_next = vec![0.0; nx];
    let mut hist = vec![0.0; nx];

    for m in (1..=last).rev() {
        let mats = step_matrices(model, &lin, m);
        let disp = mats.disp.add_scaled(stiff, k_mat);
        let s = mats.acc.add_scaled(gam, &mats.vel).add_scaled(beta, &disp);

        // hist_m = coef * sum_{q>m} (w_{q-m} - w_{q-m-1}) lambda^q
        hist.fill(0.0);
        for q in m + 1..=last {
            let wq = coef * (w[q - m] - w[q - m - 1]);
            for (h, l) in hist.iter_mut().zip(lambda.row(q)) {
                *h += wq * l;
            }
        }
        let mut ru: Vec<f64> = mu_next.iter().zip(dj_du.row(m)).map(|(a, b)| a + b).collect();
        k_mat.apply_add(-b, &hist, &mut ru);
        let rv: Vec<f64> = nu_next.iter().zip(&mu_next).map(|(nv, mv)| nv + dt * mv).collect();

        let rhs: Vec<f64> = (0..nx)
            .map(|i| beta * (mu_next[i] + ru[i]) + gam * (nu_next[i] + rv[i]))
            .collect();
        let lam = s.transpose().solve(&rhs)?;

        let mut nu_m = rv;
        mats.vel.transpose().apply_add(-1.0, &lam, &mut nu_m);
        let mut mu_m = ru;
        disp.transpose().apply_add(-1.0, &lam, &mut mu_m);
        if lam.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalBlowup { step: m });
        }
        lambda.row_mut(m).copy_from_slice(&lam);
        mu_next = mu_m;
        nu_next = nu_m;
    }
    let a0 = step_matrices(model, &lin, 0).acc;
    let rhs: Vec<f64> = (0..nx).map(|i| beta * mu_next[i] + gam * nu_next[i]).collect();
    let lam0 = a0.transpose().solve(&rhs)?;
    lambda.row_mut(0).copy_from_slice(&lam0);
    Ok(lambda)
}

/// Rescales multipliers to pointwise adjoint values, `lambda^n / tau_n`.
pub fn multipliers_to_adjoint(model: &Model, lambda: &SpaceTimeField) -> SpaceTimeField {
    let tau = model.grid.trapezoid_weights();
    let mut out = lambda.clone();
    for (n, t) in tau.iter().enumerate() {
        out.row_mut(n).iter_mut().for_each(|x| *x /= t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Mesh1d;
    use crate::field::TimeGrid;
    use crate::forward::{solve_westervelt, source_vectors, Controls, PhysicsParams, SolverOptions};
    use crate::fractional::FracOrder;
    use std::f64::consts::PI;

    fn model(nx: usize, nt: usize, k: f64) -> Model {
        let mesh = Mesh1d::uniform(0.0, 1.0, nx).unwrap();
        let p = PhysicsParams {
            c: 1.0,
            b: 0.2,
            alpha: FracOrder::new(0.5).unwrap(),
            k: vec![k; nx + 1],
            horizon: 1.0,
            b_max: 1.0,
            k_delta: 1.0,
        };
        Model::new(
            mesh,
            TimeGrid::with_horizon(1.0, nt).unwrap(),
            p,
            SolverOptions {
                fp_tol: 1e-14,
                ..SolverOptions::default()
            },
        )
        .unwrap()
    }

    fn dot(a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn frozen_adjoint_is_exact_transpose() {
        let m = model(12, 30, 0.0);
        let mut c = LinearizedCoefficients::unit(&m);
        c.a = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| 1.0 + 0.3 * t * (i as f64 * 0.4).sin());
        c.l = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| 0.2 * (t + i as f64).cos());
        c.n = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| 0.1 * t * i as f64);
        c.source = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| (3.0 * t).sin() * (i as f64).cos());
        c.g.values = SpaceTimeField::from_fn(&m.grid, 2, |t, j| t * t * (1.0 - 2.0 * j as f64));
        let state = solve_linearized(&m, &c).unwrap();
        let probe = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| (t * 7.0 + i as f64).sin());
        let lambda = solve_discrete_adjoint(&m, Linearization::Frozen(&c), &probe).unwrap();
        let loads = source_vectors(&m, &c.source, &c.g);
        let lhs = dot(&probe, &state.u);
        let rhs = dot(&lambda, &loads);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn zero_mismatch_gives_zero_adjoint() {
        let m = model(10, 20, 0.1);
        let mut c = m.zero_controls();
        c.f = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, _| t * t);
        let s = solve_westervelt(&m, &c).unwrap();
        let roi = vec![1.0; m.n_dofs()];
        let data = AdjointData {
            state: &s,
            target: &s.u,
            roi: &roi,
            nu: 0.0,
        };
        let q = solve_adjoint(&m, &data).unwrap();
        assert_eq!(q.u.max_abs(), 0.0);
    }

    fn continuous_vs_discrete(nx: usize, nt: usize) -> f64 {
        let m = model(nx, nt, 0.1);
        let c = Controls {
            f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| {
                (PI * t).sin() * (PI * m.mesh.nodes()[i]).cos()
            }),
            ..m.zero_controls()
        };
        let s = solve_westervelt(&m, &c).unwrap();
        let target = SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, i| {
            0.5 * t * t * (2.0 * PI * m.mesh.nodes()[i]).cos()
        });
        let roi = m.mesh.interpolate(|x| if x <= 0.5 { 1.0 } else { 0.0 });
        let data = AdjointData {
            state: &s,
            target: &target,
            roi: &roi,
            nu: 1.0,
        };
        let q = solve_adjoint(&m, &data).unwrap();
        let dj = tracking_sensitivity(&m, &data).unwrap();
        let lambda = solve_discrete_adjoint(&m, Linearization::Westervelt(&s), &dj).unwrap();
        let qd = multipliers_to_adjoint(&m, &lambda);
        // Interior rows only: the endpoint multipliers carry half-weight
        // boundary layers of the time discretization.
        let inner = |f: &SpaceTimeField| (2..m.n_times() - 2).fold(0.0_f64, |a, n| a.max(m.fem.l2_norm(f.row(n))));
        inner(&q.u.sub(&qd)) / inner(&q.u)
    }

    #[test]
    fn discrete_adjoint_approaches_continuous_one() {
        let coarse = continuous_vs_discrete(32, 64);
        let fine = continuous_vs_discrete(64, 128);
        assert!(fine < 0.1, "{coarse} {fine}");
        assert!(fine < coarse);
    }

    #[test]
    fn terminal_velocity_matches_mismatch() {
        let m = model(16, 40, 0.2);
        let c = Controls {
            f: SpaceTimeField::from_fn(&m.grid, m.n_dofs(), |t, _| t),
            ..m.zero_controls()
        };
        let s = solve_westervelt(&m, &c).unwrap();
        let target = m.zero_field();
        let roi = vec![1.0; m.n_dofs()];
        let data = AdjointData {
            state: &s,
            target: &target,
            roi: &roi,
            nu: 0.0,
        };
        let q = solve_adjoint(&m, &data).unwrap();
        let last = m.grid.n_steps();
        assert_eq!(q.u.row(last).iter().fold(0.0_f64, |a, v| a.max(v.abs())), 0.0);
        for i in 0..m.n_dofs() {
            let p = s.u.row(last)[i];
            let expect = -p / (1.0 - 2.0 * 0.2 * p);
            assert!((q.u_t.row(last)[i] - expect).abs() < 1e-12);
        }
    }
}
