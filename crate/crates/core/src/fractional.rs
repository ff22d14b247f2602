//! Discrete fractional calculus on a uniform time grid.
//!
//! The production Caputo derivative is the L1 product-integration scheme,
//! the Riemann–Liouville integral uses piecewise-linear product integration
//! with closed-form moments, and the right-sided (adjoint) derivative is
//! obtained by time reversal. All operators act on series sampled at the
//! `n_steps + 1` grid nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpaceTimeField, TimeGrid};
use crate::special::gamma;

/// Values below this (relative to the series scale) count as zero when
/// checking the vanishing-endpoint preconditions.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Fractional order, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!(
                "fractional order must lie in (0, 1), got {alpha}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FracOrder> for f64 {
    fn from(a: FracOrder) -> f64 {
        a.0
    }
}

/// The Abel kernel `t^{-alpha} / Gamma(1 - alpha)` of the Caputo derivative.
#[derive(Debug, Clone, Copy)]
pub struct SingularKernel {
    alpha: FracOrder,
    inv_gamma: f64,
}

impl SingularKernel {
    pub fn new(alpha: FracOrder) -> Self {
        Self {
            alpha,
            inv_gamma: 1.0 / gamma(1.0 - alpha.value()),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("memory kernel is singular at t <= 0 (t = {t})")));
        }
        Ok(t.powf(-self.alpha.value()) * self.inv_gamma)
    }

    /// `||K||_{L^1(0, T)} = T^{1 - alpha} / Gamma(2 - alpha)`.
    pub fn l1_mass(&self, horizon: f64) -> f64 {
        let a = self.alpha.value();
        horizon.powf(1.0 - a) / gamma(2.0 - a)
    }
}

pub fn kernel_eval(alpha: FracOrder, t: f64) -> Result<f64> {
    SingularKernel::new(alpha).eval(t)
}

/// L1 norm on `(0, T)` of the Riemann–Liouville kernel `t^{beta-1}/Gamma(beta)`.
pub fn rl_kernel_mass(beta: f64, horizon: f64) -> f64 {
    horizon.powf(beta) / gamma(beta + 1.0)
}

fn scale_of(v: &[f64]) -> f64 {
    v.iter().fold(1.0_f64, |m, x| m.max(x.abs()))
}

/// Precomputed L1 weights for a fixed order and step.
///
/// `(D v)_n = coef * sum_{j<n} w_{n-1-j} (v_{j+1} - v_j)` with
/// `w_m = (m+1)^{1-alpha} - m^{1-alpha}` and `coef = dt^{-alpha} / Gamma(2-alpha)`.
#[derive(Debug, Clone)]
pub struct L1Scheme {
    alpha: FracOrder,
    coef: f64,
    weights: Vec<f64>,
}

impl L1Scheme {
    pub fn new(alpha: FracOrder, grid: &TimeGrid) -> Self {
        let a = alpha.value();
        let e = 1.0 - a;
        let weights = (0..grid.n_steps())
            .map(|m| {
                let m = m as f64;
                (m + 1.0).powf(e) - m.powf(e)
            })
            .collect();
        Self {
            alpha,
            coef: grid.dt().powf(-a) / gamma(2.0 - a),
            weights,
        }
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn coef(&self) -> f64 {
        self.coef
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight multiplying the newest increment, `coef * w_0`.
    pub fn diagonal(&self) -> f64 {
        self.coef * self.weights[0]
    }

    /// Applies the scheme without checking `v[0] = 0`. Terms involving
    /// `v[0]` enter through the first increment exactly as written.
    pub fn apply_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let n_times = v.len();
        let inc: Vec<f64> = v.windows(2).map(|p| p[1] - p[0]).collect();
        let mut out = vec![0.0; n_times];
        for n in 1..n_times {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.weights[n - 1 - j] * inc[j];
            }
            out[n] = self.coef * acc;
        }
        out
    }

    /// Exact algebraic transpose of [`apply_unchecked`](Self::apply_unchecked),
    /// including the column belonging to `v[0]`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let len = y.len();
        let mut out = vec![0.0; len];
        for k in 0..len {
            let mut acc = 0.0;
            if k >= 1 {
                for q in k..len {
                    acc += self.weights[q - k] * y[q];
                }
            }
            for q in (k + 1)..len {
                acc -= self.weights[q - k - 1] * y[q];
            }
            out[k] = self.coef * acc;
        }
        out
    }

    /// History part of `(D v)_{n+1}` given `v[0..=n]`: everything except
    /// the term `coef * w_0 * v_{n+1}`.
    pub fn history(&self, v_prefix: &[f64]) -> f64 {
        let n = v_prefix.len() - 1;
        let mut acc = -self.weights[0] * v_prefix[n];
        for j in 0..n {
            acc += self.weights[n - j] * (v_prefix[j + 1] - v_prefix[j]);
        }
        self.coef * acc
    }
}

/// Riemann–Liouville integral of order `order > 0` by piecewise-linear
/// product integration; `output[0] = 0`.
pub fn rl_integral(v: &[f64], order: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::Domain(format!(
            "integration order must be positive, got {order}"
        )));
    }
    grid.check_series(v.len(), "rl_integral")?;
    let b = order;
    let scale = grid.dt().powf(b) / gamma(b + 2.0);
    let p = |m: f64| if m <= 0.0 { 0.0 } else { m.powf(b + 1.0) };
    // Interior weights depend only on the lag.
    let interior: Vec<f64> = (0..grid.len())
        .map(|m| {
            let m = m as f64;
            p(m + 1.0) - 2.0 * p(m) + p(m - 1.0)
        })
        .collect();
    let mut out = vec![0.0; v.len()];
    for n in 1..v.len() {
        let nf = n as f64;
        let mut acc = (p(nf - 1.0) - (nf - 1.0 - b) * nf.powf(b)) * v[0] + v[n];
        for j in 1..n {
            acc += interior[n - j] * v[j];
        }
        out[n] = scale * acc;
    }
    Ok(out)
}

/// L1 approximation of the Caputo derivative; requires `v[0] = 0`.
pub fn caputo_derivative(v: &[f64], alpha: FracOrder, grid: &TimeGrid) -> Result<Vec<f64>> {
    grid.check_series(v.len(), "caputo_derivative")?;
    if v[0].abs() > ENDPOINT_TOL * scale_of(v) {
        return Err(Error::Precondition(format!(
            "Caputo derivative needs v(0) = 0, got {}",
            v[0]
        )));
    }
    Ok(L1Scheme::new(alpha, grid).apply_unchecked(v))
}

/// Right-sided derivative `tau D (tau phi)`; requires `phi[end] = 0`.
///
/// Under the rectangle pairing `dt * sum_n a_n b_n` this is the exact
/// transpose of [`caputo_derivative`] on series with `v[0] = 0`.
pub fn adjoint_caputo(phi: &[f64], alpha: FracOrder, grid: &TimeGrid) -> Result<Vec<f64>> {
    grid.check_series(phi.len(), "adjoint_caputo")?;
    let last = phi[phi.len() - 1];
    if last.abs() > ENDPOINT_TOL * scale_of(phi) {
        return Err(Error::Precondition(format!(
            "adjoint Caputo derivative needs phi(T) = 0, got {last}"
        )));
    }
    let mut rev: Vec<f64> = phi.iter().rev().copied().collect();
    rev[0] = 0.0;
    let mut d = L1Scheme::new(alpha, grid).apply_unchecked(&rev);
    d.reverse();
    Ok(d)
}

/// Column-wise Caputo derivative of a space-time array.
pub fn caputo_columns(u: &SpaceTimeField, alpha: FracOrder, grid: &TimeGrid) -> Result<SpaceTimeField> {
    grid.check_series(u.n_times(), "caputo_columns")?;
    let scheme = L1Scheme::new(alpha, grid);
    let scale = u.max_abs().max(1.0);
    if u.row(0).iter().any(|x| x.abs() > ENDPOINT_TOL * scale) {
        return Err(Error::Precondition(
            "Caputo derivative needs u(0) = 0 in every column".into(),
        ));
    }
    u.map_columns(|c| Ok(scheme.apply_unchecked(c)))
}

/// Grünwald–Letnikov fractional differences, kept as an independent
/// cross-check of the L1 scheme.
pub mod oracle {
    use super::*;

    pub fn gl_derivative_oracle(v: &[f64], alpha: FracOrder, grid: &TimeGrid) -> Result<Vec<f64>> {
        grid.check_series(v.len(), "gl_derivative_oracle")?;
        if v[0].abs() > ENDPOINT_TOL * scale_of(v) {
            return Err(Error::Precondition(format!(
                "Grünwald–Letnikov oracle needs v(0) = 0, got {}",
                v[0]
            )));
        }
        let a = alpha.value();
        let mut c = vec![1.0; v.len()];
        for j in 1..v.len() {
            c[j] = c[j - 1] * (1.0 - (a + 1.0) / j as f64);
        }
        let s = grid.dt().powf(-a);
        Ok((0..v.len())
            .map(|n| s * (0..=n).map(|j| c[j] * v[n - j]).sum::<f64>())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// `int_0^T sum (D^alpha u)(u_t) dt`
    pub lhs: f64,
    /// `C_alpha(T) ||D^alpha u||^2` with `C_alpha(T) = T^alpha / (2 Gamma(1-alpha))`.
    pub rhs: f64,
    pub margin: f64,
    /// Same bound with `T^{alpha-1} / (2 Gamma(alpha))`.
    pub rhs_alt: f64,
    pub margin_alt: f64,
    /// `int_0^T sum u (J^alpha u) dt`, nonnegative in the continuum.
    pub nonneg: f64,
    /// Discrete `||u||^2_{L^2}` used to scale tolerances.
    pub norm_sq: f64,
}

impl CoercivityReport {
    pub fn nonneg_ok(&self, tol: f64) -> bool {
        self.nonneg >= -tol * self.norm_sq
    }
}

/// Evaluates the coercivity quantities for a per-DOF series with `u(0) = 0`.
pub fn coercivity_check(u: &SpaceTimeField, alpha: FracOrder, grid: &TimeGrid) -> Result<CoercivityReport> {
    let du = caputo_columns(u, alpha, grid)?;
    let a = alpha.value();
    let dt = grid.dt();
    let horizon = grid.horizon();
    let tw = grid.trapezoid_weights();
    let mut lhs = 0.0;
    let mut dnorm = 0.0;
    let mut nonneg = 0.0;
    let mut norm_sq = 0.0;
    for j in 0..u.n_cols() {
        let col = u.column(j);
        let dcol = du.column(j);
        let ji = rl_integral(&col, a, grid)?;
        for n in 1..grid.len() {
            lhs += dcol[n] * (col[n] - col[n - 1]);
            dnorm += dt * dcol[n] * dcol[n];
        }
        for n in 0..grid.len() {
            nonneg += tw[n] * col[n] * ji[n];
            norm_sq += tw[n] * col[n] * col[n];
        }
    }
    let c_printed = horizon.powf(a) / (2.0 * gamma(1.0 - a));
    let c_alt = horizon.powf(a - 1.0) / (2.0 * gamma(a));
    let rhs = c_printed * dnorm;
    let rhs_alt = c_alt * dnorm;
    log::debug!("coercivity: lhs {lhs:e}, printed-constant rhs {rhs:e}, alternative rhs {rhs_alt:e}");
    Ok(CoercivityReport {
        lhs,
        rhs,
        margin: lhs - rhs,
        rhs_alt,
        margin_alt: lhs - rhs_alt,
        nonneg,
        norm_sq,
    })
}
