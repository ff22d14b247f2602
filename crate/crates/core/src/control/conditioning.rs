//! Smoothing and initial-value correction of raw boundary signals so that
//! `g(0) = g_t(0) = 0` holds exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpaceTimeField, TimeGrid};
use crate::forward::BoundarySignal;

/// `int_{-1}^{1} exp(-1 / (1 - x^2)) dx`
const MOLLIFIER_MASS: f64 = 0.443_993_816_168_079_437_823;

const GAUSS_X: [f64; 6] = [
    -0.932_469_514_203_152_1,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152_1,
];
const GAUSS_W: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_0,
    0.467_913_934_572_691_0,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// Composite 6-point Gauss–Legendre rule on `panels` equal panels.
fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in GAUSS_X.iter().zip(&GAUSS_W) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * acc
}

fn transition(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth plateau: 1 on `[-r, r]`, 0 outside `(-R, R)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bump {
    inner: f64,
    outer: f64,
    mass: f64,
}

const BUMP_PANELS: usize = 64;

impl Bump {
    pub(crate) fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::Domain(format!(
                "bump radii need 0 < r < R, got r = {inner}, R = {outer}"
            )));
        }
        let mut b = Self {
            inner,
            outer,
            mass: 1.0,
        };
        b.mass = b.lower_part(b.midpoint()) + b.upper_part(b.midpoint());
        Ok(b)
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.inner + self.outer)
    }

    /// `int_r^t f1`, for `t` up to the midpoint.
    fn lower_part(&self, t: f64) -> f64 {
        integrate(self.inner, t, BUMP_PANELS, |s| self.core(s))
    }

    /// `int_t^R f1`, for `t` from the midpoint on.
    fn upper_part(&self, t: f64) -> f64 {
        integrate(t, self.outer, BUMP_PANELS, |s| self.core(s))
    }

    fn core(&self, t: f64) -> f64 {
        transition(t - self.inner) * transition(self.outer - t)
    }

    fn core_slope(&self, t: f64) -> f64 {
        if t <= self.inner || t >= self.outer {
            return 0.0;
        }
        let (a, b) = (t - self.inner, self.outer - t);
        self.core(t) * (1.0 / (a * a) - 1.0 / (b * b))
    }

    pub(crate) fn value(&self, tau: f64) -> f64 {
        let t = tau.abs();
        if t <= self.inner {
            1.0
        } else if t >= self.outer {
            0.0
        } else if t <= self.midpoint() {
            1.0 - self.lower_part(t) / self.mass
        } else {
            self.upper_part(t) / self.mass
        }
    }

    pub(crate) fn slope(&self, tau: f64) -> f64 {
        -tau.signum() * self.core(tau.abs()) / self.mass
    }

    pub(crate) fn curvature(&self, tau: f64) -> f64 {
        -self.core_slope(tau.abs()) / self.mass
    }
}

/// Smooth cutoff equal to 1 for `|tau| <= r` and 0 for `|tau| >= R`.
pub fn bump_function(tau: f64, r: f64, big_r: f64) -> Result<f64> {
    Ok(Bump::new(r, big_r)?.value(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningParams {
    /// Mollifier half-width.
    pub eps: f64,
    /// Correction rate; derived from `eps` and the initial slope when absent.
    #[serde(default)]
    pub rate: Option<f64>,
    pub r: f64,
    pub big_r: f64,
}

impl ConditioningParams {
    /// `eps = 4 dt`, bump radii `1/2` and `1`.
    pub fn for_grid(grid: &TimeGrid) -> Self {
        Self {
            eps: 4.0 * grid.dt(),
            rate: None,
            r: 0.5,
            big_r: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!(
                "mollifier width must be positive, got {}",
                self.eps
            )));
        }
        if let Some(rate) = self.rate {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Domain(format!("correction rate must be positive, got {rate}")));
            }
        }
        Bump::new(self.r, self.big_r).map(|_| ())
    }
}

fn kernel(x: f64) -> [f64; 3] {
    if x.abs() >= 1.0 {
        return [0.0; 3];
    }
    let q = 1.0 - x * x;
    let e = (-1.0 / q).exp() / MOLLIFIER_MASS;
    let d1 = -2.0 * x / (q * q);
    let d2 = 4.0 * x * x / q.powi(4) - (2.0 + 6.0 * x * x) / q.powi(3);
    [e, e * d1, e * d2]
}

/// Piecewise-linear interpolant of `v`, extended by its end values.
fn sample(v: &[f64], dt: f64, s: f64) -> f64 {
    let last = v.len() - 1;
    if s <= 0.0 {
        return v[0];
    }
    let pos = s / dt;
    if pos >= last as f64 {
        return v[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    v[i] + frac * (v[i + 1] - v[i])
}

/// Mollified value and first two derivatives at `t`.
fn mollify(v: &[f64], dt: f64, eps: f64, t: f64) -> [f64; 3] {
    // Panels fine enough to resolve both the kernel and the data kinks.
    let panels = ((2.0 * eps / dt).ceil() as usize * 2).max(32);
    let mut out = [0.0; 3];
    let h = 2.0 * eps / panels as f64;
    for p in 0..panels {
        let mid = -eps + (p as f64 + 0.5) * h;
        for (x, w) in GAUSS_X.iter().zip(&GAUSS_W) {
            let y = mid + 0.5 * h * x;
            let k = kernel(y / eps);
            let g = sample(v, dt, t - y) * w * 0.5 * h;
            out[0] += k[0] * g / eps;
            out[1] += k[1] * g / (eps * eps);
            out[2] += k[2] * g / (eps * eps * eps);
        }
    }
    out
}

/// Mollifies each boundary column in time and subtracts
/// `g(0) + t rho(R t) g_t(0)`. The result carries exact first and second
/// derivatives and satisfies `g(0) = g_t(0) = 0` by construction.
pub fn condition_boundary_data(
    raw: &BoundarySignal,
    params: &ConditioningParams,
    grid: &TimeGrid,
) -> Result<BoundarySignal> {
    params.validate()?;
    grid.check_series(raw.values.n_times(), "boundary signal")?;
    if !raw.values.all_finite() {
        return Err(Error::Domain("raw boundary signal contains non-finite values".into()));
    }
    let nt = grid.len();
    let nb = raw.n_boundary();
    let dt = grid.dt();
    let mut smooth = [
        SpaceTimeField::zeros(nt, nb),
        SpaceTimeField::zeros(nt, nb),
        SpaceTimeField::zeros(nt, nb),
    ];
    for j in 0..nb {
        let col = raw.values.column(j);
        for n in 0..nt {
            let m = mollify(&col, dt, params.eps, grid.t(n));
            for (d, s) in m.iter().zip(smooth.iter_mut()) {
                s.row_mut(n)[j] = *d;
            }
        }
    }
    let g0 = smooth[0].row(0).to_vec();
    let slope0 = smooth[1].row(0).to_vec();
    let rate = params
        .rate
        .unwrap_or_else(|| (1.0 + slope0.iter().map(|s| s * s).sum::<f64>()) / params.eps);
    let bump = Bump::new(params.r, params.big_r)?;

    let [mut values, mut rates, mut accels] = smooth;
    for n in 0..nt {
        let t = grid.t(n);
        let s = rate * t;
        let rho = bump.value(s);
        let chi1 = rho + s * bump.slope(s);
        let chi2 = 2.0 * rate * bump.slope(s) + rate * rate * t * bump.curvature(s);
        for j in 0..nb {
            values.row_mut(n)[j] -= g0[j] + t * rho * slope0[j];
            rates.row_mut(n)[j] -= chi1 * slope0[j];
            accels.row_mut(n)[j] -= chi2 * slope0[j];
        }
    }
    // Exact zeros rather than cancellation residue.
    values.row_mut(0).fill(0.0);
    rates.row_mut(0).fill(0.0);
    Ok(BoundarySignal::with_derivatives(values, rates, accels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollifier_is_normalized() {
        let m = integrate(-1.0, 1.0, 200, |x| kernel(x)[0]);
        assert!((m - 1.0).abs() < 1e-12);
        let slope_mass = integrate(-1.0, 1.0, 200, |x| kernel(x)[1]);
        assert!(slope_mass.abs() < 1e-12);
    }

    #[test]
    fn kernel_derivatives_match_differences() {
        for x in [-0.7, -0.2, 0.1, 0.55, 0.9] {
            let h = 1e-5;
            let fd1 = (kernel(x + h)[0] - kernel(x - h)[0]) / (2.0 * h);
            let fd2 = (kernel(x + h)[1] - kernel(x - h)[1]) / (2.0 * h);
            let k = kernel(x);
            assert!((fd1 - k[1]).abs() < 1e-6 * (1.0 + k[1].abs()), "{x}");
            assert!((fd2 - k[2]).abs() < 1e-5 * (1.0 + k[2].abs()), "{x}");
        }
    }

    #[test]
    fn bump_plateau_and_support() {
        let b = Bump::new(0.5, 1.0).unwrap();
        assert!((b.mass - 4.849_332_076_679_41e-5).abs() < 1e-15);
        assert_eq!(b.value(0.3), 1.0);
        assert_eq!(b.value(-0.5), 1.0);
        assert_eq!(b.value(1.0), 0.0);
        assert_eq!(b.value(-2.0), 0.0);
        assert!((b.value(0.75) - 0.5).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 1..200 {
            let v = b.value(0.5 + 0.5 * i as f64 / 200.0);
            assert!((0.0..=1.0).contains(&v) && v <= prev);
            if i > 10 && i < 190 {
                assert!(v > 0.0 && v < 1.0);
            }
            prev = v;
        }
        assert!(bump_function(0.1, 1.0, 1.0).is_err());
        assert!(bump_function(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump::new(0.5, 1.0).unwrap();
        for t in [0.6, 0.7, 0.8, 0.9] {
            let h = 1e-6;
            let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            assert!((fd - b.slope(t)).abs() < 1e-6 * (1.0 + fd.abs()));
            let fd2 = (b.slope(t + h) - b.slope(t - h)) / (2.0 * h);
            assert!((fd2 - b.curvature(t)).abs() < 1e-4 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn constant_signal_is_zeroed() {
        let grid = TimeGrid::with_horizon(1.0, 64).unwrap();
        let raw = BoundarySignal::new(SpaceTimeField::from_fn(&grid, 2, |_, _| 3.0));
        let out = condition_boundary_data(&raw, &ConditioningParams::for_grid(&grid), &grid).unwrap();
        assert!(out.values.max_abs() < 1e-12);
        assert!(out.rate.as_ref().unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ramp_loses_its_initial_slope() {
        let grid = TimeGrid::with_horizon(1.0, 256).unwrap();
        let raw = BoundarySignal::new(SpaceTimeField::from_fn(&grid, 1, |t, _| t));
        let mut params = ConditioningParams::for_grid(&grid);
        let mut prev = f64::INFINITY;
        for rate in [10.0, 20.0, 40.0, 80.0] {
            params.rate = Some(rate);
            let out = condition_boundary_data(&raw, &params, &grid).unwrap();
            assert_eq!(out.values.row(0)[0], 0.0);
            assert_eq!(out.rate.as_ref().unwrap().row(0)[0], 0.0);
            // Beyond R/rate only the mollifier shift remains.
            let cut = params.big_r / rate;
            let err = grid
                .nodes()
                .enumerate()
                .filter(|(_, t)| *t > cut && *t < 1.0 - params.eps)
                .fold(0.0_f64, |m, (n, t)| m.max((out.values.row(n)[0] - t).abs()));
            assert!(err < params.eps);
            let l2: f64 = grid
                .nodes()
                .enumerate()
                .map(|(n, t)| (out.values.row(n)[0] - t).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(l2 <= prev);
            prev = l2;
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        let grid = TimeGrid::with_horizon(1.0, 512).unwrap();
        let raw = BoundarySignal::new(SpaceTimeField::from_fn(&grid, 2, |t, j| {
            (3.0 * t + j as f64).sin() + 0.5
        }));
        let out = condition_boundary_data(&raw, &ConditioningParams::for_grid(&grid), &grid).unwrap();
        let fd = crate::forward::fd_first(&out.values, grid.dt());
        let rate = out.rate.as_ref().unwrap();
        let scale = rate.max_abs();
        for n in 4..grid.len() - 4 {
            for j in 0..2 {
                assert!((fd.row(n)[j] - rate.row(n)[j]).abs() < 1e-2 * scale);
            }
        }
    }
}
