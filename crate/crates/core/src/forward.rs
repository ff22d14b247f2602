//! Forward solvers.
//!
//! The linearized equation
//!
//! ```text
//! a u_tt - c^2 u_xx - b (D^alpha u)_xx + l u_t + n u = F,   du/dn = g,
//! u(0) = 0,  u_t(0) = u1
//! ```
//!
//! is discretized with P1 elements and Newmark average acceleration
//! (beta = 1/4, gamma = 1/2). The newest L1 increment of the fractional
//! term is implicit, the remaining history explicit. The Westervelt
//! equation `((1 - 2kp) p_t)_t - c^2 p_xx - b (D^alpha p)_xx = f` is solved
//! by Picard iteration on whole trajectories, freezing `a = 1 - 2kp`,
//! `l = -2k p_t` at the previous iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, assemble, FemMatrices, Mesh1d, SpatialField};
use crate::field::{SpaceTimeField, TimeGrid};
use crate::fractional::{FracOrder, L1Scheme};
use crate::linalg::Tridiag;

pub(crate) const NEWMARK_BETA: f64 = 0.25;
pub(crate) const NEWMARK_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    /// Wave speed, `c > 0`.
    pub c: f64,
    /// Attenuation coefficient, `0 <= b <= b_max`.
    pub b: f64,
    pub alpha: FracOrder,
    /// Nonlinearity coefficient `k(x)` at the mesh nodes.
    pub k: SpatialField,
    pub horizon: f64,
    pub b_max: f64,
    /// Bound on the discrete `W^{1,inf}` norm of `k`.
    pub k_delta: f64,
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Domain(format!("wave speed must be positive, got {}", self.c)));
        }
        if !(self.b >= 0.0 && self.b <= self.b_max) {
            return Err(Error::Domain(format!(
                "attenuation {} outside [0, {}]",
                self.b, self.b_max
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.k.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("nonlinearity coefficient must be finite".into()));
        }
        Ok(())
    }

    /// `max |k| + max |k'|` on the mesh.
    pub fn k_norm(&self, mesh: &Mesh1d) -> f64 {
        let sup = self.k.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let grad = self
            .k
            .windows(2)
            .zip(mesh.nodes().windows(2))
            .fold(0.0_f64, |m, (kv, x)| m.max(((kv[1] - kv[0]) / (x[1] - x[0])).abs()));
        sup + grad
    }

    pub fn check_smallness(&self, mesh: &Mesh1d) -> Result<()> {
        let norm = self.k_norm(mesh);
        if norm > self.k_delta {
            return Err(Error::SmallnessViolation {
                norm,
                delta: self.k_delta,
            });
        }
        Ok(())
    }
}

/// `b c^{-2} (L/c)^{-alpha}`: the attenuation after scaling length by `L`
/// and time by `L/c`.
pub fn scaled_attenuation(b: f64, c: f64, length: f64, alpha: f64) -> f64 {
    b / (c * c) * (length / c).powf(-alpha)
}

/// Rescales to `x = L x~`, `t = (L/c) t~`, `p = p_ref p~`.
pub fn nondimensionalize(params: &PhysicsParams, length: f64, p_ref: f64) -> Result<PhysicsParams> {
    if !(length > 0.0) || !(p_ref > 0.0) {
        return Err(Error::Domain(format!(
            "scales must be positive (L = {length}, p_ref = {p_ref})"
        )));
    }
    let c = params.c;
    let a = params.alpha.value();
    Ok(PhysicsParams {
        c: 1.0,
        b: scaled_attenuation(params.b, c, length, a),
        alpha: params.alpha,
        k: params.k.iter().map(|k| k * p_ref).collect(),
        horizon: params.horizon * c / length,
        b_max: scaled_attenuation(params.b_max, c, length, a),
        k_delta: params.k_delta * p_ref,
    })
}

/// Inverse of [`nondimensionalize`] for a medium with wave speed `c`.
pub fn redimensionalize(scaled: &PhysicsParams, c: f64, length: f64, p_ref: f64) -> Result<PhysicsParams> {
    if !(length > 0.0) || !(p_ref > 0.0) || !(c > 0.0) {
        return Err(Error::Domain("scales must be positive".into()));
    }
    let a = scaled.alpha.value();
    let back = |bt: f64| bt * c * c * (length / c).powf(a);
    Ok(PhysicsParams {
        c,
        b: back(scaled.b),
        alpha: scaled.alpha,
        k: scaled.k.iter().map(|k| k / p_ref).collect(),
        horizon: scaled.horizon * length / c,
        b_max: back(scaled.b_max),
        k_delta: scaled.k_delta / p_ref,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub a_lower: f64,
    pub a_upper: f64,
    pub fp_max_iter: usize,
    pub fp_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            a_lower: 0.1,
            a_upper: 4.0,
            fp_max_iter: 50,
            fp_tol: 1e-10,
        }
    }
}

/// Everything a solve needs that does not change between solves.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: Mesh1d,
    pub fem: FemMatrices,
    pub grid: TimeGrid,
    pub params: PhysicsParams,
    pub opts: SolverOptions,
    pub(crate) l1: L1Scheme,
    pub(crate) lengths: Vec<f64>,
}

impl Model {
    pub fn new(mesh: Mesh1d, grid: TimeGrid, params: PhysicsParams, opts: SolverOptions) -> Result<Self> {
        params.validate()?;
        if params.k.len() != mesh.n_nodes() {
            return Err(Error::Shape(format!(
                "k has {} values, mesh has {} nodes",
                params.k.len(),
                mesh.n_nodes()
            )));
        }
        if (grid.horizon() - params.horizon).abs() > 1e-9 * params.horizon {
            return Err(Error::Shape(format!(
                "time grid covers {} but horizon is {}",
                grid.horizon(),
                params.horizon
            )));
        }
        if !(0.0 < opts.a_lower && opts.a_lower < 1.0 && opts.a_upper > 1.0) {
            return Err(Error::Domain(format!(
                "non-degeneracy bounds [{}, {}] must bracket 1",
                opts.a_lower, opts.a_upper
            )));
        }
        let fem = assemble(&mesh)?;
        let lengths = fem::lengths(&mesh)?;
        let l1 = L1Scheme::new(params.alpha, &grid);
        Ok(Self {
            mesh,
            fem,
            grid,
            params,
            opts,
            l1,
            lengths,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    pub fn l1(&self) -> &L1Scheme {
        &self.l1
    }

    pub(crate) fn weighted_into(&self, w: &[f64], out: &mut Tridiag) {
        fem::assemble_weighted_into(&self.lengths, w, out);
    }

    pub fn weighted(&self, w: &[f64]) -> Tridiag {
        let mut m = Tridiag::zeros(self.n_dofs());
        self.weighted_into(w, &mut m);
        m
    }

    pub fn zero_field(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(self.n_times(), self.n_dofs())
    }

    pub fn zero_controls(&self) -> Controls {
        Controls {
            g: BoundarySignal::zeros(self.n_times(), self.fem.n_boundary()),
            f: self.zero_field(),
        }
    }

    /// `max_n sqrt(e_n^T M e_n)`
    pub fn linf_l2(&self, e: &SpaceTimeField) -> f64 {
        e.rows().fold(0.0_f64, |m, r| m.max(self.fem.l2_norm(r)))
    }
}

/// Neumann data, one column per boundary node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySignal {
    pub values: SpaceTimeField,
    /// Exact first time derivative when known; finite differences otherwise.
    pub rate: Option<SpaceTimeField>,
    /// Exact second time derivative when known.
    pub accel: Option<SpaceTimeField>,
}

impl BoundarySignal {
    pub fn new(values: SpaceTimeField) -> Self {
        Self {
            values,
            rate: None,
            accel: None,
        }
    }

    pub fn zeros(n_times: usize, n_boundary: usize) -> Self {
        Self::new(SpaceTimeField::zeros(n_times, n_boundary))
    }

    pub fn with_derivatives(values: SpaceTimeField, rate: SpaceTimeField, accel: SpaceTimeField) -> Self {
        Self {
            values,
            rate: Some(rate),
            accel: Some(accel),
        }
    }

    pub fn n_boundary(&self) -> usize {
        self.values.n_cols()
    }

    /// Checks `g(0) = 0` and, when an exact derivative is attached,
    /// `g_t(0) = 0`, both to `tol` relative to the signal scale.
    pub fn check_compatibility(&self, tol: f64) -> Result<()> {
        let scale = self.values.max_abs().max(1.0);
        if let Some(v) = self.values.row(0).iter().find(|v| v.abs() > tol * scale) {
            return Err(Error::Precondition(format!(
                "boundary data must vanish at t = 0 (found {v})"
            )));
        }
        if let Some(rate) = &self.rate {
            let scale = rate.max_abs().max(1.0);
            if let Some(v) = rate.row(0).iter().find(|v| v.abs() > tol * scale) {
                return Err(Error::Precondition(format!(
                    "boundary data rate must vanish at t = 0 (found {v})"
                )));
            }
        }
        Ok(())
    }

    /// First time derivative: the attached one, or second-order finite
    /// differences.
    pub fn rate_or_fd(&self, grid: &TimeGrid) -> SpaceTimeField {
        match &self.rate {
            Some(r) => r.clone(),
            None => fd_first(&self.values, grid.dt()),
        }
    }

    pub fn accel_or_fd(&self, grid: &TimeGrid) -> SpaceTimeField {
        match &self.accel {
            Some(a) => a.clone(),
            None => fd_second(&self.values, grid.dt()),
        }
    }

    /// Drops attached derivatives; used after arithmetic on the values.
    pub fn values_only(&self) -> Self {
        Self::new(self.values.clone())
    }
}

/// Central differences inside, second-order one-sided at the ends.
pub(crate) fn fd_first(v: &SpaceTimeField, dt: f64) -> SpaceTimeField {
    let nt = v.n_times();
    let mut out = SpaceTimeField::zeros(nt, v.n_cols());
    if nt < 3 {
        for n in 0..nt {
            let (a, b) = if n + 1 < nt { (n, n + 1) } else { (n - 1, n) };
            for j in 0..v.n_cols() {
                out.row_mut(n)[j] = (v.row(b)[j] - v.row(a)[j]) / dt;
            }
        }
        return out;
    }
    for j in 0..v.n_cols() {
        let c = v.column(j);
        let mut d = vec![0.0; nt];
        d[0] = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * dt);
        d[nt - 1] = (3.0 * c[nt - 1] - 4.0 * c[nt - 2] + c[nt - 3]) / (2.0 * dt);
        for n in 1..nt - 1 {
            d[n] = (c[n + 1] - c[n - 1]) / (2.0 * dt);
        }
        out.set_column(j, &d);
    }
    out
}

pub(crate) fn fd_second(v: &SpaceTimeField, dt: f64) -> SpaceTimeField {
    let nt = v.n_times();
    let mut out = SpaceTimeField::zeros(nt, v.n_cols());
    if nt < 4 {
        return out;
    }
    let dt2 = dt * dt;
    for j in 0..v.n_cols() {
        let c = v.column(j);
        let mut d = vec![0.0; nt];
        d[0] = (2.0 * c[0] - 5.0 * c[1] + 4.0 * c[2] - c[3]) / dt2;
        d[nt - 1] = (2.0 * c[nt - 1] - 5.0 * c[nt - 2] + 4.0 * c[nt - 3] - c[nt - 4]) / dt2;
        for n in 1..nt - 1 {
            d[n] = (c[n + 1] - 2.0 * c[n] + c[n - 1]) / dt2;
        }
        out.set_column(j, &d);
    }
    out
}

/// Boundary signal `g` and distributed source `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controls {
    pub g: BoundarySignal,
    pub f: SpaceTimeField,
}

#[derive(Debug, Clone)]
pub struct LinearizedCoefficients {
    pub a: SpaceTimeField,
    pub l: SpaceTimeField,
    pub n: SpaceTimeField,
    pub source: SpaceTimeField,
    pub g: BoundarySignal,
    pub u1: SpatialField,
}

impl LinearizedCoefficients {
    /// `a = 1`, `l = n = 0`, zero data.
    pub fn unit(model: &Model) -> Self {
        let nt = model.n_times();
        let nx = model.n_dofs();
        let mut a = SpaceTimeField::zeros(nt, nx);
        a.as_mut_slice().fill(1.0);
        Self {
            a,
            l: SpaceTimeField::zeros(nt, nx),
            n: SpaceTimeField::zeros(nt, nx),
            source: SpaceTimeField::zeros(nt, nx),
            g: BoundarySignal::zeros(nt, model.fem.n_boundary()),
            u1: vec![0.0; nx],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// Relative change `||p^{m+1} - p^m|| / ||p^{m+1}||` per iteration.
    pub changes: Vec<f64>,
    /// Absolute change per iteration.
    pub abs_changes: Vec<f64>,
    pub max_2kp: f64,
}

impl FixedPointReport {
    /// Ratios of successive absolute changes.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.abs_changes
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub u: SpaceTimeField,
    pub u_t: SpaceTimeField,
    pub u_tt: SpaceTimeField,
    /// `D^alpha u` at every node, as used by the time stepper.
    pub frac: SpaceTimeField,
    /// `E_n = 1/2 v^T W_a v + c^2/2 u^T K u`.
    pub energy: Vec<f64>,
    pub fixed_point: Option<FixedPointReport>,
}

fn check_nondegenerate(model: &Model, a: &[f64], n: usize, kp_proxy: f64) -> Result<()> {
    let (lo, hi) = (model.opts.a_lower, model.opts.a_upper);
    if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(**v >= lo && **v <= hi)) {
        return Err(Error::NonDegeneracyViolation {
            x: model.mesh.nodes()[i],
            t: model.grid.t(n),
            value: *v,
            lower: lo,
            upper: hi,
            max_2kp: kp_proxy,
        });
    }
    Ok(())
}

/// L1 derivative of each boundary column.
pub(crate) fn boundary_caputo(model: &Model, g: &BoundarySignal) -> SpaceTimeField {
    let mut out = SpaceTimeField::zeros(g.values.n_times(), g.n_boundary());
    for j in 0..g.n_boundary() {
        out.set_column(j, &model.l1.apply_unchecked(&g.values.column(j)));
    }
    out
}

/// Load vectors `M F^n + B (c^2 g^n + b D^alpha g^n)`.
pub(crate) fn source_vectors(model: &Model, source: &SpaceTimeField, g: &BoundarySignal) -> SpaceTimeField {
    let nt = model.n_times();
    let c2 = model.params.c * model.params.c;
    let b = model.params.b;
    let dg = boundary_caputo(model, g);
    let mut out = SpaceTimeField::zeros(nt, model.n_dofs());
    for n in 0..nt {
        let row = out.row_mut(n);
        model.fem.mass.apply_into(source.row(n), row);
        let bd: Vec<f64> = g
            .values
            .row(n)
            .iter()
            .zip(dg.row(n))
            .map(|(gv, d)| c2 * gv + b * d)
            .collect();
        model.fem.add_boundary_load(1.0, &bd, row);
    }
    out
}

fn check_shapes(model: &Model, coeffs: &LinearizedCoefficients) -> Result<()> {
    let z = model.zero_field();
    coeffs.a.check_shape(&z, "coefficient a")?;
    coeffs.l.check_shape(&z, "coefficient l")?;
    coeffs.n.check_shape(&z, "coefficient n")?;
    coeffs.source.check_shape(&z, "source")?;
    if coeffs.g.values.n_times() != model.n_times() || coeffs.g.n_boundary() != model.fem.n_boundary() {
        return Err(Error::Shape("boundary signal does not match the grid".into()));
    }
    if coeffs.u1.len() != model.n_dofs() {
        return Err(Error::Shape("initial velocity does not match the mesh".into()));
    }
    Ok(())
}

/// Accumulates `sum_{j<n} w_{n-j} (u^{j+1} - u^j) - w_0 u^n` per DOF, scaled
/// by the L1 coefficient.
pub(crate) fn l1_history(l1: &L1Scheme, incs: &SpaceTimeField, u_n: &[f64], n: usize, out: &mut [f64]) {
    let w = l1.weights();
    for (o, un) in out.iter_mut().zip(u_n) {
        *o = -w[0] * un;
    }
    for j in 0..n {
        let wj = w[n - j];
        for (o, d) in out.iter_mut().zip(incs.row(j)) {
            *o += wj * d;
        }
    }
    let c = l1.coef();
    out.iter_mut().for_each(|o| *o *= c);
}

/// Newmark/L1 solve of the linearized equation.
pub fn solve_linearized(model: &Model, coeffs: &LinearizedCoefficients) -> Result<StateTrajectory> {
    check_shapes(model, coeffs)?;
    coeffs.g.check_compatibility(crate::fractional::ENDPOINT_TOL)?;
    let loads = source_vectors(model, &coeffs.source, &coeffs.g);
    let max_dev = coeffs.a.as_slice().iter().fold(0.0_f64, |m, v| m.max((1.0 - v).abs()));
    time_march(model, coeffs, &loads, max_dev)
}

fn time_march(
    model: &Model,
    coeffs: &LinearizedCoefficients,
    loads: &SpaceTimeField,
    kp_proxy: f64,
) -> Result<StateTrajectory> {
    let nt = model.n_times();
    let nx = model.n_dofs();
    let dt = model.grid.dt();
    let c2 = model.params.c * model.params.c;
    let b = model.params.b;
    let beta = NEWMARK_BETA * dt * dt;
    let gam = NEWMARK_GAMMA * dt;
    let k_mat = &model.fem.stiffness;
    let stiff = c2 + b * model.l1.diagonal();

    let mut u = SpaceTimeField::zeros(nt, nx);
    let mut v = SpaceTimeField::zeros(nt, nx);
    let mut acc = SpaceTimeField::zeros(nt, nx);
    let mut frac = SpaceTimeField::zeros(nt, nx);
    let mut incs = SpaceTimeField::zeros(nt, nx);
    let mut energy = vec![0.0; nt];

    let mut wa = Tridiag::zeros(nx);
    let mut wl = Tridiag::zeros(nx);
    let mut wn = Tridiag::zeros(nx);

    // t = 0: u = 0, u_t = u1, acceleration from the equation.
    check_nondegenerate(model, coeffs.a.row(0), 0, kp_proxy)?;
    model.weighted_into(coeffs.a.row(0), &mut wa);
    model.weighted_into(coeffs.l.row(0), &mut wl);
    v.row_mut(0).copy_from_slice(&coeffs.u1);
    let mut rhs = loads.row(0).to_vec();
    wl.apply_add(-1.0, &coeffs.u1, &mut rhs);
    let a0 = wa.solve(&rhs)?;
    acc.row_mut(0).copy_from_slice(&a0);
    energy[0] = 0.5 * wa.quad_form(v.row(0));

    let mut u_star = vec![0.0; nx];
    let mut v_star = vec![0.0; nx];
    let mut hist = vec![0.0; nx];
    for n in 0..nt - 1 {
        let m = n + 1;
        check_nondegenerate(model, coeffs.a.row(m), m, kp_proxy)?;
        model.weighted_into(coeffs.a.row(m), &mut wa);
        model.weighted_into(coeffs.l.row(m), &mut wl);
        model.weighted_into(coeffs.n.row(m), &mut wn);
        for i in 0..nx {
            u_star[i] = u.row(n)[i] + dt * v.row(n)[i] + beta * acc.row(n)[i];
            v_star[i] = v.row(n)[i] + gam * acc.row(n)[i];
        }
        l1_history(&model.l1, &incs, u.row(n), n, &mut hist);

        // S = W_a + gam W_l + beta (W_n + (c^2 + b c0 w0) K)
        let stiff_part = wn.add_scaled(stiff, k_mat);
        let s = wa.add_scaled(gam, &wl).add_scaled(beta, &stiff_part);
        let mut r = loads.row(m).to_vec();
        wl.apply_add(-1.0, &v_star, &mut r);
        stiff_part.apply_add(-1.0, &u_star, &mut r);
        k_mat.apply_add(-b, &hist, &mut r);
        let a_new = s.solve(&r)?;

        for i in 0..nx {
            let un = u_star[i] + beta * a_new[i];
            u.row_mut(m)[i] = un;
            v.row_mut(m)[i] = v_star[i] + gam * a_new[i];
            frac.row_mut(m)[i] = model.l1.diagonal() * un + hist[i];
            incs.row_mut(n)[i] = un - u.row(n)[i];
        }
        acc.row_mut(m).copy_from_slice(&a_new);
        if u.row(m).iter().chain(v.row(m)).any(|x| !x.is_finite()) {
            return Err(Error::NumericalBlowup { step: m });
        }
        energy[m] = 0.5 * wa.quad_form(v.row(m)) + 0.5 * c2 * k_mat.quad_form(u.row(m));
    }
    Ok(StateTrajectory {
        u,
        u_t: v,
        u_tt: acc,
        frac,
        energy,
        fixed_point: None,
    })
}

fn check_state_nondegenerate(model: &Model, p: &SpaceTimeField) -> Result<f64> {
    let k = &model.params.k;
    let mut max_2kp = 0.0_f64;
    let mut worst: Option<(usize, usize, f64)> = None;
    for n in 0..p.n_times() {
        for (i, (pv, kv)) in p.row(n).iter().zip(k).enumerate() {
            let two_kp = 2.0 * kv * pv;
            max_2kp = max_2kp.max(two_kp.abs());
            let a = 1.0 - two_kp;
            if !(a >= model.opts.a_lower && a <= model.opts.a_upper) && worst.is_none() {
                worst = Some((n, i, a));
            }
        }
    }
    if let Some((n, i, a)) = worst {
        return Err(Error::NonDegeneracyViolation {
            x: model.mesh.nodes()[i],
            t: model.grid.t(n),
            value: a,
            lower: model.opts.a_lower,
            upper: model.opts.a_upper,
            max_2kp,
        });
    }
    Ok(max_2kp)
}

fn check_controls(model: &Model, controls: &Controls) -> Result<()> {
    controls.f.check_shape(&model.zero_field(), "distributed control")?;
    if controls.g.values.n_times() != model.n_times() || controls.g.n_boundary() != model.fem.n_boundary() {
        return Err(Error::Shape("boundary control does not match the grid".into()));
    }
    Ok(())
}

/// Westervelt solve by global Picard iteration over trajectories.
pub fn solve_westervelt(model: &Model, controls: &Controls) -> Result<StateTrajectory> {
    check_controls(model, controls)?;
    model.params.check_smallness(&model.mesh)?;
    controls.g.check_compatibility(crate::fractional::ENDPOINT_TOL)?;
    let loads = source_vectors(model, &controls.f, &controls.g);
    let k = &model.params.k;
    let nt = model.n_times();
    let nx = model.n_dofs();
    let mut coeffs = LinearizedCoefficients::unit(model);
    let mut prev_u = SpaceTimeField::zeros(nt, nx);
    let mut report = FixedPointReport {
        iterations: 0,
        changes: Vec::new(),
        abs_changes: Vec::new(),
        max_2kp: 0.0,
    };
    let mut last_change = f64::INFINITY;
    for it in 1..=model.opts.fp_max_iter {
        let state = time_march(model, &coeffs, &loads, report.max_2kp)?;
        let diff = model.linf_l2(&state.u.sub(&prev_u));
        let size = model.linf_l2(&state.u);
        let rel = if size > 0.0 { diff / size } else { 0.0 };
        report.iterations = it;
        report.changes.push(rel);
        report.abs_changes.push(diff);
        report.max_2kp = check_state_nondegenerate(model, &state.u)?;
        if diff <= model.opts.fp_tol * size {
            log::debug!("Picard converged in {it} iterations (change {rel:e})");
            return Ok(StateTrajectory {
                fixed_point: Some(report),
                ..state
            });
        }
        last_change = rel;
        for n in 0..nt {
            for i in 0..nx {
                coeffs.a.row_mut(n)[i] = 1.0 - 2.0 * k[i] * state.u.row(n)[i];
                coeffs.l.row_mut(n)[i] = -2.0 * k[i] * state.u_t.row(n)[i];
            }
        }
        prev_u = state.u;
    }
    Err(Error::FixedPointDivergence {
        iterations: model.opts.fp_max_iter,
        last_change,
    })
}

/// Relative residual of the discrete Westervelt equations with coefficients
/// taken from `state` itself.
pub fn westervelt_residual(model: &Model, controls: &Controls, state: &StateTrajectory) -> f64 {
    let loads = source_vectors(model, &controls.f, &controls.g);
    let k = &model.params.k;
    let c2 = model.params.c * model.params.c;
    let b = model.params.b;
    let nx = model.n_dofs();
    let mut num = 0.0_f64;
    let mut den = 0.0_f64;
    for n in 0..model.n_times() {
        let a: Vec<f64> = (0..nx).map(|i| 1.0 - 2.0 * k[i] * state.u.row(n)[i]).collect();
        let l: Vec<f64> = (0..nx).map(|i| -2.0 * k[i] * state.u_t.row(n)[i]).collect();
        let mut r = model.weighted(&a).apply(state.u_tt.row(n));
        model.weighted(&l).apply_add(1.0, state.u_t.row(n), &mut r);
        model.fem.stiffness.apply_add(c2, state.u.row(n), &mut r);
        model.fem.stiffness.apply_add(b, state.frac.row(n), &mut r);
        for (ri, si) in r.iter().zip(loads.row(n)) {
            num = num.max((ri - si).abs());
            den = den.max(si.abs()).max(ri.abs());
        }
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
