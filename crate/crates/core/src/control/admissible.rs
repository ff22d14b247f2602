//! Admissible control sets and the surrogate norm for boundary controls.

use serde::{Deserialize, Serialize};

use crate::control::objective::volume_l2_sq;
use crate::error::{Error, Result};
use crate::field::{SpaceTimeField, TimeGrid};
use crate::forward::{BoundarySignal, Controls, Model};
use crate::fractional::{FracOrder, L1Scheme};

/// Components of the boundary-control norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XgNormParts {
    /// `max_t ||g(t)||`
    pub value_sup: f64,
    /// `||D^alpha g||_{L2}`
    pub caputo_l2: f64,
    /// `max_t ||g_t(t)||`
    pub rate_sup: f64,
    /// `||g_tt||_{L2}`
    pub accel_l2: f64,
}

impl XgNormParts {
    pub fn as_array(&self) -> [f64; 4] {
        [self.value_sup, self.caputo_l2, self.rate_sup, self.accel_l2]
    }

    pub fn weighted_max(&self, weights: &[f64; 4]) -> f64 {
        self.as_array()
            .iter()
            .zip(weights)
            .fold(0.0_f64, |m, (v, w)| m.max(v * w))
    }
}

fn sup_norm(f: &SpaceTimeField, boundary_weights: &[f64]) -> f64 {
    f.rows()
        .map(|r| {
            r.iter()
                .zip(boundary_weights)
                .map(|(v, w)| w * v * v)
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn l2_norm(f: &SpaceTimeField, boundary_weights: &[f64], grid: &TimeGrid) -> f64 {
    grid.trapezoid_weights()
        .iter()
        .zip(f.rows())
        .map(|(t, r)| t * r.iter().zip(boundary_weights).map(|(v, w)| w * v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

pub fn xg_norm_parts(
    g: &BoundarySignal,
    alpha: FracOrder,
    grid: &TimeGrid,
    boundary_weights: &[f64],
) -> Result<XgNormParts> {
    grid.check_series(g.values.n_times(), "boundary signal")?;
    if boundary_weights.len() != g.n_boundary() {
        return Err(Error::Shape("boundary weights do not match the signal".into()));
    }
    g.check_compatibility(crate::fractional::ENDPOINT_TOL)?;
    let l1 = L1Scheme::new(alpha, grid);
    let caputo = g.values.map_columns(|c| Ok(l1.apply_unchecked(c)))?;
    Ok(XgNormParts {
        value_sup: sup_norm(&g.values, boundary_weights),
        caputo_l2: l2_norm(&caputo, boundary_weights, grid),
        rate_sup: sup_norm(&g.rate_or_fd(grid), boundary_weights),
        accel_l2: l2_norm(&g.accel_or_fd(grid), boundary_weights, grid),
    })
}

/// Largest of the four norm components.
pub fn surrogate_xg_norm(
    g: &BoundarySignal,
    alpha: FracOrder,
    grid: &TimeGrid,
    boundary_weights: &[f64],
) -> Result<f64> {
    Ok(xg_norm_parts(g, alpha, grid, boundary_weights)?.weighted_max(&[1.0; 4]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleSpec {
    pub radius_g: f64,
    pub radius_f: f64,
    #[serde(default = "unit_weights")]
    pub norm_weights: [f64; 4],
}

fn unit_weights() -> [f64; 4] {
    [1.0; 4]
}

impl AdmissibleSpec {
    pub fn new(radius_g: f64, radius_f: f64) -> Result<Self> {
        let s = Self {
            radius_g,
            radius_f,
            norm_weights: unit_weights(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_g > 0.0 && self.radius_f > 0.0) {
            return Err(Error::Domain(format!(
                "admissible radii must be positive (g: {}, f: {})",
                self.radius_g, self.radius_f
            )));
        }
        if self.norm_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("norm weights must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn g_norm(&self, model: &Model, g: &BoundarySignal) -> Result<f64> {
        let parts = xg_norm_parts(g, model.params.alpha, &model.grid, &model.fem.boundary_weights)?;
        Ok(parts.weighted_max(&self.norm_weights))
    }

    pub fn f_norm(&self, model: &Model, f: &SpaceTimeField) -> f64 {
        volume_l2_sq(model, f).max(0.0).sqrt()
    }

    pub fn contains(&self, model: &Model, c: &Controls) -> Result<bool> {
        let tol = 1e-12;
        Ok(self.g_norm(model, &c.g)? <= self.radius_g * (1.0 + tol)
            && self.f_norm(model, &c.f) <= self.radius_f * (1.0 + tol))
    }
}

fn scale_signal(g: &BoundarySignal, s: f64) -> BoundarySignal {
    BoundarySignal {
        values: g.values.scaled(s),
        rate: g.rate.as_ref().map(|r| r.scaled(s)),
        accel: g.accel.as_ref().map(|a| a.scaled(s)),
    }
}

/// Radial retraction of each control onto its ball. Exact projection for
/// `f`; for `g` the ball is measured in the surrogate norm.
pub fn project_admissible(model: &Model, c: &Controls, adm: &AdmissibleSpec) -> Result<Controls> {
    adm.validate()?;
    let ng = adm.g_norm(model, &c.g)?;
    let nf = adm.f_norm(model, &c.f);
    let g = if ng > adm.radius_g {
        scale_signal(&c.g, adm.radius_g / ng)
    } else {
        c.g.clone()
    };
    let f = if nf > adm.radius_f {
        c.f.scaled(adm.radius_f / nf)
    } else {
        c.f.clone()
    };
    Ok(Controls { g, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Mesh1d;
    use crate::forward::{PhysicsParams, SolverOptions};
    use crate::special::gamma;

    fn model() -> Model {
        let mesh = Mesh1d::uniform(0.0, 1.0, 8).unwrap();
        let p = PhysicsParams {
            c: 1.0,
            b: 0.1,
            alpha: FracOrder::new(0.5).unwrap(),
            k: vec![0.0; 9],
            horizon: 1.0,
            b_max: 1.0,
            k_delta: 1.0,
        };
        Model::new(
            mesh,
            TimeGrid::with_horizon(1.0, 512).unwrap(),
            p,
            SolverOptions::default(),
        )
        .unwrap()
    }

    fn quadratic(m: &Model) -> BoundarySignal {
        BoundarySignal::new(SpaceTimeField::from_fn(
            &m.grid,
            2,
            |t, j| if j == 0 { t * t } else { 0.0 },
        ))
    }

    #[test]
    fn zero_and_homogeneity() {
        let m = model();
        let z = BoundarySignal::zeros(m.n_times(), 2);
        assert_eq!(
            surrogate_xg_norm(&z, m.params.alpha, &m.grid, &[1.0, 1.0]).unwrap(),
            0.0
        );
        let g = quadratic(&m);
        let n1 = surrogate_xg_norm(&g, m.params.alpha, &m.grid, &[1.0, 1.0]).unwrap();
        let g2 = BoundarySignal::new(g.values.scaled(2.0));
        let n2 = surrogate_xg_norm(&g2, m.params.alpha, &m.grid, &[1.0, 1.0]).unwrap();
        assert!((n2 - 2.0 * n1).abs() < 1e-12 * n1);
    }

    #[test]
    fn quadratic_components_by_hand() {
        let m = model();
        let p = xg_norm_parts(&quadratic(&m), m.params.alpha, &m.grid, &[1.0, 1.0]).unwrap();
        // g = t^2: sup g = 1, sup g_t = 2, ||g_tt||_{L2} = 2,
        // ||D^a g||^2 = int (2 t^{2-a} / Gamma(3-a))^2 = 4 / (Gamma(3-a)^2 (5 - 2a)).
        let a = 0.5;
        let caputo = (4.0 / (gamma(3.0 - a).powi(2) * (5.0 - 2.0 * a))).sqrt();
        assert!((p.value_sup - 1.0).abs() < 1e-12);
        assert!((p.rate_sup - 2.0).abs() < 1e-9);
        assert!((p.accel_l2 - 2.0).abs() < 1e-9);
        assert!((p.caputo_l2 - caputo).abs() < 1e-3);
        let all = surrogate_xg_norm(&quadratic(&m), m.params.alpha, &m.grid, &[1.0, 1.0]).unwrap();
        assert!((all - 2.0).abs() < 1e-9);
    }

    #[test]
    fn projection_contract() {
        let m = model();
        let adm = AdmissibleSpec::new(1.0, 0.5).unwrap();
        let mut c = m.zero_controls();
        c.g = quadratic(&m);
        c.f = SpaceTimeField::from_fn(&m.grid, 9, |_, _| 1.0);
        assert!((adm.f_norm(&m, &c.f) - 1.0).abs() < 1e-12);
        let p = project_admissible(&m, &c, &adm).unwrap();
        assert!((adm.f_norm(&m, &p.f) - 0.5).abs() < 1e-14);
        assert!((adm.g_norm(&m, &p.g).unwrap() - 1.0).abs() < 1e-12);
        assert!(adm.contains(&m, &p).unwrap());
        assert_eq!(p.g.values.row(0), &[0.0, 0.0]);
        let pp = project_admissible(&m, &p, &adm).unwrap();
        assert!(pp.f.sub(&p.f).max_abs() < 1e-14);
        assert!(pp.g.values.sub(&p.g.values).max_abs() < 1e-14);

        let big = AdmissibleSpec::new(10.0, 10.0).unwrap();
        assert_eq!(project_admissible(&m, &c, &big).unwrap(), c);
        assert!(AdmissibleSpec::new(0.0, 1.0).is_err());
    }
}
