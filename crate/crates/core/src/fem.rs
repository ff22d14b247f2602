//! P1 finite elements on an interval.
//!
//! The boundary of an interval is its two end points, so the boundary
//! "mass" matrix is point evaluation with unit weights and boundary norms
//! are weighted Euclidean norms of the end values.

use crate::error::{Error, Result};
use crate::linalg::Tridiag;

/// Nodal values over a mesh.
pub type SpatialField = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1d {
    nodes: Vec<f64>,
}

impl Mesh1d {
    /// Mesh through the given node coordinates, which must be sorted.
    /// Zero-length elements are accepted here and rejected by [`assemble`].
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Domain("mesh needs at least two nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("mesh coordinates must be finite".into()));
        }
        if nodes.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("mesh nodes must be sorted".into()));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(left: f64, right: f64, n_elements: usize) -> Result<Self> {
        if !(right > left) || n_elements == 0 {
            return Err(Error::Domain(format!(
                "invalid interval ({left}, {right}) with {n_elements} elements"
            )));
        }
        let h = (right - left) / n_elements as f64;
        let mut nodes: Vec<f64> = (0..=n_elements).map(|i| left + i as f64 * h).collect();
        nodes[n_elements] = right;
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Largest element length.
    pub fn h(&self) -> f64 {
        self.nodes.windows(2).fold(0.0, |m, w| m.max(w[1] - w[0]))
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        vec![0, self.nodes.len() - 1]
    }

    /// Outward unit normal at each boundary node.
    pub fn boundary_normals(&self) -> Vec<f64> {
        vec![-1.0, 1.0]
    }

    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> SpatialField {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub mass: Tridiag,
    pub stiffness: Tridiag,
    pub boundary_nodes: Vec<usize>,
    /// Boundary mass weights; point evaluation in 1D.
    pub boundary_weights: Vec<f64>,
}

impl FemMatrices {
    pub fn n_dofs(&self) -> usize {
        self.mass.dim()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    /// `B g`: boundary values spread onto the nodal load vector.
    pub fn boundary_load(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        self.add_boundary_load(1.0, g, &mut out);
        out
    }

    pub fn add_boundary_load(&self, s: f64, g: &[f64], out: &mut [f64]) {
        for ((&node, &w), &gv) in self.boundary_nodes.iter().zip(&self.boundary_weights).zip(g) {
            out[node] += s * w * gv;
        }
    }

    /// `B^T y`: nodal vector restricted to the boundary.
    pub fn boundary_trace_weighted(&self, y: &[f64]) -> Vec<f64> {
        self.boundary_nodes
            .iter()
            .zip(&self.boundary_weights)
            .map(|(&node, &w)| w * y[node])
            .collect()
    }

    pub fn trace(&self, y: &[f64]) -> Vec<f64> {
        self.boundary_nodes.iter().map(|&node| y[node]).collect()
    }

    /// `g^T B_Gamma g`
    pub fn boundary_norm_sq(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.boundary_weights).map(|(v, w)| w * v * v).sum()
    }

    pub fn boundary_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.boundary_weights)
            .map(|((x, y), w)| w * x * y)
            .sum()
    }

    /// Discrete H^1 norm `sqrt(x^T (K + M) x)`.
    pub fn h1_norm(&self, x: &[f64]) -> f64 {
        (self.stiffness.quad_form(x) + self.mass.quad_form(x)).max(0.0).sqrt()
    }

    pub fn l2_norm(&self, x: &[f64]) -> f64 {
        self.mass.quad_form(x).max(0.0).sqrt()
    }
}

fn element_lengths(mesh: &Mesh1d) -> Result<Vec<f64>> {
    mesh.nodes
        .windows(2)
        .enumerate()
        .map(|(e, w)| {
            let h = w[1] - w[0];
            if h > 0.0 {
                Ok(h)
            } else {
                Err(Error::Assembly(format!(
                    "element {e} between x = {} and x = {} has zero length",
                    w[0], w[1]
                )))
            }
        })
        .collect()
}

/// Mass and stiffness matrices plus the boundary trace.
pub fn assemble(mesh: &Mesh1d) -> Result<FemMatrices> {
    let hs = element_lengths(mesh)?;
    let n = mesh.n_nodes();
    let mut mass = Tridiag::zeros(n);
    let mut stiffness = Tridiag::zeros(n);
    for (e, h) in hs.iter().enumerate() {
        let (i, j) = (e, e + 1);
        mass.add(i, i, h / 3.0);
        mass.add(j, j, h / 3.0);
        mass.add(i, j, h / 6.0);
        mass.add(j, i, h / 6.0);
        stiffness.add(i, i, 1.0 / h);
        stiffness.add(j, j, 1.0 / h);
        stiffness.add(i, j, -1.0 / h);
        stiffness.add(j, i, -1.0 / h);
    }
    let boundary_nodes = mesh.boundary_nodes();
    let boundary_weights = vec![1.0; boundary_nodes.len()];
    Ok(FemMatrices {
        mass,
        stiffness,
        boundary_nodes,
        boundary_weights,
    })
}

/// Mass matrix with the P1 interpolant of `w` as weight, integrated exactly.
pub fn assemble_weighted(mesh: &Mesh1d, w: &[f64]) -> Result<Tridiag> {
    let hs = element_lengths(mesh)?;
    let mut m = Tridiag::zeros(mesh.n_nodes());
    assemble_weighted_into(&hs, w, &mut m);
    Ok(m)
}

/// Same as [`assemble_weighted`] with precomputed element lengths; used in
/// the time loops where the mesh is already validated.
pub(crate) fn assemble_weighted_into(hs: &[f64], w: &[f64], m: &mut Tridiag) {
    m.lower.fill(0.0);
    m.diag.fill(0.0);
    m.upper.fill(0.0);
    for (e, h) in hs.iter().enumerate() {
        let (i, j) = (e, e + 1);
        let (wi, wj) = (w[i], w[j]);
        m.diag[i] += h * (3.0 * wi + wj) / 12.0;
        m.diag[j] += h * (wi + 3.0 * wj) / 12.0;
        let off = h * (wi + wj) / 12.0;
        m.upper[i] += off;
        m.lower[j] += off;
    }
}

pub(crate) fn lengths(mesh: &Mesh1d) -> Result<Vec<f64>> {
    element_lengths(mesh)
}

/// Discrete Neumann lift: solves `(K + M) G = B g`, the weak form of
/// `-G'' + G = 0` with normal derivative `g`.
pub fn neumann_extension(mats: &FemMatrices, g_slice: &[f64]) -> Result<SpatialField> {
    if g_slice.len() != mats.n_boundary() {
        return Err(Error::Shape(format!(
            "boundary data has {} values, mesh has {} boundary nodes",
            g_slice.len(),
            mats.n_boundary()
        )));
    }
    let op = mats.stiffness.add_scaled(1.0, &mats.mass);
    op.solve(&mats.boundary_load(g_slice))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::rng;
    use rand::Rng;

    #[test]
    fn two_element_mesh_properties() {
        let mesh = Mesh1d::uniform(0.0, 1.0, 2).unwrap();
        let m = assemble(&mesh).unwrap();
        let ones = vec![1.0; 3];
        for v in m.stiffness.apply(&ones) {
            assert!(v.abs() < 1e-15);
        }
        assert!((m.mass.quad_form(&ones) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_mesh_mass_is_spd() {
        let mut r = rng(3);
        for _ in 0..20 {
            let n = r.random_range(2..30);
            let mut xs: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
            xs.push(0.0);
            xs.push(1.0);
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let mesh = Mesh1d::new(xs).unwrap();
            let m = assemble(&mesh).unwrap();
            assert!(m.mass.is_spd());
            assert!(m.stiffness.add_scaled(1.0, &m.mass).is_spd());
        }
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let mesh = Mesh1d::new(vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert!(matches!(assemble(&mesh), Err(Error::Assembly(_))));
    }

    #[test]
    fn weighted_mass_reduces_and_scales() {
        let mesh = Mesh1d::new(vec![0.0, 0.1, 0.35, 0.6, 1.0]).unwrap();
        let m = assemble(&mesh).unwrap();
        let w1 = assemble_weighted(&mesh, &[1.0; 5]).unwrap();
        assert_eq!(w1, m.mass);
        let w2 = assemble_weighted(&mesh, &[2.0; 5]).unwrap();
        let twice = m.mass.scaled(2.0);
        for i in 0..5 {
            assert!((w2.diag[i] - twice.diag[i]).abs() < 1e-15);
        }
        let mut r = rng(9);
        let w: Vec<f64> = (0..5).map(|_| r.random_range(0.05..3.0)).collect();
        assert!(assemble_weighted(&mesh, &w).unwrap().is_spd());
    }

    #[test]
    fn weighted_mass_integrates_linear_weight_exactly() {
        // 1^T W_w 1 = int w for P1 w.
        let mesh = Mesh1d::uniform(0.0, 2.0, 7).unwrap();
        let w = mesh.interpolate(|x| 1.0 + 3.0 * x);
        let m = assemble_weighted(&mesh, &w).unwrap();
        let total = m.quad_form(&[1.0; 8]);
        assert!((total - 8.0).abs() < 1e-13);
    }

    #[test]
    fn neumann_extension_zero_and_linear() {
        let mesh = Mesh1d::uniform(0.0, 1.0, 16).unwrap();
        let m = assemble(&mesh).unwrap();
        let z = neumann_extension(&m, &[0.0, 0.0]).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let a = neumann_extension(&m, &[0.3, -1.0]).unwrap();
        let b = neumann_extension(&m, &[2.0, 0.5]).unwrap();
        let ab = neumann_extension(&m, &[2.3, -0.5]).unwrap();
        for i in 0..a.len() {
            assert!((a[i] + b[i] - ab[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn neumann_extension_matches_cosh() {
        // -G'' + G = 0, G'(0) = 0, G'(1) = 1  =>  G = cosh(x) / sinh(1).
        let exact = |x: f64| x.cosh() / 1f64.sinh();
        let mut errs = Vec::new();
        for n in [8, 16, 32, 64] {
            let mesh = Mesh1d::uniform(0.0, 1.0, n).unwrap();
            let m = assemble(&mesh).unwrap();
            let g = neumann_extension(&m, &[0.0, 1.0]).unwrap();
            let e: Vec<f64> = g.iter().zip(mesh.nodes()).map(|(v, &x)| v - exact(x)).collect();
            errs.push(m.h1_norm(&e));
            if n == 64 {
                assert!((g[n] - 1.313_035_285_499_331).abs() < 1e-4);
            }
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9);
        }
    }
}
