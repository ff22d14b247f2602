//! Time grids and space-time nodal arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_n = n * dt`, `n = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid with `n_steps` steps covering `[0, horizon]`.
    pub fn with_horizon(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        Self::new(horizon / n_steps as f64, n_steps)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |n| self.t(n))
    }

    /// Composite trapezoid weights on the grid nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dt; self.len()];
        w[0] *= 0.5;
        w[self.n_steps] *= 0.5;
        w
    }

    pub fn check_series(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::Shape(format!(
                "{what}: series has {len} entries, grid has {} nodes",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Row-major space-time array: one row per time node, one column per
/// spatial degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    n_times: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(n_times: usize, n_cols: usize) -> Self {
        Self {
            n_times,
            n_cols,
            data: vec![0.0; n_times * n_cols],
        }
    }

    pub fn from_vec(n_times: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_times * n_cols {
            return Err(Error::Shape(format!(
                "expected {n_times}x{n_cols} = {} values, got {}",
                n_times * n_cols,
                data.len()
            )));
        }
        Ok(Self { n_times, n_cols, data })
    }

    /// Samples `f(t, col)` on every row and column.
    pub fn from_fn(grid: &TimeGrid, n_cols: usize, mut f: impl FnMut(f64, usize) -> f64) -> Self {
        let mut out = Self::zeros(grid.len(), n_cols);
        for n in 0..grid.len() {
            let t = grid.t(n);
            for (j, v) in out.row_mut(n).iter_mut().enumerate() {
                *v = f(t, j);
            }
        }
        out
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_cols..(n + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.n_cols..(n + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_times)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_times).map(|n| self.data[n * self.n_cols + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (n, v) in values.iter().enumerate() {
            self.data[n * self.n_cols + j] = *v;
        }
    }

    /// Applies `op` to every column independently.
    pub fn map_columns(&self, mut op: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let mut out = Self::zeros(self.n_times, self.n_cols);
        for j in 0..self.n_cols {
            let col = op(&self.column(j))?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_times == other.n_times && self.n_cols == other.n_cols
    }

    pub fn check_shape(&self, other: &Self, what: &str) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.n_times, self.n_cols, other.n_times, other.n_cols
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n_times: self.n_times,
            n_cols: self.n_cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert!(self.same_shape(x));
        for (y, xv) in self.data.iter_mut().zip(&x.data) {
            *y += a * xv;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Time-reversed copy: row `n` becomes row `n_times - 1 - n`.
    pub fn time_reversed(&self) -> Self {
        let mut out = Self::zeros(self.n_times, self.n_cols);
        for n in 0..self.n_times {
            out.row_mut(self.n_times - 1 - n).copy_from_slice(self.row(n));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(0.1, 0).is_err());
        let g = TimeGrid::with_horizon(2.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g.horizon() - 2.0).abs() < 1e-15);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reversal_is_involution() {
        let g = TimeGrid::new(0.25, 4).unwrap();
        let f = SpaceTimeField::from_fn(&g, 3, |t, j| t * (j as f64 + 1.0));
        assert_eq!(f.time_reversed().time_reversed(), f);
        assert_eq!(f.time_reversed().row(0), f.row(4));
    }
}
