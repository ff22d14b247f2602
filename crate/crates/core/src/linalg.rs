//! Tridiagonal matrices, which is all the 1D P1 layer produces.

use crate::error::{Error, Result};

/// `A[i][i-1] = lower[i]`, `A[i][i] = diag[i]`, `A[i][i+1] = upper[i]`.
/// `lower[0]` and `upper[n-1]` are unused and kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        m.diag.copy_from_slice(d);
        m
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[i]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// Adds `v` at `(i, j)`; `|i - j| <= 1` required.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag[i] += v;
        } else if j + 1 == i {
            self.lower[i] += v;
        } else if i + 1 == j {
            self.upper[i] += v;
        } else {
            panic!("({i}, {j}) outside tridiagonal band");
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim();
        let mut t = Self::zeros(n);
        t.diag.copy_from_slice(&self.diag);
        for i in 1..n {
            t.lower[i] = self.upper[i - 1];
            t.upper[i - 1] = self.lower[i];
        }
        t
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect();
        Self {
            lower: zip(&self.lower, &other.lower),
            diag: zip(&self.diag, &other.diag),
            upper: zip(&self.upper, &other.upper),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::zeros(self.dim()).add_scaled(s, self)
    }

    /// `self * diag(d)`
    pub fn mul_diag_right(&self, d: &[f64]) -> Self {
        let n = self.dim();
        let mut m = self.clone();
        for i in 0..n {
            m.diag[i] *= d[i];
            if i > 0 {
                m.lower[i] *= d[i - 1];
            }
            if i + 1 < n {
                m.upper[i] *= d[i + 1];
            }
        }
        m
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// `y += s * A x`
    pub fn apply_add(&self, s: f64, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] += s * acc;
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.apply(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Thomas algorithm without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Shape(format!(
                "tridiagonal solve: rhs has {} entries, matrix {n}",
                rhs.len()
            )));
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if piv.abs() < f64::MIN_POSITIVE || !piv.is_finite() {
            return Err(Error::Solver("zero pivot in row 0".into()));
        }
        c[0] = if n > 1 { self.upper[0] / piv } else { 0.0 };
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.lower[i] * c[i - 1];
            if piv.abs() < f64::MIN_POSITIVE || !piv.is_finite() {
                return Err(Error::Solver(format!("zero pivot in row {i}")));
            }
            if i + 1 < n {
                c[i] = self.upper[i] / piv;
            }
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Cholesky factorisation succeeds iff the (symmetric) matrix is SPD.
    pub fn is_spd(&self) -> bool {
        let n = self.dim();
        let mut prev_l: f64 = 0.0;
        for i in 0..n {
            let off = if i > 0 { self.lower[i] / prev_l } else { 0.0 };
            let d = self.diag[i] - off * off;
            if !(d > 0.0) {
                return false;
            }
            prev_l = d.sqrt();
        }
        true
    }
}
