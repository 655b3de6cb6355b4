//! Interpolants: a C² cubic spline for sampled densities and a monotone
//! piecewise-cubic Hermite interpolant for profile inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Jet;
use crate::linalg::solve_tridiagonal;

/// Clamped cubic spline through uniformly spaced samples on `[x0, x0 + n h]`.
///
/// End slopes are estimated with fourth-order one-sided differences, so the
/// interpolant is C² with O(h⁴) value error for smooth data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineSamples", into = "SplineSamples")]
pub struct CubicSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

/// Serialized form of a spline: the raw samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineSamples {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl TryFrom<SplineSamples> for CubicSpline {
    type Error = Error;

    fn try_from(s: SplineSamples) -> Result<Self> {
        CubicSpline::new(s.x0, s.h, s.values)
    }
}

impl From<CubicSpline> for SplineSamples {
    fn from(c: CubicSpline) -> Self {
        SplineSamples { x0: c.x0, h: c.h, values: c.y }
    }
}

impl CubicSpline {
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 5 {
            return Err(Error::InvalidParameter("spline needs at least 5 samples".into()));
        }
        if !(h > 0.0) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("spline samples must be finite with h > 0".into()));
        }
        // Fourth-order one-sided first derivatives at both ends.
        let d0 = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h);
        let k = n - 1;
        let dn = (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] + 3.0 * y[k - 4]) / (12.0 * h);

        let mut lower = vec![h / 6.0; n];
        let mut diag = vec![2.0 * h / 3.0; n];
        let mut upper = vec![h / 6.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = h / 3.0;
        diag[k] = h / 3.0;
        lower[0] = 0.0;
        upper[k] = 0.0;
        rhs[0] = (y[1] - y[0]) / h - d0;
        rhs[k] = dn - (y[k] - y[k - 1]) / h;
        for i in 1..k {
            rhs[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
        }
        let m = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        Ok(Self { x0, h, y, m })
    }

    pub fn from_fn(x0: f64, x1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (x1 - x0) / n as f64;
        let y = (0..=n).map(|i| f(x0 + i as f64 * h)).collect();
        Self::new(x0, h, y)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.h * (self.y.len() - 1) as f64)
    }

    /// Value and first two derivatives; the end cubics extrapolate.
    pub fn jet(&self, x: f64) -> Jet {
        let n = self.y.len() - 1;
        let u = (x - self.x0) / self.h;
        let i = (u.floor().max(0.0) as usize).min(n - 1);
        let h = self.h;
        let a = (self.x0 + (i + 1) as f64 * h - x) / h;
        let b = 1.0 - a;
        let (yi, yj, mi, mj) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let v = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (yj - yi) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let d2 = a * mi + b * mj;
        Jet { v, d1, d2 }
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` must be strictly increasing; `y` monotone.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidParameter("monotone interpolant needs >= 2 points".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("abscissae must be strictly increasing".into()));
        }
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                // Weighted harmonic mean keeps the interpolant monotone.
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, xv: f64) -> f64 {
        let n = self.x.len();
        let j = self.x.partition_point(|&v| v <= xv).clamp(1, n - 1);
        let i = j - 1;
        let h = self.x[j] - self.x[i];
        let t = (xv - self.x[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[j] + h11 * h * self.d[j]
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_smooth_function_and_derivatives() {
        let sp = CubicSpline::from_fn(0.0, 2.0, 200, |x| (1.3 * x).sin()).unwrap();
        for &x in &[0.0, 0.37, 1.0, 1.99, 2.0] {
            let j = sp.jet(x);
            assert!((j.v - (1.3 * x).sin()).abs() < 1e-9);
            assert!((j.d1 - 1.3 * (1.3 * x).cos()).abs() < 1e-6);
            assert!((j.d2 + 1.69 * (1.3 * x).sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn monotone_cubic_stays_monotone_and_interpolates() {
        let x: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.1, 0.1, 2.0, 2.1];
        let mc = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((mc.eval(*a) - b).abs() < 1e-15);
        }
        let mut prev = mc.eval(0.0);
        for k in 1..=400 {
            let v = mc.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}
