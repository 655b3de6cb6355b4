//! Variational cross-check for the weighted `p`-Laplacian.
//!
//! Minimizes the discrete quotient
//! `Σ w_{i+1/2} |δu_i|^p h / Σ w_i |u_i|^p h` (trapezoid mass) by
//! Sobolev-preconditioned gradient descent, then extrapolates over two grids.
//! For the first nonzero Neumann value the denominator is replaced by
//! `min_c Σ w_i |u_i - c|^p h`.

use crate::error::{Error, Result};
use crate::geometry::WeightedInterval;
use crate::linalg::solve_tridiagonal;

use super::EigenBc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighOptions {
    /// Cells of the coarse grid; the fine grid has twice as many.
    pub intervals: usize,
    pub max_iter: usize,
    /// Stop once the preconditioned gradient norm relative to the quotient drops below this.
    pub tol: f64,
    /// Richardson extrapolation over the two grids.
    pub extrapolate: bool,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        Self { intervals: 400, max_iter: 20_000, tol: 1e-8, extrapolate: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighResult {
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    pub iterations: usize,
}

/// Rayleigh value of the weighted `p`-Laplacian with the given boundary condition.
pub fn rayleigh_p(space: &WeightedInterval, p: f64, bc: EigenBc) -> Result<f64> {
    Ok(rayleigh_p_with(space, p, bc, &RayleighOptions::default())?.value)
}

pub fn rayleigh_p_with(
    space: &WeightedInterval,
    p: f64,
    bc: EigenBc,
    opts: &RayleighOptions,
) -> Result<RayleighResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
    }
    let m = opts.intervals.max(8);
    let (coarse, i1) = Discrete::new(space, m, p, bc).minimize(opts)?;
    let (fine, i2) = Discrete::new(space, 2 * m, p, bc).minimize(opts)?;
    let value = if opts.extrapolate { (4.0 * fine - coarse) / 3.0 } else { fine };
    Ok(RayleighResult { value, coarse, fine, iterations: i1 + i2 })
}

struct Discrete {
    p: f64,
    h: f64,
    bc: EigenBc,
    /// Mass weights of the unknowns (trapezoid, includes `h`).
    mass: Vec<f64>,
    /// Edge weights `w_{i+1/2} h` over all `m` edges.
    edge: Vec<f64>,
    /// Index of the first unknown node; unknowns are contiguous.
    first: usize,
    unknowns: usize,
}

impl Discrete {
    fn new(space: &WeightedInterval, m: usize, p: f64, bc: EigenBc) -> Self {
        let h = space.length / m as f64;
        let w = |s: f64| (-space.density.value(s)).exp();
        let edge: Vec<f64> = (0..m).map(|i| w((i as f64 + 0.5) * h) * h).collect();
        let (first, last) = match bc {
            EigenBc::DirichletBoth => (1, m - 1),
            EigenBc::DirichletLeftNeumannRight => (1, m),
            EigenBc::NeumannBoth => (0, m),
        };
        let mass = (first..=last)
            .map(|i| {
                let end = i == 0 || i == m;
                w(i as f64 * h) * h * if end { 0.5 } else { 1.0 }
            })
            .collect();
        Self { p, h, bc, mass, edge, first, unknowns: last - first + 1 }
    }

    /// Full nodal vector including pinned zeros.
    fn full(&self, x: &[f64]) -> Vec<f64> {
        let m = self.edge.len();
        let mut u = vec![0.0; m + 1];
        u[self.first..self.first + self.unknowns].copy_from_slice(x);
        u
    }

    fn energy_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let u = self.full(x);
        let mut g = vec![0.0; u.len()];
        let mut e = 0.0;
        for (i, w) in self.edge.iter().enumerate() {
            let d = (u[i + 1] - u[i]) / self.h;
            let a = d.abs();
            e += w * a.powf(self.p);
            let flux = w * self.p * a.powf(self.p - 2.0) * d / self.h;
            let flux = if a == 0.0 { 0.0 } else { flux };
            g[i] -= flux;
            g[i + 1] += flux;
        }
        (e, g[self.first..self.first + self.unknowns].to_vec())
    }

    /// Shift `c` with `Σ w |x - c|^{p-2}(x - c) = 0`; zero unless Neumann.
    fn shift(&self, x: &[f64]) -> f64 {
        if self.bc != EigenBc::NeumannBoth {
            return 0.0;
        }
        let f = |c: f64| -> f64 {
            x.iter()
                .zip(&self.mass)
                .map(|(v, w)| {
                    let d = v - c;
                    w * d.abs().powf(self.p - 1.0) * d.signum()
                })
                .sum()
        };
        let (mut lo, mut hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn denom_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let c = self.shift(x);
        let mut d = 0.0;
        let g = x
            .iter()
            .zip(&self.mass)
            .map(|(v, w)| {
                let y = v - c;
                d += w * y.abs().powf(self.p);
                w * self.p * y.abs().powf(self.p - 1.0) * y.signum()
            })
            .collect();
        (d, g)
    }

    fn quotient(&self, x: &[f64]) -> f64 {
        self.energy_and_grad(x).0 / self.denom_and_grad(x).0
    }

    /// `K + M` restricted to the unknowns, `K` the weighted stiffness matrix
    /// with optional per-edge factors.
    fn preconditioner_weighted(&self, factor: Option<&[f64]>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.unknowns;
        let mut diag = self.mass.clone();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let h2 = self.h * self.h;
        for (i, w) in self.edge.iter().enumerate() {
            let k = w / h2 * factor.map_or(1.0, |f| f[i]);
            let (a, b) = (i as isize - self.first as isize, i as isize + 1 - self.first as isize);
            let inside = |j: isize| j >= 0 && (j as usize) < n;
            if inside(a) {
                diag[a as usize] += k;
            }
            if inside(b) {
                diag[b as usize] += k;
            }
            if inside(a) && inside(b) {
                upper[a as usize] -= k;
                lower[b as usize] -= k;
            }
        }
        (lower, diag, upper)
    }

    fn preconditioner(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        self.preconditioner_weighted(None)
    }

    /// Stiffness factors `p(p-1)|δ_i|^{p-2}` from the current iterate, with
    /// slopes floored at a fraction of the largest one.
    fn slope_factors(&self, x: &[f64]) -> Vec<f64> {
        let u = self.full(x);
        let d: Vec<f64> = u.windows(2).map(|w| ((w[1] - w[0]) / self.h).abs()).collect();
        let top = d.iter().fold(0.0_f64, |m, v| m.max(*v));
        let floor = 1e-3 * top.max(f64::MIN_POSITIVE);
        d.iter().map(|v| self.p * (self.p - 1.0) * v.max(floor).powf(self.p - 2.0)).collect()
    }

    /// Linear (`p = 2`) eigenvector by inverse iteration, the starting guess.
    fn linear_start(&self) -> Vec<f64> {
        let n = self.unknowns;
        let (lower, mut diag, upper) = self.preconditioner();
        let neumann = self.bc == EigenBc::NeumannBoth;
        if !neumann {
            for (d, w) in diag.iter_mut().zip(&self.mass) {
                *d -= w;
            }
        }
        let total_mass: f64 = self.mass.iter().sum();
        let mut x: Vec<f64> = (0..n)
            .map(|i| {
                let s = (i + self.first) as f64 / self.edge.len() as f64;
                if neumann {
                    -(std::f64::consts::PI * s).cos()
                } else {
                    (std::f64::consts::PI * s).sin() + 0.1
                }
            })
            .collect();
        for _ in 0..300 {
            let rhs: Vec<f64> = x.iter().zip(&self.mass).map(|(v, w)| v * w).collect();
            x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
            if neumann {
                let mean = x.iter().zip(&self.mass).map(|(v, w)| v * w).sum::<f64>() / total_mass;
                x.iter_mut().for_each(|v| *v -= mean);
            }
            let norm = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }

    fn minimize(&self, opts: &RayleighOptions) -> Result<(f64, usize)> {
        let mut x = self.linear_start();
        let mut tau: f64 = 1.0;
        let mut q = self.quotient(&x);
        let mut last_norm = f64::INFINITY;
        for it in 0..opts.max_iter {
            let (e, ge) = self.energy_and_grad(&x);
            let (d, gd) = self.denom_and_grad(&x);
            q = e / d;
            let grad: Vec<f64> = ge.iter().zip(&gd).map(|(a, b)| (a - q * b) / d).collect();
            let factors = self.slope_factors(&x);
            let (lower, diag, upper) = self.preconditioner_weighted(Some(&factors));
            let dir = solve_tridiagonal(&lower, &diag, &upper, &grad);
            let slope: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            last_norm = slope.max(0.0).sqrt() / (q * scale.max(f64::MIN_POSITIVE));
            if last_norm < opts.tol {
                return Ok((q, it));
            }
            // Backtracking line search along -dir.
            tau = (2.0 * tau).min(1e6);
            loop {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a - tau * b).collect();
                let qt = self.quotient(&trial);
                if qt <= q - 1e-4 * tau * slope || tau < 1e-14 {
                    let norm = trial.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    x = trial.into_iter().map(|v| v / norm).collect();
                    break;
                }
                tau *= 0.5;
            }
            if tau < 1e-14 {
                // No further decrease is representable.
                return Ok((self.quotient(&x), it));
            }
        }
        Err(Error::NonConvergence { iterations: opts.max_iter, value: q, residual: last_norm })
    }
}
