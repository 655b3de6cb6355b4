//! First eigenvalues of one-dimensional quasilinear problems by shooting.
//!
//! Power-law operators `α = a g^k`, `β = b g^k` are integrated in the
//! momentum variables `(φ, Φ)` with `Φ = |φ'|^k φ'`:
//!
//! ```text
//! φ' = sgn(Φ) |Φ|^{1/(k+1)}
//! Φ' = ((k+1)/a) (-b d(s) Φ - λ |φ|^{γ-1} φ)
//! ```
//!
//! which removes the degeneracy of `α` at `φ' = 0`. The spectral parameter
//! is found by bisection on a shooting criterion that is monotone in `λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{first_zero_of_c, BigN, CurvatureParams, WeightedInterval};
use crate::ode::{integrate, integrate_with_event, OdeOptions, Stop};
use crate::operators::{Drift, IsotropicOperator, PowerLaw};

pub mod rayleigh;

pub use rayleigh::{rayleigh_p, RayleighOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenBc {
    DirichletBoth,
    DirichletLeftNeumannRight,
    NeumannBoth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub eigenfunction: Vec<f64>,
    /// `φ'` at the grid nodes.
    pub derivative: Vec<f64>,
    /// Max nodal residual of the momentum equation.
    pub residual: f64,
    pub iterations: usize,
    /// Final bisection bracket: `lo` undershoots, `hi` overshoots.
    pub bracket: (f64, f64),
    pub bc: EigenBc,
    pub gamma: f64,
}

impl EigenResult {
    /// `residual ≤ 1e-6 (1 + λ)`.
    pub fn residual_ok(&self) -> bool {
        self.residual <= 1e-6 * (1.0 + self.lambda)
    }

    /// Sign changes of the eigenfunction strictly inside the interval.
    pub fn interior_sign_changes(&self) -> usize {
        let n = self.eigenfunction.len();
        let v: Vec<f64> = self.eigenfunction[1..n - 1].iter().copied().filter(|x| *x != 0.0).collect();
        v.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Relative and absolute tolerance of the RK45 integrator.
    pub ode_tol: f64,
    /// Bisection stops once `hi - lo ≤ rel_tol · hi`.
    pub rel_tol: f64,
    /// Number of cells of the uniform output grid.
    pub samples: usize,
    /// Initial slope (mixed/Dirichlet) or initial height (Neumann) scale.
    pub normalization: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { ode_tol: 1e-10, rel_tol: 1e-10, samples: 2000, normalization: 1.0 }
    }
}

/// Largest geometric expansion of the initial bracket.
const MAX_EXPANSION: f64 = 1048576.0;

struct Shooter<'a> {
    pl: PowerLaw,
    gamma: f64,
    drift: &'a Drift,
    opts: ShootingOptions,
}

impl Shooter<'_> {
    fn new<'a>(op: &IsotropicOperator, gamma: f64, drift: &'a Drift, opts: ShootingOptions) -> Result<Shooter<'a>> {
        let pl = op.power_law.ok_or_else(|| {
            Error::DegenerateOperator(format!("{}: shooting needs power-law coefficients a g^k, b g^k", op.name))
        })?;
        if pl.a <= 0.0 || pl.b <= 0.0 || op.is_degenerate() {
            return Err(Error::DegenerateOperator(format!("{}: α or β vanishes identically", op.name)));
        }
        let declared = op.gamma.unwrap_or(pl.k + 1.0);
        if (gamma - declared).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "{} is homogeneous of degree {declared}, not {gamma}",
                op.name
            )));
        }
        Ok(Shooter { pl, gamma, drift, opts })
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions::with_tol(self.opts.ode_tol)
    }

    fn slope(&self, phi_m: f64) -> f64 {
        let e = 1.0 / (self.pl.k + 1.0);
        phi_m.signum() * phi_m.abs().powf(e)
    }

    fn momentum(&self, c: f64) -> f64 {
        c.signum() * c.abs().powf(self.pl.k + 1.0)
    }

    /// Right-hand side for a drift possibly reflected about `length`.
    fn rhs(&self, lambda: f64, drift: &Drift) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        let PowerLaw { a, b, k } = self.pl;
        let gamma = self.gamma;
        let drift = drift.clone();
        move |s, y| {
            let d = drift.at(s).unwrap_or(f64::NAN);
            let e = 1.0 / (k + 1.0);
            let dphi = y[1].signum() * y[1].abs().powf(e);
            let force = lambda * y[0].signum() * y[0].abs().powf(gamma);
            [dphi, (k + 1.0) / a * (-b * d * y[1] - force)]
        }
    }

    /// Linear-case guess `a (π/ℓ)^{k+2}` for an effective length `ℓ`.
    fn guess(&self, ell: f64) -> f64 {
        self.pl.a * (std::f64::consts::PI / ell).powf(self.pl.k + 2.0)
    }

    /// Bisection on a predicate that is false below and true above the eigenvalue.
    fn bisect(&self, guess: f64, too_large: impl Fn(f64) -> Result<bool>) -> Result<(f64, f64, usize)> {
        let mut lo = 0.0;
        let mut hi = 2.0 * guess;
        let mut iterations = 0;
        while !too_large(hi)? {
            lo = hi;
            hi *= 2.0;
            iterations += 1;
            if hi > MAX_EXPANSION * guess {
                return Err(Error::BracketingFailure { lo, hi });
            }
        }
        if too_large(lo)? {
            return Err(Error::BracketingFailure { lo, hi });
        }
        while hi - lo > self.opts.rel_tol * hi {
            let mid = 0.5 * (lo + hi);
            if too_large(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
            if iterations > 400 {
                break;
            }
        }
        Ok((lo, hi, iterations))
    }

    /// Samples a trajectory on the uniform grid `a + j (b - a)/n`.
    fn sample(&self, lambda: f64, drift: &Drift, y0: [f64; 2], a: f64, b: f64, n: usize) -> Result<Vec<[f64; 2]>> {
        let rhs = self.rhs(lambda, drift);
        let opts = self.ode();
        let h = (b - a) / n as f64;
        let mut out = Vec::with_capacity(n + 1);
        let mut y = y0;
        out.push(y);
        for j in 0..n {
            let t0 = a + j as f64 * h;
            let t1 = if j + 1 == n { b } else { a + (j + 1) as f64 * h };
            y = integrate(&rhs, t0, y, t1, &opts)?;
            out.push(y);
        }
        Ok(out)
    }

    /// Mixed problem on `[0, len]`: `φ(0) = 0`, `φ'(len) = 0`.
    fn mixed(&self, len: f64) -> Result<EigenResult> {
        let c = self.opts.normalization;
        let y0 = [0.0, self.momentum(c)];
        let opts = self.ode();
        let too_large = |lambda: f64| -> Result<bool> {
            let stop = integrate_with_event(self.rhs(lambda, self.drift), 0.0, y0, len, &opts, |_, y| y[1])?;
            Ok(matches!(stop, Stop::Event { .. }))
        };
        let (lo, hi, iterations) = self.bisect(self.guess(2.0 * len), too_large)?;
        let lambda = 0.5 * (lo + hi);
        let n = self.opts.samples;
        let states = self.sample(lo, self.drift, y0, 0.0, len, n)?;
        let grid = uniform(0.0, len, n);
        self.finish(lambda, grid, states, iterations, (lo, hi), EigenBc::DirichletLeftNeumannRight)
    }

    /// Dirichlet at both ends of `[0, len]`, matched at the midpoint.
    fn dirichlet_both(&self, len: f64) -> Result<EigenResult> {
        let c = self.opts.normalization;
        let y0 = [0.0, self.momentum(c)];
        let mid = 0.5 * len;
        let reflected = self.drift.reflected(len);
        let opts = self.ode();
        let k1 = self.pl.k + 1.0;
        let half = |lambda: f64, drift: &Drift| -> Result<Option<[f64; 2]>> {
            let stop = integrate_with_event(self.rhs(lambda, drift), 0.0, y0, mid, &opts, |_, y| y[0])?;
            Ok(match stop {
                Stop::Reached(y) if y[0] > 0.0 => Some(y),
                _ => None,
            })
        };
        let gap = |lambda: f64| -> Result<Option<f64>> {
            let (Some(l), Some(r)) = (half(lambda, self.drift)?, half(lambda, &reflected)?) else {
                return Ok(None);
            };
            Ok(Some(l[1] / l[0].powf(k1) + r[1] / r[0].powf(k1)))
        };
        let too_large = |lambda: f64| -> Result<bool> { Ok(gap(lambda)?.is_none_or(|g| g < 0.0)) };
        let (lo, hi, iterations) = self.bisect(self.guess(len), too_large)?;
        let lambda = 0.5 * (lo + hi);
        let final_gap =
            gap(lo)?.ok_or_else(|| Error::MatchingFailure("left or right branch left the positive cone".into()))?;
        let n = even(self.opts.samples);
        let left = self.sample(lo, self.drift, y0, 0.0, mid, n / 2)?;
        let right = self.sample(lo, &reflected, y0, 0.0, mid, n / 2)?;
        let (pl, pr) = (left[n / 2][0], right[n / 2][0]);
        if !(pl > 0.0 && pr > 0.0) {
            return Err(Error::MatchingFailure(format!("non-positive matching values {pl}, {pr}")));
        }
        let scale = pl / pr;
        let scale_m = scale.powf(k1);
        let rel_gap = final_gap.abs() / (left[n / 2][1].abs() / pl.powf(k1) + 1.0);
        if rel_gap > 1e-4 {
            return Err(Error::MatchingFailure(format!("matching gap {final_gap} does not close")));
        }
        let mut states = left;
        for j in (0..n / 2).rev() {
            let r = right[j];
            states.push([scale * r[0], -scale_m * r[1]]);
        }
        let grid = uniform(0.0, len, n);
        self.finish(lambda, grid, states, iterations, (lo, hi), EigenBc::DirichletBoth)
    }

    /// Neumann at both ends: `φ(0) = -1`, `φ'(0) = 0`, bisect on `φ'(len) = 0`.
    fn neumann_both(&self, len: f64) -> Result<EigenResult> {
        let y0 = [-self.opts.normalization, 0.0];
        let opts = self.ode();
        let too_large = |lambda: f64| -> Result<bool> {
            let stop = integrate_with_event(self.rhs(lambda, self.drift), 0.0, y0, len, &opts, |_, y| y[1])?;
            Ok(matches!(stop, Stop::Event { .. }))
        };
        let (lo, hi, iterations) = self.bisect(self.guess(len), too_large)?;
        let lambda = 0.5 * (lo + hi);
        let n = self.opts.samples;
        let states = self.sample(lo, self.drift, y0, 0.0, len, n)?;
        let grid = uniform(0.0, len, n);
        let res = self.finish(lambda, grid, states, iterations, (lo, hi), EigenBc::NeumannBoth)?;
        if res.interior_sign_changes() != 1 {
            return Err(Error::MatchingFailure(format!(
                "Neumann eigenfunction has {} sign changes",
                res.interior_sign_changes()
            )));
        }
        Ok(res)
    }

    fn finish(
        &self,
        lambda: f64,
        grid: Vec<f64>,
        states: Vec<[f64; 2]>,
        iterations: usize,
        bracket: (f64, f64),
        bc: EigenBc,
    ) -> Result<EigenResult> {
        let eigenfunction: Vec<f64> = states.iter().map(|y| y[0]).collect();
        let derivative: Vec<f64> = states.iter().map(|y| self.slope(y[1])).collect();
        let residual = self.residual(lambda, &grid, &states)?;
        Ok(EigenResult {
            lambda,
            grid,
            eigenfunction,
            derivative,
            residual,
            iterations,
            bracket,
            bc,
            gamma: self.gamma,
        })
    }

    /// `max |(a/(k+1)) Φ' + b d Φ + λ|φ|^{γ-1}φ|` with `Φ'` from fourth-order
    /// central differences, relative to the scale of the eigenfunction.
    /// Ends and nodes next to a zero of `Φ` (where `φ''` is singular for
    /// `k > 0`) are skipped, as are nodes next to a zero of `φ` when
    /// `γ ≠ 1` (the force `|φ|^γ` is not smooth there).
    fn residual(&self, lambda: f64, grid: &[f64], states: &[[f64; 2]]) -> Result<f64> {
        let PowerLaw { a, b, k } = self.pl;
        let n = states.len();
        let h = grid[1] - grid[0];
        let scale = states.iter().fold(0.0_f64, |m, y| m.max(y[0].abs())).powf(self.gamma);
        let rough_force = self.gamma != 1.0;
        let singular = |i: usize| -> bool {
            let lo = i.saturating_sub(3);
            let hi = (i + 3).min(n - 1);
            (k > 0.0 && (lo..hi).any(|j| states[j][1] * states[j + 1][1] <= 0.0))
                || (rough_force && (lo..hi).any(|j| states[j][0] * states[j + 1][0] <= 0.0))
        };
        let mut worst: f64 = 0.0;
        for i in 2..n.saturating_sub(2) {
            if singular(i) {
                continue;
            }
            let m = |j: usize| states[j][1];
            let dm = (m(i - 2) - 8.0 * m(i - 1) + 8.0 * m(i + 1) - m(i + 2)) / (12.0 * h);
            let d = self.drift.at(grid[i])?;
            let phi = states[i][0];
            let r = a / (k + 1.0) * dm + b * d * m(i) + lambda * phi.signum() * phi.abs().powf(self.gamma);
            worst = worst.max(r.abs());
        }
        Ok(worst / scale.max(f64::MIN_POSITIVE))
    }
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n).map(|j| if j == n { b } else { a + j as f64 * h }).collect()
}

fn even(n: usize) -> usize {
    (n + 1) / 2 * 2
}

fn check_c_positive(kappa: f64, lambda: f64, upto: f64) -> Result<()> {
    if let Some(z) = first_zero_of_c(kappa, lambda) {
        if z <= upto {
            return Err(Error::Domain(format!("C_(κ={kappa},Λ={lambda}) vanishes at {z} <= {upto}")));
        }
    }
    Ok(())
}

/// First eigenvalue of `α φ'' - (N-1) T_{κ,Λ} β φ' = -λ|φ|^{γ-1}φ`,
/// `φ(0) = 0`, `φ'(R) = 0`. For `N = ∞` the drift is zero and `κ = Λ = 0`
/// is required.
pub fn shoot_1d_model(
    op: &IsotropicOperator,
    params: &CurvatureParams,
    radius: f64,
    gamma: f64,
) -> Result<EigenResult> {
    shoot_1d_model_with(op, params, radius, gamma, ShootingOptions::default())
}

pub fn shoot_1d_model_with(
    op: &IsotropicOperator,
    params: &CurvatureParams,
    radius: f64,
    gamma: f64,
    opts: ShootingOptions,
) -> Result<EigenResult> {
    positive_length(radius)?;
    if params.big_n == BigN::Infinite && (params.kappa != 0.0 || params.lambda != 0.0) {
        return Err(Error::InvalidParameter("the N = inf model has zero drift; set κ = Λ = 0".into()));
    }
    check_c_positive(params.kappa, params.lambda, radius)?;
    let drift = Drift::Model(*params);
    Shooter::new(op, gamma, &drift, opts)?.mixed(radius)
}

/// First eigenvalue of the weighted interval with drift `-f'`.
pub fn shoot_weighted_interval(
    op: &IsotropicOperator,
    space: &WeightedInterval,
    bc: EigenBc,
    gamma: f64,
) -> Result<EigenResult> {
    shoot_weighted_interval_with(op, space, bc, gamma, ShootingOptions::default())
}

pub fn shoot_weighted_interval_with(
    op: &IsotropicOperator,
    space: &WeightedInterval,
    bc: EigenBc,
    gamma: f64,
    opts: ShootingOptions,
) -> Result<EigenResult> {
    let drift = Drift::Density(space.density.clone());
    shoot_drift(op, &drift, space.length, bc, gamma, opts)
}

/// First eigenvalue on `[0, len]` for an arbitrary drift.
pub fn shoot_drift(
    op: &IsotropicOperator,
    drift: &Drift,
    len: f64,
    bc: EigenBc,
    gamma: f64,
    opts: ShootingOptions,
) -> Result<EigenResult> {
    positive_length(len)?;
    let sh = Shooter::new(op, gamma, drift, opts)?;
    match bc {
        EigenBc::DirichletLeftNeumannRight => sh.mixed(len),
        EigenBc::DirichletBoth => sh.dirichlet_both(len),
        EigenBc::NeumannBoth => sh.neumann_both(len),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeumannVariant {
    FiniteN,
    InfiniteN,
}

/// First nonzero Neumann eigenvalue of the diameter-`D` model.
///
/// `FiniteN`: drift `-(N-1) T_{κ,0}` on `[-D/2, D/2]`, solved on the half
/// interval `[0, D/2]` with `φ(0) = 0`, `φ'(D/2) = 0` (the eigenfunction is
/// odd). `InfiniteN`: drift `-κ (t - D/2)` on `[0, D]`, solved by Neumann
/// shooting; the drift is centered so that the problem is symmetric about
/// the midpoint.
pub fn neumann_1d_model(
    op: &IsotropicOperator,
    kappa: f64,
    params: &CurvatureParams,
    diameter: f64,
    gamma: f64,
    variant: NeumannVariant,
) -> Result<EigenResult> {
    neumann_1d_model_with(op, kappa, params, diameter, gamma, variant, ShootingOptions::default())
}

pub fn neumann_1d_model_with(
    op: &IsotropicOperator,
    kappa: f64,
    params: &CurvatureParams,
    diameter: f64,
    gamma: f64,
    variant: NeumannVariant,
    opts: ShootingOptions,
) -> Result<EigenResult> {
    positive_length(diameter)?;
    match variant {
        NeumannVariant::FiniteN => {
            let big_n = match params.big_n {
                BigN::Finite(n) => n,
                BigN::Infinite => return Err(Error::InvalidParameter("finite_N variant needs finite N".into())),
            };
            let model = CurvatureParams::new(kappa, 0.0, BigN::Finite(big_n), params.n)?;
            check_c_positive(kappa, 0.0, 0.5 * diameter)?;
            let drift = Drift::Model(model);
            Shooter::new(op, gamma, &drift, opts)?.mixed(0.5 * diameter)
        }
        NeumannVariant::InfiniteN => {
            let drift = Drift::Affine { slope: -kappa, center: 0.5 * diameter };
            Shooter::new(op, gamma, &drift, opts)?.neumann_both(diameter)
        }
    }
}

fn positive_length(len: f64) -> Result<()> {
    if len > 0.0 && len.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("length must be positive, got {len}")))
    }
}
