//! One-dimensional reductions of smooth metric measure spaces.
//!
//! A [`WeightedInterval`] is `[0, L]` with measure `e^{-f} ds`; a
//! [`WarpedModel`] is the radial part of a rotationally symmetric space
//! `dr² + w(r)² g_sphere` with density `f(r)`. Curvature lower bounds are
//! expressed through the comparison functions `C_{κ,Λ}` and
//! `T_{κ,Λ} = -C'/C`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Expr, Func, Jet};
use crate::spline::CubicSpline;

/// Below this |κ| the comparison function switches to its Taylor series.
const KAPPA_SERIES: f64 = 1e-10;

/// Synthetic dimension `N ∈ [n, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BigN {
    Finite(f64),
    Infinite,
}

impl BigN {
    pub fn is_finite(self) -> bool {
        matches!(self, BigN::Finite(_))
    }

    /// `N - 1`, or `None` for `N = ∞`.
    pub fn minus_one(self) -> Option<f64> {
        match self {
            BigN::Finite(n) => Some(n - 1.0),
            BigN::Infinite => None,
        }
    }
}

impl fmt::Display for BigN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BigN::Finite(n) => write!(f, "{n}"),
            BigN::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for BigN {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BigN::Finite(n) => s.serialize_f64(*n),
            BigN::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BigN {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<BigN, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = BigN;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<BigN, E> {
                Ok(BigN::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<BigN, E> {
                Ok(BigN::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<BigN, E> {
                Ok(BigN::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<BigN, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(BigN::Infinite),
                    _ => Err(E::custom(format!("expected \"inf\", got {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Curvature data `(κ, Λ, N, n)`: `Ric^N_f ≥ (N-1)κ`, `H_f ≥ (N-1)Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureParams {
    pub kappa: f64,
    pub lambda: f64,
    pub big_n: BigN,
    #[serde(default = "one")]
    pub n: u32,
}

fn one() -> u32 {
    1
}

impl CurvatureParams {
    pub fn new(kappa: f64, lambda: f64, big_n: BigN, n: u32) -> Result<Self> {
        let p = Self { kappa, lambda, big_n, n };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for a weighted interval (`n = 1`) with finite `N`.
    pub fn interval(kappa: f64, lambda: f64, big_n: f64) -> Result<Self> {
        Self::new(kappa, lambda, BigN::Finite(big_n), 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("dimension n must be positive".into()));
        }
        if !self.kappa.is_finite() || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("kappa and lambda must be finite".into()));
        }
        if let BigN::Finite(nn) = self.big_n {
            if !(nn >= self.n as f64) {
                return Err(Error::InvalidParameter(format!("N = {nn} must be >= n = {}", self.n)));
            }
            if self.n == 1 && !(nn > 1.0) {
                return Err(Error::InvalidParameter("weighted intervals need N > 1".into()));
            }
        }
        Ok(())
    }

    /// Same parameters with `Λ = 0`.
    pub fn without_boundary(self) -> Self {
        Self { lambda: 0.0, ..self }
    }
}

/// `C_{κ,Λ}(t)` and its derivative.
pub fn c_and_derivative(kappa: f64, lambda: f64, t: f64) -> (f64, f64) {
    if kappa.abs() < KAPPA_SERIES {
        // 1 - Λt - κt²/2 + κΛt³/6
        let c = 1.0 - lambda * t - 0.5 * kappa * t * t + kappa * lambda * t * t * t / 6.0;
        let dc = -lambda - kappa * t + 0.5 * kappa * lambda * t * t;
        (c, dc)
    } else if kappa > 0.0 {
        let r = kappa.sqrt();
        let (s, c) = (r * t).sin_cos();
        (c - lambda / r * s, -r * s - lambda * c)
    } else {
        let r = (-kappa).sqrt();
        let (s, c) = ((r * t).sinh(), (r * t).cosh());
        (c - lambda / r * s, r * s - lambda * c)
    }
}

/// Solution of `φ'' + κφ = 0`, `φ(0) = 1`, `φ'(0) = -Λ`.
pub fn c_kappa_lambda(params: &CurvatureParams, t: f64) -> f64 {
    c_and_derivative(params.kappa, params.lambda, t).0
}

/// `T_{κ,Λ} = -C'/C`; fails once `C ≤ 0`.
pub fn t_kappa_lambda(params: &CurvatureParams, t: f64) -> Result<f64> {
    t_raw(params.kappa, params.lambda, t)
}

pub(crate) fn t_raw(kappa: f64, lambda: f64, t: f64) -> Result<f64> {
    let (c, dc) = c_and_derivative(kappa, lambda, t);
    if c <= 0.0 {
        return Err(Error::Domain(format!("C_(κ={kappa},Λ={lambda})({t}) = {c} is not positive")));
    }
    Ok(-dc / c)
}

/// First positive zero of `C_{κ,Λ}`, if any.
pub fn first_zero_of_c(kappa: f64, lambda: f64) -> Option<f64> {
    if kappa.abs() < KAPPA_SERIES {
        if kappa == 0.0 {
            return (lambda > 0.0).then(|| 1.0 / lambda);
        }
        // Bisection on the series, which is accurate in this regime.
    } else if kappa > 0.0 {
        let r = kappa.sqrt();
        // cos(rt) = (Λ/r) sin(rt)  <=>  cot(rt) = Λ/r
        let theta = (r / lambda).atan();
        let theta = if theta <= 0.0 { theta + std::f64::consts::PI } else { theta };
        return Some(theta / r);
    } else {
        let r = (-kappa).sqrt();
        // tanh(rt) = r/Λ has a root only when Λ > r.
        if lambda > r {
            return Some((r / lambda).atanh() / r);
        }
        return None;
    }
    let mut hi = 1.0;
    while c_and_derivative(kappa, lambda, hi).0 > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c_and_derivative(kappa, lambda, mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Density `f` given in closed form or by C² spline samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Expr(Expr),
    Spline(CubicSpline),
}

impl Density {
    pub fn zero() -> Self {
        Density::Expr(Expr::c(0.0))
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Density::Expr(src.parse()?))
    }

    /// `(f, f', f'')` at `s`.
    pub fn jet(&self, s: f64) -> Jet {
        match self {
            Density::Expr(e) => e.jet(s),
            Density::Spline(sp) => sp.jet(s),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.jet(s).v
    }

    pub fn d1(&self, s: f64) -> f64 {
        self.jet(s).d1
    }
}

/// The interval `[0, L]` with density `f` and a uniform grid of `m` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedInterval {
    pub length: f64,
    pub density: Density,
    pub intervals: usize,
}

impl WeightedInterval {
    pub fn new(length: f64, density: Density, intervals: usize) -> Result<Self> {
        let w = Self { length, density, intervals };
        w.validate()?;
        Ok(w)
    }

    pub fn flat(length: f64, intervals: usize) -> Result<Self> {
        Self::new(length, Density::zero(), intervals)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidParameter("interval length must be positive".into()));
        }
        if self.intervals < 16 {
            return Err(Error::InvalidParameter(format!("grid needs at least 16 cells, got {}", self.intervals)));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| self.node(i)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.length
    }

    pub fn inradius(&self) -> f64 {
        0.5 * self.length
    }

    /// Same density and length on a grid with `m` cells.
    pub fn with_intervals(&self, m: usize) -> Result<Self> {
        Self::new(self.length, self.density.clone(), m)
    }
}

/// Which endpoints of an interval are treated as boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ends {
    Both,
    /// Only `s = 0`; the right end is a reflection point.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Left,
    Right,
}

/// `Ric^N_f` on the unit tangent of a weighted interval.
pub fn ricci_f_n(space: &WeightedInterval, params: &CurvatureParams, s: f64) -> f64 {
    let j = space.density.jet(s);
    match params.big_n.minus_one() {
        Some(nm1) => j.d2 - j.d1 * j.d1 / nm1,
        None => j.d2,
    }
}

/// `H_f = -⟨∇f, ν⟩` at an endpoint (the boundary of an interval is totally geodesic).
pub fn boundary_hf(space: &WeightedInterval, end: End) -> f64 {
    match end {
        End::Left => space.density.d1(0.0),
        End::Right => -space.density.d1(space.length),
    }
}

/// Grid-scan lower bounds `(κ_eff, Λ_eff)` with both endpoints as boundary.
///
/// For finite `N` the minima are divided by `N - 1`; for `N = ∞` the raw
/// minima of `f''` and `H_f` are returned. The scan is approximate with an
/// O(h²) error.
pub fn effective_bounds(space: &WeightedInterval, params: &CurvatureParams) -> (f64, f64) {
    effective_bounds_with(space, params, Ends::Both)
}

pub fn effective_bounds_with(space: &WeightedInterval, params: &CurvatureParams, ends: Ends) -> (f64, f64) {
    let ric_min = space.nodes().into_iter().map(|s| ricci_f_n(space, params, s)).fold(f64::INFINITY, f64::min);
    let h_min = match ends {
        Ends::Both => boundary_hf(space, End::Left).min(boundary_hf(space, End::Right)),
        Ends::Left => boundary_hf(space, End::Left),
    };
    match params.big_n.minus_one() {
        Some(nm1) => (ric_min / nm1, h_min / nm1),
        None => (ric_min, h_min),
    }
}

/// Closed-form `C_{κ,Λ}` as an expression tree.
pub fn c_expr(kappa: f64, lambda: f64) -> Expr {
    if kappa == 0.0 {
        Expr::affine(-lambda, 1.0)
    } else if kappa.abs() < KAPPA_SERIES {
        // 1 - Λs - κs²/2 + κΛs³/6
        Expr::affine(-lambda, 1.0)
            .sub(Expr::c(0.5 * kappa).mul(Expr::s().pow(2.0)))
            .add(Expr::c(kappa * lambda / 6.0).mul(Expr::s().pow(3.0)))
    } else if kappa > 0.0 {
        let r = kappa.sqrt();
        Expr::call(Func::Cos, Expr::affine(r, 0.0))
            .sub(Expr::c(lambda / r).mul(Expr::call(Func::Sin, Expr::affine(r, 0.0))))
    } else {
        let r = (-kappa).sqrt();
        Expr::call(Func::Cosh, Expr::affine(r, 0.0))
            .sub(Expr::c(lambda / r).mul(Expr::call(Func::Sinh, Expr::affine(r, 0.0))))
    }
}

/// `f = -(N-1) log C_{κ,Λ}` on `[0, R]`, realizing equality in both the
/// Ricci and the boundary hypothesis at `s = 0`.
pub fn model_density(params: &CurvatureParams, radius: f64) -> Result<Density> {
    let nm1 = params.big_n.minus_one().ok_or_else(|| Error::InvalidParameter("model density needs finite N".into()))?;
    if !(nm1 > 0.0) {
        return Err(Error::InvalidParameter("model density needs N > 1".into()));
    }
    if let Some(z) = first_zero_of_c(params.kappa, params.lambda) {
        if z <= radius {
            return Err(Error::Domain(format!(
                "C_(κ={},Λ={}) vanishes at {z} <= R = {radius}",
                params.kappa, params.lambda
            )));
        }
    }
    if params.kappa == 0.0 && params.lambda == 0.0 {
        return Ok(Density::zero());
    }
    let c = c_expr(params.kappa, params.lambda);
    Ok(Density::Expr(Expr::c(-nm1).mul(Expr::call(Func::Log, c))))
}

/// Convenience: the weighted interval `[0, R]` carrying the model density.
pub fn model_interval(params: &CurvatureParams, radius: f64, intervals: usize) -> Result<WeightedInterval> {
    WeightedInterval::new(radius, model_density(params, radius)?, intervals)
}

/// Radial reduction of a rotationally symmetric space of dimension `n ≥ 2`.
///
/// Problems are posed on `[s_min, R]` with `s_min = 3h`, excluding the pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedModel {
    pub radius: f64,
    pub n: u32,
    pub warp: Expr,
    pub density: Density,
    pub intervals: usize,
}

impl WarpedModel {
    pub fn new(radius: f64, n: u32, warp: Expr, density: Density, intervals: usize) -> Result<Self> {
        let w = Self { radius, n, warp, density, intervals };
        w.validate()?;
        Ok(w)
    }

    /// Flat `n`-ball of radius `R` (`w(s) = s`, `f = 0`).
    pub fn euclidean_ball(radius: f64, n: u32, intervals: usize) -> Result<Self> {
        Self::new(radius, n, Expr::s(), Density::zero(), intervals)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter("warped models need n >= 2".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        if self.intervals < 16 {
            return Err(Error::InvalidParameter("grid needs at least 16 cells".into()));
        }
        for s in self.nodes() {
            let w = self.warp.eval(s);
            if !(w > 0.0) {
                return Err(Error::Domain(format!("warp w({s}) = {w} is not positive")));
            }
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.radius / (self.intervals + 3) as f64
    }

    pub fn s_min(&self) -> f64 {
        3.0 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.intervals).map(|i| if i == self.intervals { self.radius } else { (i + 3) as f64 * h }).collect()
    }

    /// `(n-1) w'/w - f'`.
    pub fn drift(&self, s: f64) -> Result<f64> {
        let w = self.warp.jet(s);
        if !(w.v > 0.0) {
            return Err(Error::Domain(format!("warp vanishes at s = {s}")));
        }
        let d = (self.n - 1) as f64 * w.d1 / w.v - self.density.d1(s);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Domain(format!("drift undefined at s = {s}")))
        }
    }
}
