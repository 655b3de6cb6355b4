//! Quasilinear isotropic operators in radial form.
//!
//! On a radial function `u(s)` an isotropic operator reduces to
//! `α(|u'|) u'' + β(|u'|) drift(s) u'`, where the drift collects the density
//! and warping contributions of the underlying space.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{t_raw, BigN, CurvatureParams, Density, WarpedModel};

/// Default gradient regularization scale.
pub const DEFAULT_EPS: f64 = 1e-8;

/// A coefficient `(g, u, t) -> value` with `g = |u'|_ε`.
pub type Coefficient = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// `α = a g^k`, `β = b g^k`; enables the momentum substitution `Φ = |φ'|^k φ'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

#[derive(Clone)]
pub struct IsotropicOperator {
    pub name: String,
    alpha: Coefficient,
    beta: Coefficient,
    pub gamma: Option<f64>,
    pub singular_at_zero: bool,
    pub power_law: Option<PowerLaw>,
    /// Closed form of `A(z) = ∫_0^z α(|r|) dr` when known.
    primitive: Option<Coefficient>,
}

impl fmt::Debug for IsotropicOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IsotropicOperator")
            .field("name", &self.name)
            .field("gamma", &self.gamma)
            .field("singular_at_zero", &self.singular_at_zero)
            .field("power_law", &self.power_law)
            .finish()
    }
}

impl IsotropicOperator {
    /// Operator with coefficients depending on `(g, u, t)`.
    pub fn new(
        name: impl Into<String>,
        alpha: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        gamma: Option<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            alpha: Arc::new(alpha),
            beta: Arc::new(beta),
            gamma,
            singular_at_zero: false,
            power_law: None,
            primitive: None,
        }
    }

    /// Operator whose coefficients depend on the gradient norm only.
    pub fn gradient_only(
        name: impl Into<String>,
        alpha: impl Fn(f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma: Option<f64>,
    ) -> Self {
        Self::new(name, move |g, _, _| alpha(g), move |g, _, _| beta(g), gamma)
    }

    /// `α = a g^k`, `β = b g^k`, homogeneous of degree `k + 1`.
    pub fn power_law(name: impl Into<String>, a: f64, b: f64, k: f64) -> Self {
        let mut op = Self::gradient_only(
            name,
            move |g| if k == 0.0 { a } else { a * g.powf(k) },
            move |g| if k == 0.0 { b } else { b * g.powf(k) },
            Some(k + 1.0),
        );
        op.singular_at_zero = k < 0.0;
        op.power_law = Some(PowerLaw { a, b, k });
        op
    }

    pub fn alpha(&self, g: f64) -> f64 {
        (self.alpha)(g, 0.0, 0.0)
    }

    pub fn beta(&self, g: f64) -> f64 {
        (self.beta)(g, 0.0, 0.0)
    }

    pub fn alpha_at(&self, g: f64, u: f64, t: f64) -> f64 {
        (self.alpha)(g, u, t)
    }

    pub fn beta_at(&self, g: f64, u: f64, t: f64) -> f64 {
        (self.beta)(g, u, t)
    }

    /// `A(z) = ∫_0^z α(|r|, u, t) dr`, so that `(A(u'))' = α(|u'|) u''`.
    /// Odd and non-decreasing in `z`.
    pub fn alpha_primitive(&self, z: f64, u: f64, t: f64) -> f64 {
        if let Some(pl) = self.power_law {
            return pl.a * z.abs().powf(pl.k) * z / (pl.k + 1.0);
        }
        if let Some(a) = &self.primitive {
            return a(z, u, t);
        }
        let x = z.abs();
        let pieces = 4;
        let w = x / pieces as f64;
        let mut acc = 0.0;
        for j in 0..pieces {
            let mid = (j as f64 + 0.5) * w;
            for (node, weight) in GAUSS8 {
                acc += weight * (self.alpha)(mid + 0.5 * w * node, u, t);
            }
        }
        (0.5 * w * acc).copysign(z)
    }

    /// `B(z) = β(|z|) z`, the first-order flux.
    pub fn beta_flux(&self, z: f64, u: f64, t: f64) -> f64 {
        if z == 0.0 {
            return 0.0;
        }
        (self.beta)(z.abs(), u, t) * z
    }

    /// `B'(z)`, used for the stability audit.
    pub fn beta_flux_slope(&self, z: f64, u: f64, t: f64, eps: f64) -> f64 {
        if let Some(pl) = self.power_law {
            return (pl.k + 1.0) * pl.b * z.abs().max(eps).powf(pl.k);
        }
        let d = 1e-6 * (1.0 + z.abs());
        ((self.beta_flux(z + d, u, t) - self.beta_flux(z - d, u, t)) / (2.0 * d)).max(0.0)
    }

    /// Degenerate when either coefficient vanishes identically.
    pub fn is_degenerate(&self) -> bool {
        match self.power_law {
            Some(pl) => pl.a == 0.0 || pl.b == 0.0,
            None => false,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Serializable operator description `{name, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl OperatorSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), params: BTreeMap::new() }
    }

    pub fn with_p(name: &str, p: f64) -> Self {
        let mut s = Self::new(name);
        s.params.insert("p".into(), p);
        s
    }

    pub fn build(&self) -> Result<IsotropicOperator> {
        catalog(&self.name, &self.params)
    }
}

pub const CATALOG_NAMES: [&str; 6] =
    ["laplacian", "p_laplacian", "normalized_p_laplacian", "mean_curvature", "one_laplacian", "infinity_laplacian"];

/// Builds a named operator from the catalog.
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<IsotropicOperator> {
    let p = || -> Result<f64> {
        let p = *params.get("p").ok_or_else(|| Error::InvalidParameter(format!("{name} requires parameter p")))?;
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
        }
        Ok(p)
    };
    let expect = |allowed: &[&str]| -> Result<()> {
        match params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidParameter(format!("{name} does not take parameter {k:?}"))),
            None => Ok(()),
        }
    };
    let op = match name {
        "laplacian" => {
            expect(&[])?;
            IsotropicOperator::power_law(name, 1.0, 1.0, 0.0)
        }
        "p_laplacian" => {
            expect(&["p"])?;
            let p = p()?;
            IsotropicOperator::power_law(name, p - 1.0, 1.0, p - 2.0)
        }
        "normalized_p_laplacian" => {
            expect(&["p"])?;
            let p = p()?;
            IsotropicOperator::power_law(name, (p - 1.0) / p, 1.0 / p, 0.0)
        }
        "mean_curvature" => {
            expect(&[])?;
            let mut op = IsotropicOperator::gradient_only(name, |g| 1.0 / (1.0 + g * g), |_| 1.0, None);
            op.primitive = Some(Arc::new(|z, _, _| z.atan()));
            op
        }
        "one_laplacian" => {
            expect(&[])?;
            IsotropicOperator::power_law(name, 0.0, 1.0, 0.0)
        }
        "infinity_laplacian" => {
            expect(&[])?;
            IsotropicOperator::power_law(name, 1.0, 0.0, 0.0)
        }
        _ => return Err(Error::UnknownOperator(name.to_string())),
    };
    Ok(op)
}

pub fn laplacian() -> IsotropicOperator {
    IsotropicOperator::power_law("laplacian", 1.0, 1.0, 0.0)
}

pub fn p_laplacian(p: f64) -> Result<IsotropicOperator> {
    OperatorSpec::with_p("p_laplacian", p).build()
}

pub fn normalized_p_laplacian(p: f64) -> Result<IsotropicOperator> {
    OperatorSpec::with_p("normalized_p_laplacian", p).build()
}

/// First-order coefficient of the radial reduction.
#[derive(Clone)]
pub enum Drift {
    Zero,
    /// `-f'(s)` on a weighted interval.
    Density(Density),
    /// `(n-1) w'/w - f'` on a warped model.
    Warped {
        n: u32,
        warp: Expr,
        density: Density,
    },
    /// `-(N-1) T_{κ,Λ}(s)`, or `0` for `N = ∞`.
    Model(CurvatureParams),
    /// `slope · (s - center)`.
    Affine {
        slope: f64,
        center: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::Density(d) => f.debug_tuple("Density").field(d).finish(),
            Drift::Warped { n, warp, density } => {
                f.debug_struct("Warped").field("n", n).field("warp", warp).field("density", density).finish()
            }
            Drift::Model(p) => f.debug_tuple("Model").field(p).finish(),
            Drift::Affine { slope, center } => {
                f.debug_struct("Affine").field("slope", slope).field("center", center).finish()
            }
            Drift::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Drift {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Drift::Custom(Arc::new(f))
    }

    pub fn of_warped(model: &WarpedModel) -> Self {
        Drift::Warped { n: model.n, warp: model.warp.clone(), density: model.density.clone() }
    }

    /// `-κ s`, the drift of the height-dependent barrier equations.
    pub fn linear(kappa: f64) -> Self {
        Drift::Affine { slope: -kappa, center: 0.0 }
    }

    pub fn at(&self, s: f64) -> Result<f64> {
        let d = match self {
            Drift::Zero => 0.0,
            Drift::Density(f) => -f.d1(s),
            Drift::Warped { n, warp, density } => {
                let w = warp.jet(s);
                if !(w.v > 0.0) {
                    return Err(Error::Domain(format!("warp vanishes at s = {s}")));
                }
                (*n - 1) as f64 * w.d1 / w.v - density.d1(s)
            }
            Drift::Model(p) => match p.big_n {
                BigN::Finite(nn) => -(nn - 1.0) * t_raw(p.kappa, p.lambda, s)?,
                BigN::Infinite => 0.0,
            },
            Drift::Affine { slope, center } => slope * (s - center),
            Drift::Custom(f) => f(s),
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Domain(format!("drift undefined at s = {s}")))
        }
    }

    /// Drift of the reflected problem `r = length - s`: `-drift(length - r)`.
    pub fn reflected(&self, length: f64) -> Drift {
        let me = self.clone();
        Drift::custom(move |r| -me.at(length - r).unwrap_or(f64::NAN))
    }
}

/// `|up|_ε = max(|up|, ε)`.
pub fn reg_norm(up: f64, eps: f64) -> f64 {
    up.abs().max(eps)
}

/// `α(|u'|_ε) u'' + β(|u'|_ε) drift(s) u'`.
pub fn evaluate_radial(op: &IsotropicOperator, drift: &Drift, up: f64, upp: f64, s: f64, eps: f64) -> Result<f64> {
    let d = drift.at(s)?;
    Ok(radial_value(op, d, up, upp, eps))
}

/// Radial form with a precomputed drift value.
pub fn radial_value(op: &IsotropicOperator, drift: f64, up: f64, upp: f64, eps: f64) -> f64 {
    let g = reg_norm(up, eps);
    let first = if drift == 0.0 || up == 0.0 { 0.0 } else { op.beta(g) * drift * up };
    op.alpha(g) * upp + first
}

/// One sample `(u', u'', s, drift(s))` for [`homogeneity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub up: f64,
    pub upp: f64,
    pub s: f64,
    pub drift: f64,
}

/// Checks `Q[c u] = c^γ Q[u]` for `c ∈ {0.5, 2, 7}` on every jet.
pub fn homogeneity_check(op: &IsotropicOperator, gamma: f64, jets: &[RadialJet]) -> bool {
    homogeneity_check_eps(op, gamma, jets, DEFAULT_EPS)
}

pub fn homogeneity_check_eps(op: &IsotropicOperator, gamma: f64, jets: &[RadialJet], eps: f64) -> bool {
    if jets.is_empty() {
        return false;
    }
    jets.iter().all(|j| {
        let base = radial_value(op, j.drift, j.up, j.upp, eps);
        [0.5, 2.0, 7.0].iter().all(|&c: &f64| {
            let scaled = radial_value(op, j.drift, c * j.up, c * j.upp, eps);
            let expect = c.powf(gamma) * base;
            (scaled - expect).abs() <= 1e-9 * (1.0 + expect.abs())
        })
    })
}

/// Lower-order terms: `q(g, u, t)` for parabolic problems and `b(u, g)`
/// for elliptic ones. Absent terms are identically zero.
#[derive(Clone, Default)]
pub struct SourceTerm {
    q: Option<Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>>,
    b: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceTerm").field("q", &self.q.is_some()).field("b", &self.b.is_some()).finish()
    }
}

impl SourceTerm {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn parabolic(q: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { q: Some(Arc::new(q)), b: None }
    }

    pub fn elliptic(b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { q: None, b: Some(Arc::new(b)) }
    }

    pub fn constant_b(c: f64) -> Self {
        Self::elliptic(move |_, _| c)
    }

    pub fn q(&self, g: f64, u: f64, t: f64) -> f64 {
        self.q.as_ref().map_or(0.0, |q| q(g, u, t))
    }

    pub fn b(&self, u: f64, g: f64) -> f64 {
        self.b.as_ref().map_or(0.0, |b| b(u, g))
    }

    pub fn has_q(&self) -> bool {
        self.q.is_some()
    }

    pub fn has_b(&self) -> bool {
        self.b.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurvatureParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn all_catalog() -> Vec<IsotropicOperator> {
        let mut ops = vec![];
        for name in CATALOG_NAMES {
            let mut params = BTreeMap::new();
            if name.contains("p_lap") {
                params.insert("p".to_string(), 3.0);
            }
            ops.push(catalog(name, &params).unwrap());
        }
        ops.push(p_laplacian(1.5).unwrap());
        ops.push(p_laplacian(4.0).unwrap());
        ops
    }

    #[test]
    fn catalog_examples() {
        let lap = laplacian();
        assert_eq!((lap.alpha(0.7), lap.beta(0.7)), (1.0, 1.0));
        let n2 = normalized_p_laplacian(2.0).unwrap();
        assert_eq!((n2.alpha(3.0), n2.beta(3.0)), (0.5, 0.5));
        let p3 = p_laplacian(3.0).unwrap();
        assert_eq!((p3.alpha(2.0), p3.beta(2.0)), (4.0, 2.0));
        assert!(p_laplacian(1.5).unwrap().singular_at_zero);
        assert!(!p3.singular_at_zero);
        assert_eq!(p3.gamma, Some(2.0));
        assert_eq!(catalog("mean_curvature", &BTreeMap::new()).unwrap().gamma, None);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog("bilaplacian", &BTreeMap::new()), Err(Error::UnknownOperator(_))));
        assert!(matches!(p_laplacian(1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(catalog("p_laplacian", &BTreeMap::new()), Err(Error::InvalidParameter(_))));
        let mut extra = BTreeMap::new();
        extra.insert("p".to_string(), 2.0);
        assert!(catalog("laplacian", &extra).is_err());
    }

    #[test]
    fn evaluate_radial_examples() {
        let lap = laplacian();
        assert_eq!(evaluate_radial(&lap, &Drift::Zero, 0.3, -1.2, 0.4, DEFAULT_EPS).unwrap(), -1.2);
        let model = Drift::Model(CurvatureParams::interval(1.0, 0.0, 2.0).unwrap());
        let v = evaluate_radial(&lap, &model, 1.0, 0.0, PI / 4.0, DEFAULT_EPS).unwrap();
        assert!((v + 1.0).abs() < 1e-14);
        let p4 = p_laplacian(4.0).unwrap();
        assert_eq!(evaluate_radial(&p4, &Drift::Zero, 2.0, 1.0, 0.0, DEFAULT_EPS).unwrap(), 12.0);
        let ball = WarpedModel::euclidean_ball(1.0, 3, 32).unwrap();
        assert!(evaluate_radial(&lap, &Drift::of_warped(&ball), 1.0, 0.0, 0.0, DEFAULT_EPS).is_err());
    }

    #[test]
    fn homogeneity_examples() {
        let jets = [
            RadialJet { up: 0.7, upp: -1.3, s: 0.2, drift: -0.4 },
            RadialJet { up: -2.0, upp: 0.5, s: 1.0, drift: 1.5 },
        ];
        assert!(homogeneity_check(&laplacian(), 1.0, &jets));
        assert!(homogeneity_check(&p_laplacian(3.0).unwrap(), 2.0, &jets));
        assert!(!homogeneity_check(&p_laplacian(3.0).unwrap(), 1.0, &jets));
        let mc = catalog("mean_curvature", &BTreeMap::new()).unwrap();
        let one = [RadialJet { up: 1.0, upp: 1.0, s: 0.0, drift: 0.0 }];
        assert!(!homogeneity_check(&mc, 1.0, &one));
        for op in all_catalog() {
            if let Some(g) = op.gamma {
                assert!(homogeneity_check(&op, g, &jets), "{}", op.name);
            }
        }
    }

    /// Divergence-form oracle: e^{f} (e^{-f} |u'|^{p-2} u')' by centered differences.
    fn divergence_oracle(p: f64, f: &Density, u: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
        let flux = |x: f64| {
            let du = (u(x + 0.5 * h) - u(x - 0.5 * h)) / h;
            (-f.value(x)).exp() * du.abs().powf(p - 2.0) * du
        };
        f.value(s).exp() * (flux(s + 0.5 * h) - flux(s - 0.5 * h)) / h
    }

    #[test]
    fn p_laplacian_matches_divergence_form() {
        let f = Density::parse("0.3*s^2 + sin(s)").unwrap();
        let u = |x: f64| (1.1 * x).sin() + 0.4 * x;
        let p = 3.5;
        let op = p_laplacian(p).unwrap();
        let drift = Drift::Density(f.clone());
        let s: f64 = 0.6;
        let exact =
            evaluate_radial(&op, &drift, 1.1 * (1.1 * s).cos() + 0.4, -1.21 * (1.1 * s).sin(), s, DEFAULT_EPS).unwrap();
        let e1 = (divergence_oracle(p, &f, u, s, 1e-2) - exact).abs();
        let e2 = (divergence_oracle(p, &f, u, s, 5e-3) - exact).abs();
        assert!(e1 < 1e-3);
        assert!(e2 < e1 / 3.0);
    }

    #[test]
    fn primitives_integrate_alpha() {
        let mc = catalog("mean_curvature", &BTreeMap::new()).unwrap();
        let generic = IsotropicOperator::gradient_only("mc", |g| 1.0 / (1.0 + g * g), |_| 1.0, None);
        for &z in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            assert!((generic.alpha_primitive(z, 0.0, 0.0) - mc.alpha_primitive(z, 0.0, 0.0)).abs() < 1e-10);
        }
        let p3 = p_laplacian(3.0).unwrap();
        assert!((p3.alpha_primitive(-2.0, 0.0, 0.0) + 4.0).abs() < 1e-14);
        assert!((p3.beta_flux(-2.0, 0.0, 0.0) + 4.0).abs() < 1e-14);
    }

    #[test]
    fn drift_reflection() {
        let d = Drift::Density(Density::parse("s^2").unwrap());
        let r = d.reflected(2.0);
        assert!((r.at(0.5).unwrap() - 3.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn coefficients_are_nonnegative(g in 0.0f64..1e3, idx in 0usize..8) {
            let op = &all_catalog()[idx];
            prop_assert!(op.alpha(g.max(DEFAULT_EPS)) >= 0.0);
            prop_assert!(op.beta(g.max(DEFAULT_EPS)) >= 0.0);
        }

        #[test]
        fn radial_value_is_monotone_in_upp(
            idx in 0usize..8, up in -5.0f64..5.0, a in -10.0f64..10.0, b in -10.0f64..10.0, d in -3.0f64..3.0,
        ) {
            let op = &all_catalog()[idx];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(radial_value(op, d, up, hi, DEFAULT_EPS) >= radial_value(op, d, up, lo, DEFAULT_EPS));
        }

        #[test]
        fn power_laws_are_homogeneous(
            p in 1.2f64..6.0, up in 0.01f64..3.0, upp in -5.0f64..5.0, d in -3.0f64..3.0, sign in proptest::bool::ANY,
        ) {
            let up = if sign { up } else { -up };
            let jet = [RadialJet { up, upp, s: 0.0, drift: d }];
            let op = p_laplacian(p).unwrap();
            prop_assert!(homogeneity_check(&op, p - 1.0, &jet));
            let np = normalized_p_laplacian(p).unwrap();
            prop_assert!(homogeneity_check(&np, 1.0, &jet));
        }
    }
}
