//! One-dimensional comparison profiles `φ(s, t)`, their admissibility
//! audit, inversion `Ψ(·, t) = φ(·, t)^{-1}`, and the elliptic barrier ODE.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::interp_linear;
use crate::ode::{integrate, integrate_with_event, OdeOptions, Stop};
use crate::operators::{Drift, IsotropicOperator, SourceTerm};
use crate::pde::{advance, rates, Boundary, Grid, SolverConfig};
use crate::spline::MonotoneCubic;

/// Matching tolerance between trajectory and profile times.
pub const TIME_MATCH_TOL: f64 = 1e-9;

/// Space-time table of a barrier with its spatial and temporal derivatives.
#[derive(Debug, Clone)]
pub struct ComparisonProfile {
    pub grid: Arc<Grid>,
    pub times: Vec<f64>,
    /// `values[k][i] = φ(s_i, t_k)`.
    pub values: Vec<Vec<f64>>,
    /// `φ_s`, centered inside and second-order one-sided at the ends.
    pub derivative: Vec<Vec<f64>>,
    /// `φ_t` as realized by the scheme (or by time differences for tables).
    pub time_derivative: Vec<Vec<f64>>,
    pub bc: Boundary,
    /// Step of the evolution, `0` for stationary profiles.
    pub dt: f64,
    pub op: IsotropicOperator,
    pub source: SourceTerm,
    pub eps: f64,
}

impl ComparisonProfile {
    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn s(&self) -> &[f64] {
        &self.grid.nodes
    }

    /// Index of the slice at time `t`, within [`TIME_MATCH_TOL`].
    pub fn slice_at(&self, t: f64) -> Result<usize> {
        let k = self.times.partition_point(|&x| x < t - TIME_MATCH_TOL);
        if k < self.times.len() && (self.times[k] - t).abs() <= TIME_MATCH_TOL {
            Ok(k)
        } else {
            Err(Error::TimeMismatch(t))
        }
    }

    /// Profile given by a table; `φ_t` is taken from forward time
    /// differences (backward at the last slice).
    pub fn from_table(
        grid: Arc<Grid>,
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        bc: Boundary,
        op: IsotropicOperator,
        source: SourceTerm,
    ) -> Result<Self> {
        if times.is_empty() || values.len() != times.len() || values.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::InvalidParameter("profile table shape does not match grid and times".into()));
        }
        let derivative = values.iter().map(|v| spatial_derivative(v, grid.h)).collect();
        let n = times.len();
        let time_derivative = (0..n)
            .map(|k| {
                if n == 1 {
                    return vec![0.0; grid.len()];
                }
                let (a, b) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
                let dt = times[b] - times[a];
                values[b].iter().zip(&values[a]).map(|(x, y)| (x - y) / dt).collect()
            })
            .collect();
        let dt = if n > 1 { times[1] - times[0] } else { 0.0 };
        Ok(Self {
            grid,
            times,
            values,
            derivative,
            time_derivative,
            bc,
            dt,
            op,
            source,
            eps: crate::operators::DEFAULT_EPS,
        })
    }

    /// Profile `φ(s, t)` given in closed form together with `φ_t`.
    pub fn from_fn(
        grid: Arc<Grid>,
        times: Vec<f64>,
        bc: Boundary,
        op: IsotropicOperator,
        phi: impl Fn(f64, f64) -> f64,
        phi_t: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values: Vec<Vec<f64>> = times.iter().map(|&t| grid.nodes.iter().map(|&s| phi(s, t)).collect()).collect();
        let mut p = Self::from_table(grid, times.clone(), values, bc, op, SourceTerm::none())?;
        p.time_derivative = times.iter().map(|&t| p.grid.nodes.iter().map(|&s| phi_t(s, t)).collect()).collect();
        Ok(p)
    }
}

/// Centered differences inside, second-order one-sided at the ends.
pub fn spatial_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            d[0] = (v[1] - v[0]) / h;
            d[1] = d[0];
        }
        return d;
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d
}

fn min_forward_slope(v: &[f64], grid: &Grid) -> (f64, usize) {
    v.windows(2).enumerate().map(|(i, w)| ((w[1] - w[0]) / grid.h, i)).fold((f64::INFINITY, 0), |a, b| {
        if b.0 < a.0 {
            b
        } else {
            a
        }
    })
}

/// Evolves `φ_t = α(φ') φ'' + drift β(φ') φ' + q(φ', φ, t)` with the monotone
/// scheme of [`crate::pde`], on the grid carrying the drift.
///
/// Snapshots follow `cfg.snapshot_every` exactly as in
/// [`crate::pde::solve_parabolic`], so profiles and trajectories built with
/// the same configuration share their time grid. Fails with
/// `MonotonicityLost` once a forward slope drops below `-10 h`.
pub fn evolve_profile(
    op: &IsotropicOperator,
    grid: Arc<Grid>,
    source: &SourceTerm,
    phi0: &[f64],
    bc: Boundary,
    cfg: &SolverConfig,
) -> Result<ComparisonProfile> {
    cfg.validate()?;
    if phi0.len() != grid.len() {
        return Err(Error::InvalidParameter("initial profile does not match the grid".into()));
    }
    let tol_mono = 10.0 * grid.h;
    let (n, dt) = cfg.steps();
    let every = cfg.snapshot_every.max(1);
    let mut u = phi0.to_vec();
    bc.apply(&mut u);
    let rate_at = |v: &[f64], t: f64| rates(&grid, v, &bc, op, t, cfg.eps, |g, x| source.q(g, x, t)).rate;
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut time_derivative = vec![rate_at(&u, 0.0)];
    for k in 1..=n {
        let t = (k - 1) as f64 * dt;
        u = advance(&grid, &u, &bc, op, source, t, dt, cfg.eps, cfg.cfl)?.0;
        let (slope, i) = min_forward_slope(&u, &grid);
        if slope < -tol_mono {
            return Err(Error::MonotonicityLost { slope, s: grid.nodes[i], t: k as f64 * dt });
        }
        if k % every == 0 || k == n {
            let tk = k as f64 * dt;
            time_derivative.push(rate_at(&u, tk));
            times.push(tk);
            values.push(u.clone());
        }
    }
    let derivative = values.iter().map(|v| spatial_derivative(v, grid.h)).collect();
    Ok(ComparisonProfile {
        grid,
        times,
        values,
        derivative,
        time_derivative,
        bc,
        dt,
        op: op.clone(),
        source: source.clone(),
        eps: cfg.eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTheorem {
    /// Concave, non-decreasing, pinned at zero.
    McDirichlet,
    /// Non-decreasing.
    McNeumann,
    /// Non-decreasing and pinned at zero.
    Decay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
    /// `(node index, time index)` of the worst value.
    pub location: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub theorem: ProfileTheorem,
    pub passed: bool,
    pub hypotheses: Vec<HypothesisCheck>,
}

fn worst_over<F: Fn(usize, usize) -> f64>(
    profile: &ComparisonProfile,
    nodes: impl Fn() -> std::ops::Range<usize>,
    f: F,
) -> (f64, (usize, usize)) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0, 0);
    for k in 0..profile.times.len() {
        for i in nodes() {
            let v = f(i, k);
            if v > worst {
                worst = v;
                at = (i, k);
            }
        }
    }
    (worst, at)
}

/// Audits the hypotheses a barrier must satisfy for the selected theorem.
///
/// Shape constraints use `10 h`; the differential inequality
/// `φ_t ≥ α φ'' + drift β φ' + q` is measured with the scheme's own
/// discretization at interior nodes against `10 (h² + dt)`.
pub fn check_profile_admissible(profile: &ComparisonProfile, theorem: ProfileTheorem) -> AdmissibilityReport {
    let h = profile.h();
    let n = profile.grid.len();
    let tol_shape = 10.0 * h;
    let mut hyps = Vec::new();
    let check = |name: &str, (worst, location): (f64, (usize, usize)), tolerance: f64| HypothesisCheck {
        name: name.into(),
        passed: worst <= tolerance,
        worst,
        tolerance,
        location,
    };

    hyps.push(check(
        "phi_s >= 0",
        worst_over(profile, || 0..n - 1, |i, k| -(profile.values[k][i + 1] - profile.values[k][i]) / h),
        tol_shape,
    ));
    if theorem == ProfileTheorem::McDirichlet {
        hyps.push(check(
            "phi_ss <= 0",
            worst_over(
                profile,
                || 1..n - 1,
                |i, k| {
                    let v = &profile.values[k];
                    (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h)
                },
            ),
            tol_shape,
        ));
    }
    if matches!(theorem, ProfileTheorem::McDirichlet | ProfileTheorem::Decay) {
        hyps.push(check("phi(0, t) = 0", worst_over(profile, || 0..1, |_, k| profile.values[k][0].abs()), 1e-12));
    }
    let tol_pde = 10.0 * (h * h + profile.dt);
    let lhs: Vec<Vec<f64>> = profile
        .times
        .iter()
        .zip(&profile.values)
        .map(|(&t, v)| {
            rates(&profile.grid, v, &profile.bc, &profile.op, t, profile.eps, |g, x| profile.source.q(g, x, t)).rate
        })
        .collect();
    hyps.push(check(
        "phi_t >= Q[phi]",
        worst_over(profile, || 1..n - 1, |i, k| lhs[k][i] - profile.time_derivative[k][i]),
        tol_pde,
    ));
    AdmissibilityReport { theorem, passed: hyps.iter().all(|c| c.passed), hypotheses: hyps }
}

/// Per-time monotone inverse `Ψ(·, t)` of a strictly increasing profile.
#[derive(Debug, Clone)]
pub struct InverseProfile {
    pub times: Vec<f64>,
    s: Vec<f64>,
    slices: Vec<MonotoneCubic>,
    slopes: Vec<Vec<f64>>,
}

/// Inverts every time slice; fails unless `φ_s > 0` on the whole table.
pub fn invert_profile(profile: &ComparisonProfile) -> Result<InverseProfile> {
    let min_slope = profile
        .derivative
        .iter()
        .flatten()
        .copied()
        .chain(profile.values.iter().flat_map(|v| v.windows(2).map(|w| (w[1] - w[0]) / profile.h())))
        .fold(f64::INFINITY, f64::min);
    if !(min_slope > 0.0) {
        return Err(Error::NotInvertible { min_slope });
    }
    let s = profile.grid.nodes.clone();
    let slices = profile.values.iter().map(|v| MonotoneCubic::new(v.clone(), s.clone())).collect::<Result<_>>()?;
    Ok(InverseProfile { times: profile.times.clone(), s, slices, slopes: profile.derivative.clone() })
}

impl InverseProfile {
    pub fn slice_at(&self, t: f64) -> Result<usize> {
        let k = self.times.partition_point(|&x| x < t - TIME_MATCH_TOL);
        if k < self.times.len() && (self.times[k] - t).abs() <= TIME_MATCH_TOL {
            Ok(k)
        } else {
            Err(Error::TimeMismatch(t))
        }
    }

    /// Value range `[φ(a, t_k), φ(b, t_k)]` of slice `k`.
    pub fn range(&self, k: usize) -> (f64, f64) {
        self.slices[k].x_range()
    }

    /// `Ψ(v, t_k)`; `RangeError` outside the slice's value range.
    pub fn psi(&self, k: usize, v: f64) -> Result<f64> {
        let (lo, hi) = self.range(k);
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if v < lo - slack || v > hi + slack {
            return Err(Error::Range { value: v, lo, hi });
        }
        Ok(self.slices[k].eval(v.clamp(lo, hi)))
    }

    /// `φ_s(Ψ(v, t_k), t_k)` by linear interpolation of the slope table.
    pub fn slope_at(&self, k: usize, v: f64) -> Result<f64> {
        let s = self.psi(k, v)?;
        Ok(interp_linear(&self.s, &self.slopes[k], s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Left end `a` of the barrier's domain.
    pub start: f64,
    /// Largest admissible `b_c - a`.
    pub max_span: f64,
    /// Cells of the uniform output grid.
    pub samples: usize,
    pub ode_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { start: 0.0, max_span: 100.0, samples: 1000, ode_tol: 1e-11 }
    }
}

/// Solves `α(φ', φ) φ'' - κ t β(φ', φ) φ' + b(φ, φ') = 0` from
/// `φ(a) = inf_u`, `φ'(a) = c` until `φ = sup_u` at `t = b_c`, and samples
/// the result on a uniform grid of `[a, b_c]` (one time slice).
pub fn barrier_elliptic(
    op: &IsotropicOperator,
    b: &SourceTerm,
    kappa: f64,
    u_range: (f64, f64),
    c: f64,
    opts: &BarrierOptions,
) -> Result<ComparisonProfile> {
    let (inf_u, sup_u) = u_range;
    if !(sup_u > inf_u) || !(c > 0.0) {
        return Err(Error::InvalidParameter("barrier needs sup_u > inf_u and c > 0".into()));
    }
    let a = opts.start;
    let rhs = |t: f64, y: &[f64; 2]| -> [f64; 2] {
        let g = y[1].abs();
        let al = op.alpha_at(g, y[0], 0.0);
        let be = op.beta_at(g, y[0], 0.0);
        [y[1], (kappa * t * be * y[1] - b.b(y[0], g)) / al]
    };
    let ode = OdeOptions::with_tol(opts.ode_tol);
    if !(op.alpha_at(c, inf_u, 0.0) > 0.0) {
        return Err(Error::DegenerateOperator(format!("α({c}) is not positive")));
    }
    let end = a + opts.max_span;
    let stop = integrate_with_event(rhs, a, [inf_u, c], end, &ode, |_, y| (sup_u - y[0]).min(y[1]))?;
    let (b_c, y_end) = match stop {
        Stop::Reached(_) => return Err(Error::DomainExhausted { span: opts.max_span }),
        Stop::Event { t, y } => (t, y),
    };
    if y_end[1] <= 0.0 && y_end[0] < sup_u - 1e-9 * (1.0 + sup_u.abs()) {
        return Err(Error::SlopeCollapse { t: b_c });
    }
    let n = opts.samples.max(16);
    let grid = Arc::new(Grid::uniform(a, b_c, n, &Drift::linear(kappa))?);
    let mut values = Vec::with_capacity(n + 1);
    let mut slopes = Vec::with_capacity(n + 1);
    let mut y = [inf_u, c];
    values.push(y[0]);
    slopes.push(y[1]);
    for j in 0..n {
        y = integrate(rhs, grid.nodes[j], y, grid.nodes[j + 1], &ode)?;
        values.push(y[0]);
        slopes.push(y[1]);
    }
    let source = SourceTerm::none();
    let mut profile =
        ComparisonProfile::from_table(grid, vec![0.0], vec![values], Boundary::free(), op.clone(), source)?;
    profile.derivative = vec![slopes];
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::shoot_1d_model;
    use crate::geometry::CurvatureParams;
    use crate::operators::{laplacian, p_laplacian};
    use std::f64::consts::PI;

    fn grid(a: f64, b: f64, m: usize, drift: &Drift) -> Arc<Grid> {
        Arc::new(Grid::uniform(a, b, m, drift).unwrap())
    }

    #[test]
    fn linear_profile_is_stationary() {
        let g = grid(0.0, 1.0, 50, &Drift::Zero);
        let phi0 = g.nodes.clone();
        let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.1).with_snapshots(100);
        let p = evolve_profile(&laplacian(), g.clone(), &SourceTerm::none(), &phi0, Boundary::free(), &cfg).unwrap();
        for v in &p.values {
            for (a, b) in v.iter().zip(&g.nodes) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let report = check_profile_admissible(&p, ProfileTheorem::McNeumann);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn separation_of_variables() {
        let r = 1.0;
        let k = PI / (2.0 * r);
        let mut errs = vec![];
        for m in [50, 100] {
            let g = grid(0.0, r, m, &Drift::Zero);
            let phi0: Vec<f64> = g.nodes.iter().map(|s| (k * s).sin()).collect();
            let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.1).with_snapshots(usize::MAX);
            let p = evolve_profile(&laplacian(), g.clone(), &SourceTerm::none(), &phi0, Boundary::mixed(0.0), &cfg)
                .unwrap();
            let t = *p.times.last().unwrap();
            let err = g
                .nodes
                .iter()
                .zip(p.values.last().unwrap())
                .map(|(s, v)| (v - (-k * k * t).exp() * (k * s).sin()).abs())
                .fold(0.0, f64::max);
            assert!(err < g.h * g.h + cfg.dt, "m = {m}: {err}");
            errs.push(err);
        }
        assert!(errs[0] / errs[1] >= 3.0);
    }

    #[test]
    fn model_eigenprofile_decays_by_lambda() {
        let params = CurvatureParams::interval(1.0, 0.0, 3.0).unwrap();
        let eig = shoot_1d_model(&laplacian(), &params, 1.0, 1.0).unwrap();
        let g = grid(0.0, 1.0, 100, &Drift::Model(params));
        let phi0: Vec<f64> = g.nodes.iter().map(|&s| interp_linear(&eig.grid, &eig.eigenfunction, s)).collect();
        let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.2).with_snapshots(usize::MAX);
        let p =
            evolve_profile(&laplacian(), g.clone(), &SourceTerm::none(), &phi0, Boundary::mixed(0.0), &cfg).unwrap();
        let t = *p.times.last().unwrap();
        let decay = (-eig.lambda * t).exp();
        let err = phi0.iter().zip(p.values.last().unwrap()).map(|(a, b)| (decay * a - b).abs()).fold(0.0, f64::max);
        assert!(err < 10.0 * (g.h + cfg.dt), "{err}");
        let report = check_profile_admissible(&p, ProfileTheorem::McDirichlet);
        assert!(report.passed, "{report:?}");
        assert!(check_profile_admissible(&p, ProfileTheorem::Decay).passed);
    }

    #[test]
    fn convex_profile_fails_dirichlet_audit() {
        let g = grid(0.0, 1.0, 40, &Drift::Zero);
        let p =
            ComparisonProfile::from_fn(g, vec![0.0, 0.1], Boundary::mixed(0.0), laplacian(), |s, _| s * s, |_, _| 2.0)
                .unwrap();
        let report = check_profile_admissible(&p, ProfileTheorem::McDirichlet);
        assert!(!report.passed);
        let concavity = report.hypotheses.iter().find(|h| h.name == "phi_ss <= 0").unwrap();
        assert!(!concavity.passed);
        assert!((concavity.worst - 2.0).abs() < 1e-9);
    }

    #[test]
    fn decreasing_profile_fails_monotonicity() {
        let g = grid(0.0, 1.0, 40, &Drift::Zero);
        let p = ComparisonProfile::from_fn(g, vec![0.0], Boundary::free(), laplacian(), |s, _| -s, |_, _| 0.0).unwrap();
        assert!(!check_profile_admissible(&p, ProfileTheorem::McNeumann).passed);
    }

    #[test]
    fn fast_decaying_profile_fails_inequality() {
        let g = grid(0.0, PI / 2.0, 40, &Drift::Zero);
        let p = ComparisonProfile::from_fn(
            g,
            vec![0.0, 0.01, 0.02],
            Boundary::mixed(0.0),
            laplacian(),
            |s, t| (-2.0 * t).exp() * s.sin(),
            |s, t| -2.0 * (-2.0 * t).exp() * s.sin(),
        )
        .unwrap();
        let report = check_profile_admissible(&p, ProfileTheorem::McDirichlet);
        let ineq = report.hypotheses.iter().find(|h| h.name == "phi_t >= Q[phi]").unwrap();
        assert!(!ineq.passed);
    }

    #[test]
    fn monotonicity_loss_is_reported() {
        let g = grid(0.0, 1.0, 40, &Drift::Zero);
        // A bump with a negative slope well beyond the 10 h allowance.
        let phi0: Vec<f64> = g.nodes.iter().map(|&s| s + 3.0 * (-(s - 0.5) * (s - 0.5) * 200.0).exp()).collect();
        let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.01);
        let err = evolve_profile(&laplacian(), g, &SourceTerm::none(), &phi0, Boundary::free(), &cfg).unwrap_err();
        assert!(matches!(err, Error::MonotonicityLost { .. }));
    }

    #[test]
    fn inversion_examples() {
        let g = grid(0.0, 1.0, 50, &Drift::Zero);
        let p = ComparisonProfile::from_fn(g.clone(), vec![0.0], Boundary::free(), laplacian(), |s, _| s, |_, _| 0.0)
            .unwrap();
        let inv = invert_profile(&p).unwrap();
        assert!((inv.psi(0, 0.37).unwrap() - 0.37).abs() < 1e-14);
        assert!(matches!(inv.psi(0, 1.5), Err(Error::Range { .. })));

        let g = grid(0.0, PI / 3.0, 50, &Drift::Zero);
        let p =
            ComparisonProfile::from_fn(g.clone(), vec![0.0], Boundary::free(), laplacian(), |s, _| s.sin(), |_, _| 0.0)
                .unwrap();
        let inv = invert_profile(&p).unwrap();
        assert!((inv.psi(0, 0.5).unwrap() - PI / 6.0).abs() <= 2.0 * g.h);
        assert!((inv.slope_at(0, 0.5).unwrap() - (PI / 6.0).cos()).abs() < 1e-3);
        for (s, v) in g.nodes.iter().zip(&p.values[0]) {
            assert!((inv.psi(0, *v).unwrap() - s).abs() <= 2.0 * g.h);
        }

        let g = grid(0.0, PI, 50, &Drift::Zero);
        let p = ComparisonProfile::from_fn(g, vec![0.0], Boundary::free(), laplacian(), |s, _| s.sin(), |_, _| 0.0)
            .unwrap();
        assert!(matches!(invert_profile(&p), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn barrier_flat_is_linear() {
        let p = barrier_elliptic(&laplacian(), &SourceTerm::none(), 0.0, (0.0, 1.0), 1.0, &BarrierOptions::default())
            .unwrap();
        let b_c = p.grid.end();
        assert!((b_c - 1.0).abs() < 1e-9);
        for (s, v) in p.s().iter().zip(&p.values[0]) {
            assert!((v - s).abs() < 1e-9);
        }
    }

    /// `∫_0^x e^{-τ²/2} dτ` by composite Simpson with 20000 panels.
    fn gauss_integral(x: f64) -> f64 {
        let n = 20000;
        let h = x / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp();
        let mut acc = f(0.0) + f(x);
        for j in 1..n {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn barrier_negative_kappa_matches_error_function() {
        let p = barrier_elliptic(&laplacian(), &SourceTerm::none(), -1.0, (0.0, 1.0), 1.0, &BarrierOptions::default())
            .unwrap();
        for (s, v) in p.s().iter().zip(&p.values[0]).step_by(50) {
            assert!((v - gauss_integral(*s)).abs() < 1e-8);
        }
        // b_c solves ∫_0^b e^{-τ²/2} dτ = 1.
        let b_c = p.grid.end();
        assert!((gauss_integral(b_c) - 1.0).abs() < 1e-8);
        assert!((b_c - 1.2755477364172156).abs() < 1e-8, "{b_c}");
    }

    #[test]
    fn barrier_reproduces_p_eigenfunction() {
        let op = p_laplacian(3.0).unwrap();
        let params = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
        let eig = shoot_1d_model(&op, &params, 1.0, 2.0).unwrap();
        let lambda = eig.lambda;
        let b = SourceTerm::elliptic(move |u, _| lambda * u.abs() * u);
        let top = 0.999 * eig.eigenfunction.last().unwrap();
        let p = barrier_elliptic(&op, &b, 0.0, (0.0, top), 1.0, &BarrierOptions::default()).unwrap();
        for (s, v) in p.s().iter().zip(&p.values[0]) {
            let e = interp_linear(&eig.grid, &eig.eigenfunction, *s);
            assert!((v - e).abs() < 1e-6, "s = {s}: {v} vs {e}");
        }
    }

    #[test]
    fn barrier_failures() {
        let collapse = SourceTerm::constant_b(10.0);
        let err =
            barrier_elliptic(&laplacian(), &collapse, 0.0, (0.0, 1.0), 1.0, &BarrierOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SlopeCollapse { .. }));
        let opts = BarrierOptions { max_span: 5.0, ..Default::default() };
        let err = barrier_elliptic(&laplacian(), &SourceTerm::none(), 0.0, (0.0, 10.0), 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::DomainExhausted { .. }));
    }

    #[test]
    fn comparison_of_ordered_profiles() {
        let g = grid(0.0, 1.0, 40, &Drift::linear(-1.0));
        let cfg = SolverConfig::new(0.3 * g.h * g.h, 0.05).with_snapshots(10);
        let lo: Vec<f64> = g.nodes.iter().map(|s| s * (2.0 - s)).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + 0.1).collect();
        let a = evolve_profile(&laplacian(), g.clone(), &SourceTerm::none(), &lo, Boundary::mixed(0.0), &cfg).unwrap();
        let b = evolve_profile(&laplacian(), g.clone(), &SourceTerm::none(), &hi, Boundary::mixed(0.1), &cfg).unwrap();
        for (k, t) in a.times.iter().enumerate() {
            for i in 0..g.len() {
                assert!(a.values[k][i] <= b.values[k][i] + 10.0 * (g.h * g.h + cfg.dt) * t);
            }
        }
    }
}
