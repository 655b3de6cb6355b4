//! Numerical checks turning each comparison statement into a pass/fail
//! report with an explicit tolerance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::comparison::{check_profile_admissible, ComparisonProfile, InverseProfile, ProfileTheorem};
use crate::eigen::EigenResult;
use crate::error::{Error, Result};
use crate::expr::Jet;
use crate::geometry::{effective_bounds_with, t_kappa_lambda, BigN, CurvatureParams, Ends, WeightedInterval};
use crate::linalg::{interp_linear, linear_fit};
use crate::operators::{radial_value, Drift, IsotropicOperator, DEFAULT_EPS};
use crate::pde::{Bc, Field1D, Snapshot, Trajectory};

/// Scheme-error allowance: checks on evolved data use `TOL_MODEL (h + dt)`.
pub const DEFAULT_TOL_MODEL: f64 = 20.0;
/// Relative slack allowed in eigenvalue comparisons.
pub const DEFAULT_EIGEN_REL_TOL: f64 = 1e-4;

/// Discrete modulus `ω(s) = max_{|x-y| ≤ 2s} (u(y) - u(x)) / 2` at
/// `s_k = k h / 2`, `k = 0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub s: Vec<f64>,
    pub omega: Vec<f64>,
    pub time: f64,
}

fn modulus_of_values(values: &[f64], h: f64, time: f64) -> ModulusCurve {
    let n = values.len();
    let mut omega = vec![0.0_f64; n];
    for k in 1..n {
        let at_k = (0..n - k).map(|i| (values[i + k] - values[i]).abs()).fold(0.0, f64::max);
        omega[k] = omega[k - 1].max(0.5 * at_k);
    }
    let s = (0..n).map(|k| 0.5 * k as f64 * h).collect();
    ModulusCurve { s, omega, time }
}

/// Exact discrete modulus by scanning all node pairs.
pub fn modulus_of_continuity(field: &Field1D) -> ModulusCurve {
    modulus_of_values(&field.values, field.grid.h, field.time)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub indices: Vec<usize>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub worst_location: Location,
    pub tolerance_used: f64,
    pub metadata: BTreeMap<String, Value>,
}

impl CheckReport {
    /// `passed` is derived as `worst_violation ≤ tolerance` (false for NaN).
    pub fn new(name: &str, worst_violation: f64, worst_location: Location, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst_violation <= tolerance,
            worst_violation,
            worst_location,
            tolerance_used: tolerance,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(Value::as_f64)
    }
}

/// Running maximum with its location.
#[derive(Debug, Clone)]
struct Worst {
    value: f64,
    loc: Location,
}

impl Worst {
    fn new() -> Self {
        Self { value: f64::NEG_INFINITY, loc: Location { indices: vec![], time: 0.0 } }
    }

    fn offer(&mut self, value: f64, indices: &[usize], time: f64) {
        if value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.loc = Location { indices: indices.to_vec(), time };
        }
    }
}

fn theorem_of(profile: &ComparisonProfile) -> ProfileTheorem {
    let pinned = profile.bc.left == Bc::Dirichlet(0.0);
    if pinned {
        ProfileTheorem::McDirichlet
    } else {
        ProfileTheorem::McNeumann
    }
}

/// Checks `ω(s, t) ≤ φ(s, t) + tol_model (h + dt)` at every snapshot.
///
/// `φ` is read on the profile grid by linear interpolation and must cover
/// `[0, D/2]`. The admissibility audit of the profile is recorded in the
/// metadata (concavity is only audited for pinned profiles).
pub fn check_mc_dominated(traj: &Trajectory, profile: &ComparisonProfile, tol_model: f64) -> Result<CheckReport> {
    let h = traj.grid.h;
    let half = 0.5 * (traj.grid.end() - traj.grid.start());
    if profile.grid.end() < half - 1e-9 * (1.0 + half) || profile.grid.start().abs() > 1e-12 {
        return Err(Error::PreconditionFailed(format!(
            "profile covers [{}, {}] but the modulus needs [0, {half}]",
            profile.grid.start(),
            profile.grid.end()
        )));
    }
    let tol = tol_model * (h + traj.dt);
    let mut worst = Worst::new();
    for snap in &traj.snapshots {
        let k = profile.slice_at(snap.t)?;
        let curve = modulus_of_values(&snap.values, h, snap.t);
        for (i, (&s, &w)) in curve.s.iter().zip(&curve.omega).enumerate() {
            let phi = interp_linear(profile.s(), &profile.values[k], s);
            worst.offer(w - phi, &[i], snap.t);
        }
    }
    let audit = check_profile_admissible(profile, theorem_of(profile));
    Ok(CheckReport::new("mc_dominated", worst.value, worst.loc, tol)
        .with("profile_admissible", audit.passed)
        .with("h", h)
        .with("dt", traj.dt)
        .with("snapshots", traj.snapshots.len()))
}

/// Distance to the boundary at `s`; only the left end counts when the
/// trajectory has a Neumann right end.
fn boundary_distance(traj: &Trajectory, s: f64) -> f64 {
    let (a, b) = (traj.grid.start(), traj.grid.end());
    match traj.bc.right {
        Bc::Neumann => s - a,
        _ => (s - a).min(b - s),
    }
}

/// Checks `u(s, t) ≤ φ(d(s, ∂M), t) + tol_model (h + dt)`.
///
/// The slack `φ(d) - u` is summarized in the metadata as `slack_min` and
/// `slack_max` over all nodes and snapshots.
pub fn check_decay(traj: &Trajectory, profile: &ComparisonProfile, space: &WeightedInterval) -> Result<CheckReport> {
    check_decay_with(traj, profile, space, DEFAULT_TOL_MODEL)
}

pub fn check_decay_with(
    traj: &Trajectory,
    profile: &ComparisonProfile,
    space: &WeightedInterval,
    tol_model: f64,
) -> Result<CheckReport> {
    if (traj.grid.end() - traj.grid.start() - space.length).abs() > 1e-9 * (1.0 + space.length) {
        return Err(Error::PreconditionFailed("trajectory grid does not span the space".into()));
    }
    let h = traj.grid.h;
    let tol = tol_model * (h + traj.dt);
    let d: Vec<f64> = traj.grid.nodes.iter().map(|&s| boundary_distance(traj, s)).collect();
    let barrier = |snap: &Snapshot| -> Result<Vec<f64>> {
        let k = profile.slice_at(snap.t)?;
        Ok(d.iter().map(|&x| interp_linear(profile.s(), &profile.values[k], x)).collect())
    };

    let first = &traj.snapshots[0];
    let phi0 = barrier(first)?;
    let scale = phi0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let init_tol = 1e-8 * (1.0 + scale);
    if let Some((i, excess)) =
        first.values.iter().zip(&phi0).map(|(u, p)| u - p).enumerate().find(|(_, e)| *e > init_tol)
    {
        return Err(Error::PreconditionFailed(format!("initial data exceeds the barrier by {excess:e} at node {i}")));
    }

    let mut worst = Worst::new();
    let mut slack_max = f64::NEG_INFINITY;
    for snap in &traj.snapshots {
        let phi = barrier(snap)?;
        for (i, (u, p)) in snap.values.iter().zip(&phi).enumerate() {
            worst.offer(u - p, &[i], snap.t);
            slack_max = slack_max.max(p - u);
        }
    }
    Ok(CheckReport::new("decay", worst.value, worst.loc, tol)
        .with("slack_min", -worst.value)
        .with("slack_max", slack_max)
        .with("h", h)
        .with("dt", traj.dt))
}

/// Checks that `v = φ(d(·, ∂M))` satisfies
/// `Q[v] ≤ (α φ'' - (N-1) T_{κ,Λ} β φ')(d) + tol` with the space's own drift.
///
/// `phi` returns `(φ, φ', φ'')` at a distance. Boundary nodes and the
/// non-smooth midpoint of a two-sided distance are skipped. The curvature hypothesis is audited
/// against [`effective_bounds_with`]; a shortfall counts as a violation.
pub fn check_supersolution_boundary(
    phi: &dyn Fn(f64) -> Jet,
    space: &WeightedInterval,
    op: &IsotropicOperator,
    params: &CurvatureParams,
    ends: Ends,
) -> Result<CheckReport> {
    if params.big_n == BigN::Infinite && (params.kappa != 0.0 || params.lambda != 0.0) {
        return Err(Error::InvalidParameter("the N = ∞ model drift needs κ = Λ = 0".into()));
    }
    let model = Drift::Model(*params);
    let own = Drift::Density(space.density.clone());
    let len = space.length;
    let h = space.h();
    let mut rows = Vec::new();
    let mut scale: f64 = 0.0;
    for (i, s) in space.nodes().into_iter().enumerate() {
        let (d, sign) = match ends {
            Ends::Left => (s, 1.0),
            Ends::Both if (s - 0.5 * len).abs() < 0.5 * h => continue,
            Ends::Both if s < 0.5 * len => (s, 1.0),
            Ends::Both => (len - s, -1.0),
        };
        if d < 0.5 * h {
            continue;
        }
        let j = phi(d);
        let lhs = radial_value(op, own.at(s)?, sign * j.d1, j.d2, DEFAULT_EPS);
        let rhs = radial_value(op, model.at(d)?, j.d1, j.d2, DEFAULT_EPS);
        scale = scale.max(lhs.abs()).max(rhs.abs());
        rows.push((i, lhs - rhs));
    }
    let tol = 1e-8 * (1.0 + scale);
    let mut worst = Worst::new();
    let mut slack_min = f64::INFINITY;
    for (i, v) in rows {
        worst.offer(v, &[i], 0.0);
        slack_min = slack_min.min(-v);
    }
    let (k_eff, l_eff) = effective_bounds_with(space, params, ends);
    let shortfall = (params.kappa - k_eff).max(params.lambda - l_eff);
    let inequality_worst = worst.value;
    // Equality in the hypothesis is admissible; only a genuine shortfall counts.
    if shortfall > 0.0 && shortfall > worst.value {
        worst.value = shortfall;
        worst.loc = Location { indices: vec![], time: 0.0 };
    }
    Ok(CheckReport::new("supersolution_boundary", worst.value, worst.loc, tol)
        .with("kappa_eff", k_eff)
        .with("lambda_eff", l_eff)
        .with("hypothesis_shortfall", shortfall)
        .with("inequality_worst", inequality_worst)
        .with("slack_max", -inequality_worst)
        .with("slack_min", slack_min))
}

/// Checks, over all node pairs `x < y`,
/// `f'(y) - f'(x) ≥ 2 (N-1) T_{κ,0}((y-x)/2)` for finite `N` and
/// `f'(y) - f'(x) ≥ κ (y - x)` for `N = ∞`. Pairs whose half-distance
/// reaches the first zero of `C_{κ,0}` are skipped and counted.
pub fn check_two_point_drift(space: &WeightedInterval, params: &CurvatureParams) -> Result<CheckReport> {
    let nodes = space.nodes();
    let fp: Vec<f64> = nodes.iter().map(|&s| space.density.d1(s)).collect();
    let n = nodes.len();
    let h = space.h();
    let t0 = CurvatureParams { lambda: 0.0, ..*params };
    // Right-hand side depends only on the index gap on a uniform grid.
    let rhs: Vec<Option<f64>> = (0..n)
        .map(|k| {
            let gap = k as f64 * h;
            match params.big_n.minus_one() {
                Some(nm1) => t_kappa_lambda(&t0, 0.5 * gap).ok().map(|t| 2.0 * nm1 * t),
                None => Some(params.kappa * gap),
            }
        })
        .collect();
    let tol = 1e-8 * (1.0 + fp.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let mut worst = Worst::new();
    let mut skipped = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            match rhs[j - i] {
                Some(r) => worst.offer(r - (fp[j] - fp[i]), &[i, j], 0.0),
                None => skipped += 1,
            }
        }
    }
    Ok(CheckReport::new("two_point_drift", worst.value, worst.loc, tol)
        .with("slack_min", -worst.value)
        .with("skipped_pairs", skipped))
}

/// Checks, per snapshot, the pairwise bound
/// `Ψ(u(y), t) - Ψ(u(x), t) - |y - x| ≤ tol` and the pointwise bound
/// `|Du| ≤ φ'(Ψ(u), t) + tol` at interior nodes.
///
/// An inverse with a single slice is stationary and serves every snapshot.
pub fn check_gradient_bound(traj: &Trajectory, inverse: &InverseProfile, tol: f64) -> Result<CheckReport> {
    let x = &traj.grid.nodes;
    let h = traj.grid.h;
    let n = x.len();
    let stationary = inverse.times.len() == 1;
    let mut pair = Worst::new();
    let mut point = Worst::new();
    for snap in &traj.snapshots {
        let k = if stationary { 0 } else { inverse.slice_at(snap.t)? };
        let u = &snap.values;
        let psi = u.iter().map(|&v| inverse.psi(k, v)).collect::<Result<Vec<_>>>()?;
        // max_{i<j} (ψ_j - x_j) - (ψ_i - x_i) and (ψ_i + x_i) - (ψ_j + x_j).
        let (mut lo, mut lo_i) = (psi[0] - x[0], 0);
        let (mut hi, mut hi_i) = (psi[0] + x[0], 0);
        for j in 1..n {
            pair.offer(psi[j] - x[j] - lo, &[lo_i, j], snap.t);
            pair.offer(hi - psi[j] - x[j], &[hi_i, j], snap.t);
            if psi[j] - x[j] < lo {
                lo = psi[j] - x[j];
                lo_i = j;
            }
            if psi[j] + x[j] > hi {
                hi = psi[j] + x[j];
                hi_i = j;
            }
        }
        for i in 1..n - 1 {
            let du = ((u[i + 1] - u[i - 1]) / (2.0 * h)).abs();
            point.offer(du - inverse.slope_at(k, u[i])?, &[i], snap.t);
        }
    }
    let (worst, loc) =
        if pair.value >= point.value { (pair.value, pair.loc.clone()) } else { (point.value, point.loc.clone()) };
    Ok(CheckReport::new("gradient_bound", worst, loc, tol)
        .with("pairwise_worst", pair.value)
        .with("pointwise_worst", point.value)
        .with("pairwise_passed", pair.value <= tol)
        .with("pointwise_passed", point.value <= tol))
}

/// [`check_gradient_bound`] for a single stationary field.
pub fn check_gradient_bound_field(field: &Field1D, inverse: &InverseProfile, tol: f64) -> Result<CheckReport> {
    let traj = Trajectory {
        grid: field.grid.clone(),
        bc: field.bc,
        dt: 0.0,
        snapshots: vec![Snapshot { t: field.time, values: field.values.clone() }],
    };
    check_gradient_bound(&traj, inverse, tol)
}

/// Passes iff `λ_M ≥ λ_model (1 - rel_tol)`; the violation is the relative
/// deficit `(λ_model - λ_M) / λ_model`. Unconverged inputs fail outright.
pub fn check_eigen_comparison(lambda_m: &EigenResult, lambda_model: &EigenResult, rel_tol: f64) -> CheckReport {
    let (lm, lo) = (lambda_m.lambda, lambda_model.lambda);
    let converged = lambda_m.residual_ok() && lambda_model.residual_ok();
    let deficit = if converged { (lo - lm) / lo.abs().max(f64::MIN_POSITIVE) } else { f64::INFINITY };
    CheckReport::new("eigen_comparison", deficit, Location { indices: vec![], time: 0.0 }, rel_tol)
        .with("lambda_m", lm)
        .with("lambda_model", lo)
        .with("gap", lm - lo)
        .with("relative_gap", (lm - lo) / lo.abs().max(f64::MIN_POSITIVE))
        .with("converged", converged)
        .with("residuals", json!([lambda_m.residual, lambda_model.residual]))
}

/// Least-squares slope `-d log‖u‖∞ / dt` over snapshots with `t ≥ t_end / 2`.
pub fn decay_rate_estimate(traj: &Trajectory) -> Result<f64> {
    let t_end = traj.last().t;
    let t0 = traj.snapshots[0].t;
    let window: Vec<(f64, f64)> =
        traj.times().into_iter().zip(traj.sup_norms()).filter(|(t, _)| *t >= t0 + 0.5 * (t_end - t0)).collect();
    if window.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} snapshots in the fit window", window.len())));
    }
    if let Some((t, _)) = window.iter().find(|(_, v)| !(*v > 1e-280)) {
        return Err(Error::DegenerateFit(format!("sup-norm vanished at t = {t}")));
    }
    if window.windows(2).any(|w| !(w[1].1 < w[0].1)) {
        return Err(Error::DegenerateFit("sup-norm is not decreasing over the fit window".into()));
    }
    let (ts, logs): (Vec<f64>, Vec<f64>) = window.iter().map(|(t, v)| (*t, v.ln())).unzip();
    let (slope, _) =
        linear_fit(&ts, &logs).ok_or_else(|| Error::DegenerateFit("singular least-squares system".into()))?;
    Ok(-slope)
}
