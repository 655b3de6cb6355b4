//! Explicit monotone finite-difference schemes for `u_t = Q[u] + q` and
//! pseudo-time relaxation for the steady problem `Q[u] + b = 0`.
//!
//! The second-order term is a centered difference in flux form, the drift
//! term is upwinded by its sign, and the gradient norm fed to the lower-order
//! terms is the centered difference regularized by `eps`. Every update is
//! non-decreasing in the neighboring values under the audited step bound.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{WarpedModel, WeightedInterval};
use crate::operators::{Drift, IsotropicOperator, SourceTerm, DEFAULT_EPS};

/// Sup-norm beyond which a run is declared unstable.
pub const OVERFLOW_NORM: f64 = 1e12;

/// Uniform grid with the drift sampled at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub h: f64,
    pub drift: Vec<f64>,
}

impl Grid {
    /// `m + 1` nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, m: usize, drift: &Drift) -> Result<Self> {
        if !(b > a) || m < 2 {
            return Err(Error::InvalidParameter(format!("bad grid [{a}, {b}] with {m} cells")));
        }
        let h = (b - a) / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|i| if i == m { b } else { a + i as f64 * h }).collect();
        let drift = nodes.iter().map(|&s| drift.at(s)).collect::<Result<_>>()?;
        Ok(Self { nodes, h, drift })
    }

    pub fn from_interval(space: &WeightedInterval) -> Result<Self> {
        let drift = Drift::Density(space.density.clone());
        Self::uniform(0.0, space.length, space.intervals, &drift)
    }

    /// Nodes `s_min = 3h, …, R`; the pole is excluded.
    pub fn from_warped(model: &WarpedModel) -> Result<Self> {
        let nodes = model.nodes();
        let drift = nodes.iter().map(|&s| model.drift(s)).collect::<Result<_>>()?;
        Ok(Self { nodes, h: model.h(), drift })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

/// Condition at one end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    Dirichlet(f64),
    /// Zero flux, imposed by ghost-node reflection.
    Neumann,
    /// No condition; the end value is linearly extrapolated.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    pub left: Bc,
    pub right: Bc,
}

impl Boundary {
    pub fn dirichlet_zero() -> Self {
        Self::dirichlet_values(0.0, 0.0)
    }

    pub fn dirichlet_values(g0: f64, g1: f64) -> Self {
        Self { left: Bc::Dirichlet(g0), right: Bc::Dirichlet(g1) }
    }

    pub fn neumann_zero() -> Self {
        Self { left: Bc::Neumann, right: Bc::Neumann }
    }

    /// Pinned at the left end, reflecting at the right end.
    pub fn mixed(g0: f64) -> Self {
        Self { left: Bc::Dirichlet(g0), right: Bc::Neumann }
    }

    pub fn free() -> Self {
        Self { left: Bc::Free, right: Bc::Free }
    }

    pub fn apply(&self, u: &mut [f64]) {
        let n = u.len();
        match self.left {
            Bc::Dirichlet(g) => u[0] = g,
            Bc::Free => u[0] = 2.0 * u[1] - u[2],
            Bc::Neumann => {}
        }
        match self.right {
            Bc::Dirichlet(g) => u[n - 1] = g,
            Bc::Free => u[n - 1] = 2.0 * u[n - 2] - u[n - 3],
            Bc::Neumann => {}
        }
    }

    fn evolves(bc: Bc) -> bool {
        bc == Bc::Neumann
    }
}

/// Discrete solution at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub time: f64,
    pub bc: Boundary,
}

impl Field1D {
    pub fn new(grid: Arc<Grid>, mut values: Vec<f64>, time: f64, bc: Boundary) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        if let Bc::Dirichlet(g) = bc.left {
            values[0] = g;
        }
        if let Bc::Dirichlet(g) = bc.right {
            let n = values.len();
            values[n - 1] = g;
        }
        Ok(Self { grid, values, time, bc })
    }

    pub fn from_fn(grid: Arc<Grid>, bc: Boundary, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes.iter().map(|&s| f(s)).collect();
        Self::new(grid, values, 0.0, bc)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default = "default_snapshot")]
    pub snapshot_every: usize,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_cfl() -> f64 {
    0.9
}

fn default_snapshot() -> usize {
    1
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, eps: DEFAULT_EPS, cfl: 0.9, t_end, snapshot_every: 1 }
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every.max(1);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("dt, eps must be positive and t_end non-negative".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 0.9], got {}", self.cfl)));
        }
        Ok(())
    }

    /// Number of steps and the adjusted step landing exactly on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let n = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// Per-node rates of the scheme together with the stability bound it needs.
pub(crate) struct Rates {
    pub rate: Vec<f64>,
    /// `max (α(D⁺u) + α(D⁻u))/h²`.
    pub diffusion: f64,
    /// `max` of the diffusion bound plus `|drift| B'(Du)/h`.
    pub total: f64,
}

/// Evaluates the scheme rate at every evolving node:
/// `(A(D⁺u) - A(D⁻u))/h + drift B(Du_upwind) + lower(g, u)`, where
/// `A' = α`, `B(z) = β(|z|) z` and `g` is the regularized centered slope.
/// For gradient-independent `α` the first term is exactly `α D²u`; in
/// general the flux form keeps the update monotone in the neighbors.
pub(crate) fn rates(
    grid: &Grid,
    u: &[f64],
    bc: &Boundary,
    op: &IsotropicOperator,
    t: f64,
    eps: f64,
    lower: impl Fn(f64, f64) -> f64,
) -> Rates {
    let n = u.len();
    let h = grid.h;
    let h2 = h * h;
    let mut rate = vec![0.0; n];
    let mut diffusion: f64 = 0.0;
    let mut total: f64 = 0.0;
    for i in 0..n {
        let boundary = i == 0 || i == n - 1;
        if boundary {
            let side = if i == 0 { bc.left } else { bc.right };
            if !Boundary::evolves(side) {
                continue;
            }
        }
        let (um, up) = if i == 0 {
            (u[1], u[1])
        } else if i == n - 1 {
            (u[n - 2], u[n - 2])
        } else {
            (u[i - 1], u[i + 1])
        };
        let dp = (up - u[i]) / h;
        let dm = (u[i] - um) / h;
        let g = (0.5 * (dp + dm)).abs().max(eps);
        let x = u[i];
        let mut r = (op.alpha_primitive(dp, x, t) - op.alpha_primitive(dm, x, t)) / h + lower(g, x);
        let mut adv = 0.0;
        let d = grid.drift[i];
        if !boundary && d != 0.0 {
            let du = if d > 0.0 { dp } else { dm };
            r += d * op.beta_flux(du, x, t);
            adv = d.abs() * op.beta_flux_slope(du, x, t, eps) / h;
        }
        rate[i] = r;
        let diff = (op.alpha_at(dp.abs().max(eps), x, t) + op.alpha_at(dm.abs().max(eps), x, t)) / h2;
        diffusion = diffusion.max(diff);
        total = total.max(diff + adv);
    }
    Rates { rate, diffusion, total }
}

fn stable(r: &Rates, dt: f64, cfl: f64) -> bool {
    dt * r.diffusion <= cfl && dt * r.total <= 1.0
}

fn norm_check(u: &[f64]) -> Result<()> {
    let norm = u.iter().fold(0.0_f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
    if norm > OVERFLOW_NORM {
        Err(Error::Overflow { norm })
    } else {
        Ok(())
    }
}

/// One explicit step of size `dt` with a single CFL halving retry.
/// Returns the new values and the rate evaluated at the start of the step.
pub(crate) fn advance(
    grid: &Grid,
    u: &[f64],
    bc: &Boundary,
    op: &IsotropicOperator,
    source: &SourceTerm,
    t: f64,
    dt: f64,
    eps: f64,
    cfl: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let eval = |v: &[f64], tt: f64| rates(grid, v, bc, op, tt, eps, |g, x| source.q(g, x, tt));
    let r = eval(u, t);
    let limit = |r: &Rates| (cfl / r.diffusion).min(1.0 / r.total);
    let euler = |v: &[f64], r: &Rates, k: f64| -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().zip(&r.rate).map(|(a, b)| a + k * b).collect();
        bc.apply(&mut out);
        out
    };
    if stable(&r, dt, cfl) {
        let out = euler(u, &r, dt);
        norm_check(&out)?;
        return Ok((out, r.rate));
    }
    let half = 0.5 * dt;
    if !stable(&r, half, cfl) {
        return Err(Error::CflViolation { dt, limit: limit(&r) });
    }
    let mid = euler(u, &r, half);
    let r2 = eval(&mid, t + half);
    if !stable(&r2, half, cfl) {
        return Err(Error::CflViolation { dt: half, limit: limit(&r2) });
    }
    let out = euler(&mid, &r2, half);
    norm_check(&out)?;
    let avg = r.rate.iter().zip(&r2.rate).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok((out, avg))
}

/// One explicit step of size `cfg.dt`.
pub fn step_parabolic(
    field: &Field1D,
    op: &IsotropicOperator,
    source: &SourceTerm,
    cfg: &SolverConfig,
) -> Result<Field1D> {
    cfg.validate()?;
    let (values, _) = advance(&field.grid, &field.values, &field.bc, op, source, field.time, cfg.dt, cfg.eps, cfg.cfl)?;
    Ok(Field1D { grid: field.grid.clone(), values, time: field.time + cfg.dt, bc: field.bc })
}

/// Stored time slice of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Arc<Grid>,
    pub bc: Boundary,
    /// Step actually used (adjusted to land on `t_end`).
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }

    pub fn field_at(&self, k: usize) -> Field1D {
        Field1D {
            grid: self.grid.clone(),
            values: self.snapshots[k].values.clone(),
            time: self.snapshots[k].t,
            bc: self.bc,
        }
    }
}

/// Evolves `u0` to `cfg.t_end`, storing the initial state, every
/// `snapshot_every`-th step and the final state.
pub fn solve_parabolic(
    u0: &Field1D,
    op: &IsotropicOperator,
    source: &SourceTerm,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let (n, dt) = cfg.steps();
    let every = cfg.snapshot_every.max(1);
    let mut u = u0.values.clone();
    u0.bc.apply(&mut u);
    let mut snapshots = vec![Snapshot { t: u0.time, values: u.clone() }];
    for k in 1..=n {
        let t = u0.time + (k - 1) as f64 * dt;
        u = advance(&u0.grid, &u, &u0.bc, op, source, t, dt, cfg.eps, cfg.cfl)?.0;
        if k % every == 0 || k == n {
            snapshots.push(Snapshot { t: u0.time + k as f64 * dt, values: u.clone() });
        }
    }
    Ok(Trajectory { grid: u0.grid.clone(), bc: u0.bc, dt, snapshots })
}

/// Steady-state residual `max |α D²u + β drift Du + b(u, |Du|)|` over
/// interior nodes, discretized exactly as in the relaxation.
pub fn residual_elliptic(field: &Field1D, op: &IsotropicOperator, b: &SourceTerm, eps: f64) -> f64 {
    let r = rates(&field.grid, &field.values, &field.bc, op, field.time, eps, |g, u| b.b(u, g));
    r.rate.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Maximum relaxation sweeps for [`solve_elliptic`].
pub const ELLIPTIC_MAX_STEPS: usize = 5_000_000;

/// Relaxes `u_τ = Q[u] + b(u, |Du|)` from the linear interpolant of the
/// boundary data until the residual drops below `1e-8 (1 + ‖b‖∞)`.
pub fn solve_elliptic(
    op: &IsotropicOperator,
    b: &SourceTerm,
    grid: Arc<Grid>,
    bc: Boundary,
    cfg: &SolverConfig,
) -> Result<Field1D> {
    let (g0, g1) = match (bc.left, bc.right) {
        (Bc::Dirichlet(a), Bc::Dirichlet(c)) => (a, c),
        _ => return Err(Error::InvalidParameter("elliptic problems need Dirichlet data at both ends".into())),
    };
    let (a, l) = (grid.start(), grid.end() - grid.start());
    let init: Vec<f64> = grid.nodes.iter().map(|s| g0 + (g1 - g0) * (s - a) / l).collect();
    solve_elliptic_from(op, b, Field1D::new(grid, init, 0.0, bc)?, cfg)
}

/// As [`solve_elliptic`], starting from a given field.
pub fn solve_elliptic_from(
    op: &IsotropicOperator,
    b: &SourceTerm,
    start: Field1D,
    cfg: &SolverConfig,
) -> Result<Field1D> {
    let grid = start.grid.clone();
    let bc = start.bc;
    let mut u = start.values;
    let eps = cfg.eps;
    let mut last_res = f64::INFINITY;
    for _ in 0..ELLIPTIC_MAX_STEPS {
        let r = rates(&grid, &u, &bc, op, 0.0, eps, |g, x| b.b(x, g));
        let b_sup = u.iter().fold(0.0_f64, |m, &x| m.max(b.b(x, 0.0).abs()));
        let res = r.rate.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        last_res = res;
        if res < 1e-8 * (1.0 + b_sup) {
            return Ok(Field1D { grid, values: u, time: 0.0, bc });
        }
        let dt = (cfg.cfl / r.diffusion).min(1.0 / r.total);
        if !dt.is_finite() {
            return Err(Error::DegenerateOperator("relaxation step is unbounded".into()));
        }
        for (x, v) in u.iter_mut().zip(&r.rate) {
            *x += dt * v;
        }
        bc.apply(&mut u);
        norm_check(&u)?;
    }
    Err(Error::NonConvergence {
        iterations: ELLIPTIC_MAX_STEPS,
        value: u.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        residual: last_res,
    })
}
