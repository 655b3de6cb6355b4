//! Scenario pipelines: build the space and operator, solve, check, write.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use qcomp_core::comparison::{barrier_elliptic, evolve_profile, invert_profile, BarrierOptions, ComparisonProfile};
use qcomp_core::eigen::{
    neumann_1d_model, shoot_1d_model, shoot_weighted_interval, EigenBc, EigenResult, NeumannVariant,
};
use qcomp_core::expr::{Expr, Func, Jet};
use qcomp_core::geometry::{effective_bounds_with, model_density, CurvatureParams, Density, Ends, WeightedInterval};
use qcomp_core::io;
use qcomp_core::linalg::interp_linear;
use qcomp_core::operators::{Drift, IsotropicOperator, SourceTerm};
use qcomp_core::pde::{solve_elliptic, solve_parabolic, Boundary, Field1D, Grid, SolverConfig, Trajectory};
use qcomp_core::verify::{
    check_decay_with, check_eigen_comparison, check_gradient_bound, check_gradient_bound_field, check_mc_dominated,
    check_supersolution_boundary, check_two_point_drift, decay_rate_estimate, modulus_of_continuity, CheckReport,
    Location,
};
use qcomp_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{BcChoice, Config, CurvatureChoice, DensitySpec, Kind, Scenario, SpaceSpec};
use crate::report::{write_json, ScenarioReport, Summary};

/// Time-step halvings tried after a CFL failure.
const CFL_RETRIES: usize = 8;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
}

/// Runs every scenario, writes per-scenario reports and the run summary.
pub fn run_config(cfg: &Config, opts: &RunOptions) -> Result<(Summary, Vec<ScenarioReport>)> {
    fs::create_dir_all(&opts.out).with_context(|| format!("cannot create {}", opts.out.display()))?;
    let work = || cfg.scenarios.par_iter().map(|s| run_scenario(s, opts)).collect::<Result<Vec<_>>>();
    let reports = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?.install(work)?,
        None => work()?,
    };
    // Reports go through this single collector, in config order.
    for r in &reports {
        write_json(&opts.out.join(&r.id).join("report.json"), r)?;
    }
    let summary = Summary::new(opts.seed, &reports);
    write_json(&opts.out.join("summary.json"), &summary)?;
    summary.write_csv(&opts.out.join("summary.csv"))?;
    Ok((summary, reports))
}

/// FNV-1a, so a scenario's random stream depends only on its id and the seed.
fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Runs one scenario and writes its artifacts. Numerical failures become
/// report errors; only a failure to create the output directory is `Err`.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    let dir = opts.out.join(&s.id);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut ctx = Ctx { dir, data: s.outputs.data, plots: s.outputs.plots, ..Ctx::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ id_hash(&s.id));
    let outcome = catch_unwind(AssertUnwindSafe(|| execute(s, &mut rng, &mut ctx)));
    let (checks, error) = match outcome {
        Ok(Ok(checks)) if checks.is_empty() => (checks, Some("scenario produced no checks".to_string())),
        Ok(Ok(checks)) => (checks, None),
        Ok(Err(e)) => (Vec::new(), Some(format!("{e:#}"))),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (Vec::new(), Some(format!("panic: {msg}")))
        }
    };
    let passed = error.is_none() && checks.iter().all(|c| c.passed);
    Ok(ScenarioReport {
        id: s.id.clone(),
        kind: s.kind.name().to_string(),
        description: s.description.clone(),
        control: s.control,
        passed,
        ok: passed != s.control,
        error,
        checks,
        metadata: ctx.metadata,
        artifacts: ctx.artifacts,
    })
}

#[derive(Default)]
struct Ctx {
    dir: PathBuf,
    data: bool,
    plots: bool,
    artifacts: Vec<String>,
    metadata: BTreeMap<String, Value>,
}

impl Ctx {
    fn meta(&mut self, key: &str, v: impl Into<Value>) {
        self.metadata.insert(key.to_string(), v.into());
    }

    fn params(&mut self, p: &CurvatureParams) {
        self.meta("curvature", serde_json::to_value(p).unwrap_or(Value::Null));
    }

    fn emit(&mut self, on: bool, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if on {
            f(&self.dir.join(name)).with_context(|| format!("writing {name}"))?;
            self.artifacts.push(name.to_string());
        }
        Ok(())
    }

    fn data(&mut self, name: &str, f: impl FnOnce(&Path) -> qcomp_core::Result<()>) -> Result<()> {
        self.emit(self.data, name, |p| Ok(f(p)?))
    }

    fn plot(&mut self, name: &str, f: impl FnOnce(&Path) -> qcomp_core::Result<()>) -> Result<()> {
        self.emit(self.plots, name, |p| Ok(f(p)?))
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        self.emit(self.data, name, |p| write_json(p, v))
    }
}

fn execute(s: &Scenario, rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<Vec<CheckReport>> {
    let op = s.operator.build()?;
    ctx.meta("operator", op.name.clone());
    match s.kind {
        Kind::McDirichlet => modulus(s, &op, rng, ctx, false),
        Kind::McNeumann => modulus(s, &op, rng, ctx, true),
        Kind::Decay => decay(s, &op, rng, ctx),
        Kind::EigenDirichlet => eigen_dirichlet(s, &op, rng, ctx),
        Kind::EigenNeumann => eigen_neumann(s, &op, rng, ctx),
        Kind::Supersolution => supersolution(s, &op, rng, ctx),
        Kind::TwoPoint => two_point(s, rng, ctx),
        Kind::GradientParabolic => gradient_parabolic(s, &op, rng, ctx),
        Kind::GradientElliptic => gradient_elliptic(s, &op, rng, ctx),
        Kind::DecayRate => decay_rate(s, &op, rng, ctx),
    }
}

fn random_density(max: f64, rng: &mut ChaCha8Rng) -> Density {
    let a1 = rng.gen_range(-max..=max);
    let a2 = rng.gen_range(-max..=max);
    let a3 = rng.gen_range(-max..=max);
    let w = rng.gen_range(0.5..3.0);
    let c = rng.gen_range(0.0..2.0 * PI);
    let e = Expr::c(a1)
        .mul(Expr::s())
        .add(Expr::c(a2).mul(Expr::s().pow(2.0)))
        .add(Expr::c(a3).mul(Expr::call(Func::Sin, Expr::affine(w, c))));
    Density::Expr(e)
}

fn build_space(spec: &SpaceSpec, rng: &mut ChaCha8Rng) -> Result<WeightedInterval> {
    let density = match &spec.density {
        DensitySpec::Expr(e) => Density::Expr(e.clone()),
        DensitySpec::Model(p) => model_density(p, spec.length)?,
        DensitySpec::Random(r) => random_density(r.max_coefficient, rng),
    };
    Ok(WeightedInterval::new(spec.length, density, spec.intervals)?)
}

fn space_meta(ctx: &mut Ctx, space: &WeightedInterval) {
    ctx.meta("space", serde_json::to_value(space).unwrap_or(Value::Null));
}

fn resolve_params(s: &Scenario, space: &WeightedInterval, ends: Ends) -> Result<CurvatureParams> {
    match &s.curvature {
        CurvatureChoice::Explicit(p) => {
            p.validate()?;
            Ok(*p)
        }
        CurvatureChoice::Effective { .. } => {
            let big_n = s.big_n();
            let base = CurvatureParams::new(0.0, 0.0, big_n, 1)?;
            let (k, l) = effective_bounds_with(space, &base, ends);
            Ok(CurvatureParams::new(k, l, big_n, 1)?)
        }
    }
}

fn gamma_of(s: &Scenario, op: &IsotropicOperator) -> Result<f64> {
    s.gamma.or(op.gamma).ok_or_else(|| anyhow!("operator `{}` is not homogeneous; set gamma", op.name))
}

/// Scales a drift by `sign`, leaving the identity case untouched.
fn scaled(drift: Drift, sign: f64) -> Drift {
    if sign == 1.0 {
        drift
    } else {
        Drift::custom(move |x| sign * drift.at(x).unwrap_or(f64::NAN))
    }
}

fn solver_config(s: &Scenario, dt: f64) -> SolverConfig {
    let steps = (s.solver.t_end / dt).ceil().max(1.0) as usize;
    let cfg = SolverConfig::new(dt, s.solver.t_end).with_snapshots(steps / s.solver.snapshots);
    match s.solver.eps {
        Some(eps) => cfg.with_eps(eps),
        None => cfg,
    }
}

/// Runs `f` with the configured step, halving it after each CFL failure.
fn with_cfl_retry<T>(
    s: &Scenario,
    h: f64,
    ctx: &mut Ctx,
    f: impl Fn(&SolverConfig) -> qcomp_core::Result<T>,
) -> Result<(T, SolverConfig)> {
    let mut dt = s.solver.dt.unwrap_or(0.4 * h * h);
    for _ in 0..=CFL_RETRIES {
        let cfg = solver_config(s, dt);
        match f(&cfg) {
            Ok(v) => {
                ctx.meta("dt", cfg.steps().1);
                return Ok((v, cfg));
            }
            Err(Error::CflViolation { .. }) => dt *= 0.5,
            Err(e) => return Err(e.into()),
        }
    }
    bail!("time step still violates the CFL bound after {CFL_RETRIES} halvings")
}

fn field_from(s: &Scenario, grid: Arc<Grid>, bc: Boundary, default: impl Fn(f64) -> f64) -> Result<Field1D> {
    let a = s.amplitude;
    Ok(match &s.initial {
        Some(e) => Field1D::from_fn(grid, bc, |x| a * e.eval(x))?,
        None => Field1D::from_fn(grid, bc, |x| a * default(x))?,
    })
}

fn max_slope(values: &[f64], h: f64) -> f64 {
    values.windows(2).map(|w| ((w[1] - w[0]) / h).abs()).fold(0.0, f64::max)
}

fn end_location(t: f64) -> Location {
    Location { indices: Vec::new(), time: t }
}

fn write_trajectory(ctx: &mut Ctx, traj: &Trajectory) -> Result<()> {
    ctx.data("trajectory.csv", |p| io::write_trajectory_csv(p, traj))?;
    ctx.plot("sup_norm.dat", |p| io::write_sup_norm_dat(p, traj))?;
    let last = traj.field_at(traj.snapshots.len() - 1);
    ctx.plot("modulus.dat", |p| io::write_modulus_dat(p, &modulus_of_continuity(&last)))
}

fn modulus(
    s: &Scenario,
    op: &IsotropicOperator,
    rng: &mut ChaCha8Rng,
    ctx: &mut Ctx,
    neumann: bool,
) -> Result<Vec<CheckReport>> {
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let mut params = resolve_params(s, &space, Ends::Both)?;
    if neumann {
        // Only the Ricci bound enters the Neumann modulus.
        params.lambda = 0.0;
    }
    ctx.params(&params);
    let l = space.length;
    let g = Arc::new(Grid::from_interval(&space)?);
    let (u0, drift) = if neumann {
        let u0 = field_from(s, g.clone(), Boundary::neumann_zero(), |x| (PI * x / l).cos())?;
        let drift = if params.big_n.is_finite() { Drift::Model(params) } else { Drift::linear(params.kappa) };
        (u0, drift)
    } else {
        let u0 = field_from(s, g.clone(), Boundary::dirichlet_zero(), |x| (PI * x / l).sin())?;
        (u0, Drift::Model(params))
    };
    let pg = Arc::new(Grid::uniform(0.0, 0.5 * l, space.intervals / 2, &scaled(drift, s.perturb.drift_sign))?);
    let scale = s.perturb.profile_scale;
    let phi0: Vec<f64> = match (&s.profile_initial, neumann) {
        (Some(e), _) => pg.nodes.iter().map(|x| scale * s.amplitude * e.eval(*x)).collect(),
        // A Lipschitz bound of the datum gives a linear modulus.
        (None, true) => {
            let lip = max_slope(&u0.values, g.h);
            pg.nodes.iter().map(|x| scale * lip * x).collect()
        }
        (None, false) => pg.nodes.iter().map(|x| scale * s.amplitude * (PI * x / l).sin()).collect(),
    };
    let none = SourceTerm::none();
    let ((traj, profile), _) = with_cfl_retry(s, g.h, ctx, |cfg| {
        let traj = solve_parabolic(&u0, op, &none, cfg)?;
        let profile = evolve_profile(op, pg.clone(), &none, &phi0, Boundary::mixed(0.0), cfg)?;
        Ok((traj, profile))
    })?;
    let mut r = check_mc_dominated(&traj, &profile, s.tolerances.model)?;
    if r.metadata.get("profile_admissible").and_then(Value::as_bool) != Some(true) {
        r.passed = false;
    }
    write_trajectory(ctx, &traj)?;
    ctx.data("profile.csv", |p| io::write_profile_csv(p, &profile))?;
    Ok(vec![r])
}

fn eigen_json(e: &EigenResult) -> Value {
    json!({
        "lambda": e.lambda,
        "residual": e.residual,
        "residual_ok": e.residual_ok(),
        "bracket": [e.bracket.0, e.bracket.1],
        "bc": e.bc,
        "gamma": e.gamma,
        "iterations": e.iterations,
        "grid": {"start": e.grid[0], "end": e.grid[e.grid.len() - 1], "cells": e.grid.len() - 1},
    })
}

fn write_eigen(ctx: &mut Ctx, stem: &str, e: &EigenResult) -> Result<()> {
    ctx.json(&format!("{stem}.json"), &eigen_json(e))?;
    ctx.data(&format!("{stem}.csv"), |p| io::write_eigen_csv(p, e))
}

/// Interpolates an eigenfunction on its own grid.
fn eigen_fn(e: &EigenResult) -> impl Fn(f64) -> f64 + '_ {
    move |x| interp_linear(&e.grid, &e.eigenfunction, x)
}

fn decay(s: &Scenario, op: &IsotropicOperator, rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<Vec<CheckReport>> {
    let bc = s.bc_or(BcChoice::Dirichlet);
    let (ubc, mixed) = match bc {
        BcChoice::Dirichlet => (Boundary::dirichlet_zero(), false),
        BcChoice::Mixed => (Boundary::mixed(0.0), true),
        BcChoice::Neumann => bail!("decay needs a Dirichlet part of the boundary"),
    };
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let params = resolve_params(s, &space, bc.ends())?;
    ctx.params(&params);
    let gamma = gamma_of(s, op)?;
    let l = space.length;
    let radius = if mixed { l } else { 0.5 * l };
    let eig = shoot_1d_model(op, &params, radius, gamma)?;
    ctx.meta("lambda_model", eig.lambda);
    let phi1 = eigen_fn(&eig);
    let g = Arc::new(Grid::from_interval(&space)?);
    let u0 = field_from(s, g.clone(), ubc, |x| phi1(if mixed { x } else { x.min(l - x) }))?;
    let amp = s.amplitude * s.perturb.profile_scale;
    let cells = ((radius / g.h).round() as usize).max(16);
    let none = SourceTerm::none();
    let (traj, profile) = if gamma == 1.0 {
        // Separable barrier e^{-λt} φ₁ solves the model equation exactly.
        let (traj, _) = with_cfl_retry(s, g.h, ctx, |cfg| solve_parabolic(&u0, op, &none, cfg))?;
        let rate = eig.lambda * s.perturb.rate;
        let pg = Arc::new(Grid::uniform(0.0, radius, cells, &Drift::Zero)?);
        let profile = ComparisonProfile::from_fn(
            pg,
            traj.times(),
            Boundary::mixed(0.0),
            op.clone(),
            |x, t| amp * (-rate * t).exp() * phi1(x),
            |x, t| -rate * amp * (-rate * t).exp() * phi1(x),
        )?;
        (traj, profile)
    } else {
        if s.perturb.rate != 1.0 {
            bail!("perturb.rate needs the separable barrier of a linear operator");
        }
        let pg = Arc::new(Grid::uniform(0.0, radius, cells, &Drift::Model(params))?);
        let phi0: Vec<f64> = pg.nodes.iter().map(|x| amp * phi1(*x)).collect();
        let (pair, _) = with_cfl_retry(s, g.h, ctx, |cfg| {
            let traj = solve_parabolic(&u0, op, &none, cfg)?;
            let profile = evolve_profile(op, pg.clone(), &none, &phi0, Boundary::mixed(0.0), cfg)?;
            Ok((traj, profile))
        })?;
        pair
    };
    let r = check_decay_with(&traj, &profile, &space, s.tolerances.model)?;
    let mut checks = Vec::new();
    if let Some(ratio) = s.tolerances.max_slack_ratio {
        let slack = r.meta_f64("slack_max").unwrap_or(f64::INFINITY);
        let tol = ratio * r.tolerance_used;
        checks.push(
            CheckReport::new("decay_sharpness", slack, end_location(traj.last().t), tol).with("max_slack_ratio", ratio),
        );
    }
    checks.insert(0, r);
    write_trajectory(ctx, &traj)?;
    ctx.data("profile.csv", |p| io::write_profile_csv(p, &profile))?;
    write_eigen(ctx, "eigen_model", &eig)?;
    Ok(checks)
}

/// Optional sharpness requirement on the relative eigenvalue gap.
fn sharpness(s: &Scenario, r: &CheckReport, name: &str) -> Option<CheckReport> {
    let max_gap = s.tolerances.max_relative_gap?;
    let gap = r.meta_f64("relative_gap").map(f64::abs).unwrap_or(f64::INFINITY);
    Some(CheckReport::new(name, gap, end_location(0.0), max_gap))
}

fn eigen_dirichlet(
    s: &Scenario,
    op: &IsotropicOperator,
    rng: &mut ChaCha8Rng,
    ctx: &mut Ctx,
) -> Result<Vec<CheckReport>> {
    let bc = s.bc_or(BcChoice::Dirichlet);
    let ebc = match bc {
        BcChoice::Dirichlet => EigenBc::DirichletBoth,
        BcChoice::Mixed => EigenBc::DirichletLeftNeumannRight,
        BcChoice::Neumann => bail!("eigen_dirichlet needs a Dirichlet part of the boundary"),
    };
    let gamma = gamma_of(s, op)?;
    let mut checks = Vec::new();
    for rep in 0..s.repeat {
        let space = build_space(&s.space, rng)?;
        let radius = if bc == BcChoice::Mixed { space.length } else { 0.5 * space.length };
        let params = resolve_params(s, &space, bc.ends())?;
        let lm = shoot_weighted_interval(op, &space, ebc, gamma)?;
        let model = shoot_1d_model(op, &params, radius, gamma)?;
        let suffix = if s.repeat > 1 { format!("[{rep}]") } else { String::new() };
        let r = check_eigen_comparison(&lm, &model, s.tolerances.eigen_rel);
        let r = CheckReport { name: format!("{}{suffix}", r.name), ..r }
            .with("kappa", params.kappa)
            .with("lambda", params.lambda);
        if let Some(sharp) = sharpness(s, &r, &format!("eigen_sharpness{suffix}")) {
            checks.push(r);
            checks.push(sharp);
        } else {
            checks.push(r);
        }
        if rep == 0 {
            space_meta(ctx, &space);
            ctx.params(&params);
            write_eigen(ctx, "eigen_space", &lm)?;
            write_eigen(ctx, "eigen_model", &model)?;
            if !s.radius_sweep.is_empty() {
                let mut lambdas = Vec::with_capacity(s.radius_sweep.len());
                for &r in &s.radius_sweep {
                    lambdas.push(shoot_1d_model(op, &params, r, gamma)?.lambda);
                }
                let radii = s.radius_sweep.clone();
                ctx.plot("sweep.dat", |p| io::write_columns(p, &["R", "lambda"], &[radii, lambdas]))?;
            }
        }
    }
    Ok(checks)
}

fn eigen_neumann(
    s: &Scenario,
    op: &IsotropicOperator,
    rng: &mut ChaCha8Rng,
    ctx: &mut Ctx,
) -> Result<Vec<CheckReport>> {
    let gamma = gamma_of(s, op)?;
    let mut checks = Vec::new();
    for rep in 0..s.repeat {
        let space = build_space(&s.space, rng)?;
        let mut params = resolve_params(s, &space, Ends::Both)?;
        params.lambda = 0.0;
        let variant = s.neumann_variant.unwrap_or(if params.big_n.is_finite() {
            NeumannVariant::FiniteN
        } else {
            NeumannVariant::InfiniteN
        });
        let lm = shoot_weighted_interval(op, &space, EigenBc::NeumannBoth, gamma)?;
        let model = neumann_1d_model(op, params.kappa, &params, space.length, gamma, variant)?;
        let suffix = if s.repeat > 1 { format!("[{rep}]") } else { String::new() };
        let r = check_eigen_comparison(&lm, &model, s.tolerances.eigen_rel);
        let r = CheckReport { name: format!("{}{suffix}", r.name), ..r }.with("kappa", params.kappa);
        let sharp = sharpness(s, &r, &format!("eigen_sharpness{suffix}"));
        checks.push(r);
        checks.extend(sharp);
        if rep == 0 {
            space_meta(ctx, &space);
            ctx.params(&params);
            ctx.meta("neumann_variant", serde_json::to_value(variant)?);
            write_eigen(ctx, "eigen_space", &lm)?;
            write_eigen(ctx, "eigen_model", &model)?;
        }
    }
    Ok(checks)
}

fn supersolution(
    s: &Scenario,
    op: &IsotropicOperator,
    rng: &mut ChaCha8Rng,
    ctx: &mut Ctx,
) -> Result<Vec<CheckReport>> {
    let ends = s.bc_or(BcChoice::Dirichlet).ends();
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let params = resolve_params(s, &space, ends)?;
    ctx.params(&params);
    let radius = if ends == Ends::Left { space.length } else { 0.5 * space.length };
    let phi = s.phi.clone().unwrap_or_else(|| Expr::call(Func::Sin, Expr::affine(PI / (2.0 * radius), 0.0)));
    let a = s.amplitude;
    let jet = |d: f64| {
        let j = phi.jet(d);
        Jet { v: a * j.v, d1: a * j.d1, d2: a * j.d2 }
    };
    Ok(vec![check_supersolution_boundary(&jet, &space, op, &params, ends)?])
}

fn two_point(s: &Scenario, rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<Vec<CheckReport>> {
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let mut params = resolve_params(s, &space, Ends::Both)?;
    params.lambda = 0.0;
    ctx.params(&params);
    Ok(vec![check_two_point_drift(&space, &params)?])
}

/// Same values on a grid stretched by `1 / factor`: slopes scale by `factor`.
fn rescale_slope(p: ComparisonProfile, factor: f64) -> Result<ComparisonProfile> {
    if factor == 1.0 {
        return Ok(p);
    }
    if !(factor > 0.0) {
        bail!("perturb.barrier_slope must be positive");
    }
    let (a, b) = (p.grid.start(), p.grid.end());
    let g = Arc::new(Grid::uniform(a, a + (b - a) / factor, p.grid.cells(), &Drift::Zero)?);
    Ok(ComparisonProfile::from_table(g, p.times, p.values, p.bc, p.op, p.source)?)
}

fn gradient_kappa(s: &Scenario, space: &WeightedInterval, ctx: &mut Ctx) -> Result<f64> {
    let params = resolve_params(s, space, Ends::Both)?;
    if params.big_n.is_finite() {
        bail!("gradient barriers use the N = inf Ricci bound; set big_n to \"inf\"");
    }
    ctx.params(&params);
    Ok(params.kappa)
}

fn gradient_parabolic(
    s: &Scenario,
    op: &IsotropicOperator,
    rng: &mut ChaCha8Rng,
    ctx: &mut Ctx,
) -> Result<Vec<CheckReport>> {
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let kappa = gradient_kappa(s, &space, ctx)?;
    let l = space.length;
    let g = Arc::new(Grid::from_interval(&space)?);
    let u0 = field_from(s, g.clone(), Boundary::neumann_zero(), |x| (PI * (x - 0.5 * l) / l).sin())?;
    // φ0(s) = u0(L/2) + Lip(u0) (s - L/2) covers the range of u0 and has
    // inverse slope at most 1 / Lip.
    let slope = max_slope(&u0.values, g.h);
    let mid = interp_linear(&g.nodes, &u0.values, 0.5 * l);
    let pg = Arc::new(Grid::uniform(0.0, l, space.intervals, &Drift::linear(kappa))?);
    let phi0: Vec<f64> = pg.nodes.iter().map(|x| mid + slope * (x - 0.5 * l)).collect();
    let pbc = Boundary::dirichlet_values(phi0[0], phi0[phi0.len() - 1]);
    let none = SourceTerm::none();
    let ((traj, profile), _) = with_cfl_retry(s, g.h, ctx, |cfg| {
        let traj = solve_parabolic(&u0, op, &none, cfg)?;
        let profile = evolve_profile(op, pg.clone(), &none, &phi0, pbc, cfg)?;
        Ok((traj, profile))
    })?;
    let profile = rescale_slope(profile, s.perturb.barrier_slope)?;
    let inverse = invert_profile(&profile)?;
    let tol = s.tolerances.model * (g.h + traj.dt);
    let r = check_gradient_bound(&traj, &inverse, tol)?.with("initial_lipschitz", slope);
    write_trajectory(ctx, &traj)?;
    ctx.data("profile.csv", |p| io::write_profile_csv(p, &profile))?;
    Ok(vec![r])
}

fn gradient_elliptic(
    s: &Scenario,
    op: &IsotropicOperator,
    rng: &mut ChaCha8Rng,
    ctx: &mut Ctx,
) -> Result<Vec<CheckReport>> {
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let kappa = gradient_kappa(s, &space, ctx)?;
    let big_b = s.b.ok_or_else(|| anyhow!("gradient_elliptic needs b"))?;
    let b = SourceTerm::constant_b(big_b);
    let g = Arc::new(Grid::from_interval(&space)?);
    let (u, _) = with_cfl_retry(s, g.h, ctx, |cfg| solve_elliptic(op, &b, g.clone(), Boundary::dirichlet_zero(), cfg))?;
    let lo = u.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lip = max_slope(&u.values, g.h);
    let c = s.barrier_slope.unwrap_or(1.05 * lip);
    ctx.meta("barrier_slope", c);
    ctx.meta("solution_lipschitz", lip);
    let barrier = barrier_elliptic(op, &b, kappa, (lo, hi), c, &BarrierOptions::default())?;
    let barrier = rescale_slope(barrier, s.perturb.barrier_slope)?;
    let inverse = invert_profile(&barrier)?;
    let tol = s.tolerances.model * g.h;
    let r = check_gradient_bound_field(&u, &inverse, tol)?;
    let values = u.values.clone();
    let nodes = g.nodes.clone();
    ctx.plot("solution.dat", |p| io::write_columns(p, &["s", "u"], &[nodes, values]))?;
    ctx.data("barrier.csv", |p| io::write_profile_csv(p, &barrier))?;
    Ok(vec![r])
}

fn decay_rate(s: &Scenario, op: &IsotropicOperator, rng: &mut ChaCha8Rng, ctx: &mut Ctx) -> Result<Vec<CheckReport>> {
    let bc = s.bc_or(BcChoice::Dirichlet);
    let (ubc, mixed) = match bc {
        BcChoice::Dirichlet => (Boundary::dirichlet_zero(), false),
        BcChoice::Mixed => (Boundary::mixed(0.0), true),
        BcChoice::Neumann => bail!("decay_rate needs a Dirichlet part of the boundary"),
    };
    let space = build_space(&s.space, rng)?;
    space_meta(ctx, &space);
    let l = space.length;
    let g = Arc::new(Grid::from_interval(&space)?);
    let k = if mixed { 0.5 * PI / l } else { PI / l };
    let u0 = field_from(s, g.clone(), ubc, |x| (k * x).sin())?;
    let none = SourceTerm::none();
    let (traj, _) = with_cfl_retry(s, g.h, ctx, |cfg| solve_parabolic(&u0, op, &none, cfg))?;
    let rate = decay_rate_estimate(&traj)?;
    ctx.meta("rate", rate);
    let at = end_location(traj.last().t);
    let r = match s.expected_rate {
        Some(target) => CheckReport::new("decay_rate", ((rate - target) / target).abs(), at, s.tolerances.rate_rel)
            .with("rate", rate)
            .with("expected_rate", target),
        None => {
            let gamma = gamma_of(s, op)?;
            if gamma != 1.0 {
                bail!("a rate bound by the model eigenvalue needs gamma = 1; set expected_rate");
            }
            let params = resolve_params(s, &space, bc.ends())?;
            ctx.params(&params);
            let radius = if mixed { l } else { 0.5 * l };
            let lambda = shoot_1d_model(op, &params, radius, gamma)?.lambda;
            CheckReport::new("decay_rate", 1.0 - rate / lambda, at, s.tolerances.rate_rel)
                .with("rate", rate)
                .with("lambda_model", lambda)
        }
    };
    write_trajectory(ctx, &traj)?;
    Ok(vec![r])
}
