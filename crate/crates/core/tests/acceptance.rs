//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines appear in plain
//! `cargo test` output. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use qcomp_core::comparison::{barrier_elliptic, evolve_profile, invert_profile, BarrierOptions, ComparisonProfile};
use qcomp_core::eigen::{
    neumann_1d_model, shoot_1d_model, shoot_weighted_interval, EigenBc, EigenResult, NeumannVariant,
};
use qcomp_core::expr::{Expr, Func, Jet};
use qcomp_core::geometry::{
    effective_bounds_with, model_density, model_interval, BigN, CurvatureParams, Density, Ends, WeightedInterval,
};
use qcomp_core::linalg::interp_linear;
use qcomp_core::operators::{
    catalog, homogeneity_check, laplacian, normalized_p_laplacian, p_laplacian, Drift, IsotropicOperator, RadialJet,
    SourceTerm, CATALOG_NAMES,
};
use qcomp_core::pde::{solve_elliptic, solve_parabolic, Boundary, Field1D, Grid, SolverConfig, Trajectory};
use qcomp_core::verify::{
    check_decay, check_eigen_comparison, check_gradient_bound, check_gradient_bound_field, check_mc_dominated,
    check_supersolution_boundary, check_two_point_drift, decay_rate_estimate, DEFAULT_TOL_MODEL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `π_p = 2π / (p sin(π/p))`, frozen from an independent quadrature of
/// `2 ∫_0^1 (1 - t^p)^{-1/p} dt`.
const PI_P: [(f64, f64); 3] = [(1.5, 4.836798304624581), (3.0, 2.4183991523122903), (4.0, 2.221441469079183)];

/// Collects failed expectations with a short reason each.
#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn within(&mut self, elapsed: Duration, limit: f64, what: &str) {
        let secs = elapsed.as_secs_f64();
        self.expect(secs < limit, format!("{what} took {secs:.2} s (limit {limit} s)"));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn grid(a: f64, b: f64, m: usize, drift: &Drift) -> Arc<Grid> {
    Arc::new(Grid::uniform(a, b, m, drift).unwrap())
}

fn criterion_1(o: &mut Outcome) {
    let runs: [(&str, f64, Box<dyn Fn() -> EigenResult>); 3] = [
        (
            "model R=1",
            PI * PI / 4.0,
            Box::new(|| {
                shoot_1d_model(&laplacian(), &CurvatureParams::interval(0.0, 0.0, 3.0).unwrap(), 1.0, 1.0).unwrap()
            }),
        ),
        (
            "flat [0,pi] dirichlet",
            1.0,
            Box::new(|| {
                shoot_weighted_interval(
                    &laplacian(),
                    &WeightedInterval::flat(PI, 400).unwrap(),
                    EigenBc::DirichletBoth,
                    1.0,
                )
                .unwrap()
            }),
        ),
        (
            "neumann model D=pi",
            1.0,
            Box::new(|| {
                let params = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
                neumann_1d_model(&laplacian(), 0.0, &params, PI, 1.0, NeumannVariant::FiniteN).unwrap()
            }),
        ),
    ];
    for (name, exact, run) in runs {
        let t = Instant::now();
        let r = run();
        o.within(t.elapsed(), 1.0, name);
        let err = (r.lambda - exact).abs();
        o.expect(err <= 1e-6, format!("{name}: |{} - {exact}| = {err:e}", r.lambda));
        o.note(format!("{name} err {err:.1e}"));
    }
}

fn criterion_2(o: &mut Outcome) {
    let d = PI;
    let params = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
    let mut worst: f64 = 0.0;
    for (p, pi_p) in PI_P {
        let closed = 2.0 * PI / (p * (PI / p).sin());
        o.expect(rel(closed, pi_p) < 1e-14, format!("pi_p closed form mismatch at p = {p}"));
        let exact = (p - 1.0) * (pi_p / d).powf(p);
        let op = p_laplacian(p).unwrap();
        for variant in [NeumannVariant::FiniteN, NeumannVariant::InfiniteN] {
            let r = neumann_1d_model(&op, 0.0, &params, d, p - 1.0, variant).unwrap();
            let e = rel(r.lambda, exact);
            worst = worst.max(e);
            o.expect(e <= 1e-5, format!("p = {p} {variant:?}: {} vs {exact} (rel {e:e})", r.lambda));
        }
    }
    o.note(format!("worst rel {worst:.1e}"));
}

fn criterion_3(o: &mut Outcome) {
    let t = Instant::now();
    let ops = [(laplacian(), 1.0), (p_laplacian(2.5).unwrap(), 1.5)];
    let mut worst: f64 = 0.0;
    for kappa in [-1.0, 0.0, 1.0] {
        for lambda in [-0.3, 0.0, 0.3] {
            let params = CurvatureParams::interval(kappa, lambda, 3.0).unwrap();
            let space = model_interval(&params, 1.0, 400).unwrap();
            for (op, gamma) in &ops {
                let m = shoot_weighted_interval(op, &space, EigenBc::DirichletLeftNeumannRight, *gamma).unwrap();
                let model = shoot_1d_model(op, &params, 1.0, *gamma).unwrap();
                let e = rel(m.lambda, model.lambda);
                worst = worst.max(e);
                o.expect(e <= 1e-6, format!("{} κ={kappa} Λ={lambda}: rel {e:e}", op.name));
            }
        }
    }
    o.within(t.elapsed(), 30.0, "sharpness sweep");
    o.note(format!("18 pairs, worst rel {worst:.1e}"));
}

/// `a1 s + a2 s² + a3 sin(w s + c)` with modest coefficients.
fn random_density(rng: &mut ChaCha8Rng) -> Density {
    let a1 = rng.gen_range(-1.0..1.0);
    let a2 = rng.gen_range(-0.5..0.5);
    let a3 = rng.gen_range(-0.3..0.3);
    let w = rng.gen_range(0.5..3.0);
    let c = rng.gen_range(0.0..PI);
    let e = Expr::c(a1)
        .mul(Expr::s())
        .add(Expr::c(a2).mul(Expr::s().pow(2.0)))
        .add(Expr::c(a3).mul(Expr::call(Func::Sin, Expr::affine(w, c))));
    Density::Expr(e)
}

fn criterion_4(o: &mut Outcome) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let ops = [(laplacian(), 1.0), (p_laplacian(2.5).unwrap(), 1.5)];
    let finite = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
    let infinite = CurvatureParams::new(0.0, 0.0, BigN::Infinite, 1).unwrap();
    let mut worst_deficit = f64::NEG_INFINITY;
    let mut cases = 0;
    for bc in ["dirichlet", "mixed", "neumann_finite_n", "neumann_infinite_n"] {
        for _ in 0..10 {
            let len = rng.gen_range(0.8..2.0);
            let space = WeightedInterval::new(len, random_density(&mut rng), 400).unwrap();
            for (op, gamma) in &ops {
                let result = (|| -> qcomp_core::Result<_> {
                    Ok(match bc {
                        "dirichlet" | "mixed" => {
                            let (ends, ebc, radius) = if bc == "dirichlet" {
                                (Ends::Both, EigenBc::DirichletBoth, 0.5 * len)
                            } else {
                                (Ends::Left, EigenBc::DirichletLeftNeumannRight, len)
                            };
                            let (k, l) = effective_bounds_with(&space, &finite, ends);
                            let params = CurvatureParams::interval(k, l, 3.0)?;
                            (
                                shoot_weighted_interval(op, &space, ebc, *gamma)?,
                                shoot_1d_model(op, &params, radius, *gamma)?,
                            )
                        }
                        "neumann_finite_n" => {
                            let (k, _) = effective_bounds_with(&space, &finite, Ends::Both);
                            let m = shoot_weighted_interval(op, &space, EigenBc::NeumannBoth, *gamma)?;
                            (m, neumann_1d_model(op, k, &finite, len, *gamma, NeumannVariant::FiniteN)?)
                        }
                        _ => {
                            let (k, _) = effective_bounds_with(&space, &infinite, Ends::Both);
                            let m = shoot_weighted_interval(op, &space, EigenBc::NeumannBoth, *gamma)?;
                            (m, neumann_1d_model(op, k, &infinite, len, *gamma, NeumannVariant::InfiniteN)?)
                        }
                    })
                })();
                cases += 1;
                match result {
                    Ok((m, model)) => {
                        let r = check_eigen_comparison(&m, &model, 1e-4);
                        worst_deficit = worst_deficit.max(r.worst_violation);
                        o.expect(r.passed, format!("{bc} {}: {:?}", op.name, r.metadata));
                    }
                    Err(e) => o.expect(false, format!("{bc} {}: {e}", op.name)),
                }
            }
        }
    }
    o.within(t.elapsed(), 120.0, "fuzz sweep");
    o.note(format!("{cases} cases, worst relative deficit {worst_deficit:.1e}"));
}

/// Heat-type flow of `sin` on `[0, π]` and its barrier evolved from `sin`
/// on `[0, π/2]`; returns the worst violation of the modulus check.
fn mc_run(op: &IsotropicOperator, density: &Density, params: &CurvatureParams, m: usize) -> (f64, f64, bool) {
    let space = WeightedInterval::new(PI, density.clone(), m).unwrap();
    let g = Arc::new(Grid::from_interval(&space).unwrap());
    let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.5).with_snapshots(((0.5 / (0.4 * g.h * g.h)) as usize) / 20);
    let u0 = Field1D::from_fn(g, Boundary::dirichlet_zero(), f64::sin).unwrap();
    let traj = solve_parabolic(&u0, op, &SourceTerm::none(), &cfg).unwrap();
    let pg = grid(0.0, PI / 2.0, m / 2, &Drift::Model(*params));
    let phi0: Vec<f64> = pg.nodes.iter().map(|s| s.sin()).collect();
    let profile = evolve_profile(op, pg, &SourceTerm::none(), &phi0, Boundary::mixed(0.0), &cfg).unwrap();
    let r = check_mc_dominated(&traj, &profile, DEFAULT_TOL_MODEL).unwrap();
    let admissible = r.metadata["profile_admissible"].as_bool().unwrap();
    (r.worst_violation, r.tolerance_used, r.passed && admissible)
}

fn criterion_5(o: &mut Outcome) {
    let t = Instant::now();
    let model = CurvatureParams::interval(0.0, -0.2, 3.0).unwrap();
    let md = model_density(&model, PI).unwrap();
    let space = WeightedInterval::new(PI, md.clone(), 200).unwrap();
    let (k, l) = effective_bounds_with(&space, &model, Ends::Both);
    o.expect(k >= -1e-12 && l >= -0.2 - 1e-12, format!("model density bounds ({k}, {l})"));
    let flat = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
    let ops = [laplacian(), normalized_p_laplacian(3.0).unwrap()];
    for op in &ops {
        for (fname, density, params) in [("f=0", Density::zero(), flat), ("f=model", md.clone(), model)] {
            let (coarse, tol_c, ok_c) = mc_run(op, &density, &params, 100);
            let (fine, tol_f, ok_f) = mc_run(op, &density, &params, 200);
            o.expect(
                ok_c && ok_f,
                format!("{} {fname}: violation {coarse:e} / {fine:e} vs tol {tol_c:e} / {tol_f:e}", op.name),
            );
            // ω(0) = φ(0) = 0 makes the violation non-negative; only a
            // positive violation can shrink.
            let shrink = if coarse > 0.0 { coarse / fine.max(f64::MIN_POSITIVE) } else { f64::INFINITY };
            o.expect(shrink >= 2.0 || coarse <= 0.0, format!("{} {fname}: shrink factor {shrink}", op.name));
            o.note(format!("{} {fname} {coarse:.1e}->{fine:.1e}", op.name));
        }
    }
    o.within(t.elapsed(), 120.0, "modulus sweep");
}

/// `e^{-λ t} φ₁(s)` on `g` at the given times.
fn eigen_profile(eig: &EigenResult, g: Arc<Grid>, times: Vec<f64>, lambda: f64) -> ComparisonProfile {
    let phi = |s: f64| interp_linear(&eig.grid, &eig.eigenfunction, s);
    ComparisonProfile::from_fn(
        g,
        times,
        Boundary::mixed(0.0),
        laplacian(),
        |s, t| (-lambda * t).exp() * phi(s),
        |s, t| -lambda * (-lambda * t).exp() * phi(s),
    )
    .unwrap()
}

fn decay_case(
    o: &mut Outcome,
    name: &str,
    space: &WeightedInterval,
    bc: Boundary,
    eig: &EigenResult,
    op: &IsotropicOperator,
) {
    let g = Arc::new(Grid::from_interval(space).unwrap());
    let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.5).with_snapshots(((0.5 / (0.4 * g.h * g.h)) as usize) / 25);
    let d_of = |s: f64| if bc.right == qcomp_core::pde::Bc::Neumann { s } else { s.min(space.length - s) };
    let u0 = Field1D::from_fn(g.clone(), bc, |s| interp_linear(&eig.grid, &eig.eigenfunction, d_of(s))).unwrap();
    let traj = solve_parabolic(&u0, op, &SourceTerm::none(), &cfg).unwrap();
    let lambda = eig.lambda;
    let pg = grid(0.0, eig.grid[eig.grid.len() - 1], 400, &Drift::Zero);
    let profile = eigen_profile(eig, pg, traj.times(), lambda);
    let r = check_decay(&traj, &profile, space).unwrap();
    let tol = r.tolerance_used;
    let (lo, hi) = (r.meta_f64("slack_min").unwrap(), r.meta_f64("slack_max").unwrap());
    o.expect(r.passed, format!("{name}: violation {:e} > tol {tol:e}", r.worst_violation));
    o.expect(
        lo >= -tol && hi <= 5.0 * tol,
        format!("{name}: slack [{lo:e}, {hi:e}] outside [-{tol:e}, {:e}]", 5.0 * tol),
    );
    o.note(format!("{name} slack [{lo:.1e}, {hi:.1e}] tol {tol:.1e}"));
}

fn criterion_6(o: &mut Outcome) {
    let params = CurvatureParams::interval(1.0, 0.0, 3.0).unwrap();
    let space = model_interval(&params, 1.0, 200).unwrap();
    let eig = shoot_1d_model(&laplacian(), &params, 1.0, 1.0).unwrap();
    decay_case(o, "model κ=1", &space, Boundary::mixed(0.0), &eig, &laplacian());

    let flat = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
    let eig = shoot_1d_model(&laplacian(), &flat, 1.0, 1.0).unwrap();
    decay_case(
        o,
        "flat [0,2]",
        &WeightedInterval::flat(2.0, 200).unwrap(),
        Boundary::dirichlet_zero(),
        &eig,
        &laplacian(),
    );
}

fn criterion_7(o: &mut Outcome) {
    let g = grid(0.0, PI, 100, &Drift::Zero);
    let cfg = SolverConfig::new(0.4 * g.h * g.h, 3.0).with_snapshots(200);
    let u0 = Field1D::from_fn(g, Boundary::dirichlet_zero(), f64::sin).unwrap();
    let rate = decay_rate_estimate(&solve_parabolic(&u0, &laplacian(), &SourceTerm::none(), &cfg).unwrap()).unwrap();
    o.expect((rate - 1.0).abs() <= 0.02, format!("heat rate {rate}"));
    o.note(format!("heat rate {rate:.5}"));

    let params = CurvatureParams::interval(1.0, 0.0, 3.0).unwrap();
    let op = normalized_p_laplacian(3.0).unwrap();
    let eig = shoot_1d_model(&op, &params, 1.0, 1.0).unwrap();
    let space = model_interval(&params, 1.0, 100).unwrap();
    let g = Arc::new(Grid::from_interval(&space).unwrap());
    let cfg = SolverConfig::new(0.4 * g.h * g.h, 2.0).with_snapshots(200);
    let u0 = Field1D::from_fn(g, Boundary::mixed(0.0), |s| interp_linear(&eig.grid, &eig.eigenfunction, s)).unwrap();
    let rate = decay_rate_estimate(&solve_parabolic(&u0, &op, &SourceTerm::none(), &cfg).unwrap()).unwrap();
    o.expect(rate >= eig.lambda * 0.98, format!("normalized p=3 rate {rate} < 0.98 λ₁ = {}", 0.98 * eig.lambda));
    o.note(format!("normalized p=3 rate {rate:.5} vs λ₁ {:.5}", eig.lambda));
}

fn sine_jet(d: f64) -> Jet {
    Jet { v: (1.2 * d).sin(), d1: 1.2 * (1.2 * d).cos(), d2: -1.44 * (1.2 * d).sin() }
}

fn criterion_8(o: &mut Outcome) {
    let t = Instant::now();
    let ops = [
        laplacian(),
        p_laplacian(2.5).unwrap(),
        normalized_p_laplacian(3.0).unwrap(),
        catalog("mean_curvature", &Default::default()).unwrap(),
    ];
    let mut near_eq: f64 = f64::INFINITY;
    for kappa in [-1.0, 0.0, 1.0] {
        for lambda in [-0.3, 0.0, 0.3] {
            let params = CurvatureParams::interval(kappa, lambda, 3.0).unwrap();
            let space = model_interval(&params, 1.0, 200).unwrap();
            for op in &ops {
                let r = check_supersolution_boundary(&sine_jet, &space, op, &params, Ends::Left).unwrap();
                let slack = r.meta_f64("slack_min").unwrap();
                near_eq = near_eq.min(slack);
                o.expect(
                    r.passed && slack >= -1e-8,
                    format!("supersolution {} κ={kappa} Λ={lambda}: slack {slack:e}", op.name),
                );
            }
            if lambda == 0.0 {
                let r = check_two_point_drift(&space, &params).unwrap();
                let slack = r.meta_f64("slack_min").unwrap();
                near_eq = near_eq.min(slack);
                o.expect(r.passed && slack >= -1e-8, format!("two-point κ={kappa}: slack {slack:e}"));
            }
        }
    }

    // Strictly better curved than the claimed model.
    let better = CurvatureParams::interval(0.5, 0.0, 3.0).unwrap();
    let space = model_interval(&better, 1.0, 200).unwrap();
    let claim = CurvatureParams::interval(0.0, 0.0, 3.0).unwrap();
    for op in &ops {
        let r = check_supersolution_boundary(&sine_jet, &space, op, &claim, Ends::Left).unwrap();
        o.expect(
            r.passed && r.worst_violation < 0.0,
            format!("strict supersolution {}: {:e}", op.name, r.worst_violation),
        );
    }
    let r = check_two_point_drift(&space, &claim).unwrap();
    o.expect(r.passed && r.worst_violation < 0.0, format!("strict two-point: {:e}", r.worst_violation));
    let convex = WeightedInterval::new(1.0, Density::parse("s^2").unwrap(), 200).unwrap();
    let inf1 = CurvatureParams::new(1.0, 0.0, BigN::Infinite, 1).unwrap();
    let r = check_two_point_drift(&convex, &inf1).unwrap();
    o.expect(r.passed && r.worst_violation < 0.0, format!("strict two-point N=∞: {:e}", r.worst_violation));

    // Negative controls.
    let greedy = CurvatureParams::interval(1.0, 0.0, 3.0).unwrap();
    let r = check_supersolution_boundary(&sine_jet, &space, &laplacian(), &greedy, Ends::Left).unwrap();
    o.expect(!r.passed, "control: overclaimed κ passes the supersolution check");
    let greedy_l = CurvatureParams::interval(0.5, 0.5, 3.0).unwrap();
    let r = check_supersolution_boundary(&sine_jet, &space, &laplacian(), &greedy_l, Ends::Left).unwrap();
    o.expect(!r.passed, "control: overclaimed Λ passes the supersolution check");
    let concave = WeightedInterval::new(1.0, Density::parse("-20 * s^2").unwrap(), 200).unwrap();
    let inf0 = CurvatureParams::new(0.0, 0.0, BigN::Infinite, 1).unwrap();
    o.expect(!check_two_point_drift(&concave, &inf0).unwrap().passed, "control: concave density passes two-point");
    o.expect(!check_two_point_drift(&space, &greedy).unwrap().passed, "control: overclaimed κ passes two-point");

    o.within(t.elapsed(), 30.0, "supersolution and two-point checks");
    o.note(format!("near-equality slack min {near_eq:.1e}"));
}

/// `φ̃(s) = φ(a + 0.9 (s - a))`: the same values on a domain stretched by 1/0.9.
fn stretched(p: &ComparisonProfile) -> ComparisonProfile {
    let (a, b) = (p.grid.start(), p.grid.end());
    let g = grid(a, a + (b - a) / 0.9, p.grid.cells(), &Drift::Zero);
    ComparisonProfile::from_table(g, p.times.clone(), p.values.clone(), p.bc, p.op.clone(), p.source.clone()).unwrap()
}

fn parabolic_gradient(amplitude: f64) -> (Trajectory, ComparisonProfile, f64) {
    let (d, m) = (2.0, 200);
    let space = WeightedInterval::new(d, Density::parse("-0.5 * s^2").unwrap(), m).unwrap();
    let g = Arc::new(Grid::from_interval(&space).unwrap());
    let dt = 0.4 * g.h * g.h;
    let cfg = SolverConfig::new(dt, 0.2).with_snapshots(100);
    let u0 =
        Field1D::from_fn(g.clone(), Boundary::neumann_zero(), |s| amplitude * (PI * (s - 0.5 * d) / d).sin()).unwrap();
    let traj = solve_parabolic(&u0, &laplacian(), &SourceTerm::none(), &cfg).unwrap();
    let kappa = -1.0;
    let pg = grid(0.0, d, m, &Drift::linear(kappa));
    let slope = amplitude * PI / d;
    let phi0: Vec<f64> = pg.nodes.iter().map(|s| slope * (s - 0.5 * d)).collect();
    let bc = Boundary::dirichlet_values(phi0[0], phi0[m]);
    let profile = evolve_profile(&laplacian(), pg, &SourceTerm::none(), &phi0, bc, &cfg).unwrap();
    (traj, profile, DEFAULT_TOL_MODEL * (g.h + traj_dt(&cfg)))
}

fn traj_dt(cfg: &SolverConfig) -> f64 {
    cfg.steps().1
}

fn criterion_9(o: &mut Outcome) {
    let (traj, profile, tol) = parabolic_gradient(10.0);
    let r = check_gradient_bound(&traj, &invert_profile(&profile).unwrap(), tol).unwrap();
    o.expect(r.passed, format!("parabolic: {:?}", r.metadata));
    o.note(format!(
        "parabolic pair {:.1e} point {:.1e} tol {tol:.1e}",
        r.meta_f64("pairwise_worst").unwrap(),
        r.meta_f64("pointwise_worst").unwrap()
    ));
    let r = check_gradient_bound(&traj, &invert_profile(&stretched(&profile)).unwrap(), tol).unwrap();
    o.expect(!r.passed, "control: parabolic barrier with 10% smaller slope passes");

    let big_b = 100.0;
    let b = SourceTerm::constant_b(big_b);
    let g = grid(0.0, 1.0, 100, &Drift::Zero);
    let u = solve_elliptic(
        &laplacian(),
        &b,
        g.clone(),
        Boundary::dirichlet_zero(),
        &SolverConfig::new(0.4 * g.h * g.h, 1.0),
    )
    .unwrap();
    let profile =
        barrier_elliptic(&laplacian(), &b, 0.0, (0.0, u.sup_norm()), 1.05 * big_b / 2.0, &BarrierOptions::default())
            .unwrap();
    let tol = DEFAULT_TOL_MODEL * g.h;
    let r = check_gradient_bound_field(&u, &invert_profile(&profile).unwrap(), tol).unwrap();
    o.expect(r.passed, format!("elliptic: {:?}", r.metadata));
    o.note(format!(
        "elliptic pair {:.1e} point {:.1e} tol {tol:.1e}",
        r.meta_f64("pairwise_worst").unwrap(),
        r.meta_f64("pointwise_worst").unwrap()
    ));
    let r = check_gradient_bound_field(&u, &invert_profile(&stretched(&profile)).unwrap(), tol).unwrap();
    o.expect(!r.passed, "control: elliptic barrier with 10% smaller slope passes");
}

fn heat_error(m: usize) -> f64 {
    let g = grid(0.0, PI, m, &Drift::Zero);
    let cfg = SolverConfig::new(0.4 * g.h * g.h, 0.5).with_snapshots(usize::MAX);
    let u0 = Field1D::from_fn(g.clone(), Boundary::dirichlet_zero(), f64::sin).unwrap();
    let last = solve_parabolic(&u0, &laplacian(), &SourceTerm::none(), &cfg).unwrap().last().clone();
    g.nodes.iter().zip(&last.values).map(|(s, u)| (u - (-last.t).exp() * s.sin()).abs()).fold(0.0, f64::max)
}

fn criterion_10(o: &mut Outcome) {
    let (coarse, fine) = (heat_error(50), heat_error(100));
    o.expect(coarse / fine >= 3.0, format!("heat refinement ratio {}", coarse / fine));
    o.note(format!("heat ratio {:.2}", coarse / fine));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let jets: Vec<RadialJet> = (0..200)
        .map(|_| {
            let up: f64 = rng.gen_range(0.05..3.0);
            RadialJet {
                up: if rng.gen_bool(0.5) { up } else { -up },
                upp: rng.gen_range(-5.0..5.0),
                s: rng.gen_range(0.0..1.0),
                drift: rng.gen_range(-3.0..3.0),
            }
        })
        .collect();
    let mut checked = 0;
    for name in CATALOG_NAMES {
        for p in [1.5, 2.5, 3.0, 4.0] {
            let mut params = std::collections::BTreeMap::new();
            if name.contains("p_lap") {
                params.insert("p".to_string(), p);
            } else if p != 1.5 {
                continue;
            }
            let op = catalog(name, &params).unwrap();
            if let Some(gamma) = op.gamma {
                checked += 1;
                o.expect(homogeneity_check(&op, gamma, &jets), format!("homogeneity of {name} p={p}"));
            }
        }
    }
    o.note(format!("{checked} operators homogeneous"));

    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let g = grid(0.0, 1.0, 24, &Drift::linear(-1.0));
    let ops = [laplacian(), p_laplacian(3.0).unwrap(), normalized_p_laplacian(3.0).unwrap()];
    let result = runner.run(&(proptest::array::uniform4(-1.0f64..1.0), 0.0f64..0.5, 0usize..3), |(c, lift, k)| {
        let base = |s: f64| c[0] * (PI * s).sin() + c[1] * (2.0 * PI * s).sin() + c[2] * s + c[3] * s * s;
        // p = 3 has α = 2|u'|; the slope of the data is at most 3π + 1.5.
        let amax = if k == 1 { 2.0 * (3.0 * PI + 1.5) } else { 1.0 };
        let cfg = SolverConfig::new(0.2 * g.h * g.h / amax, 0.02).with_snapshots(usize::MAX);
        let lo = Field1D::from_fn(g.clone(), Boundary::dirichlet_values(base(0.0), base(1.0)), base).unwrap();
        let hi = Field1D::from_fn(g.clone(), Boundary::dirichlet_values(base(0.0) + lift, base(1.0) + lift), |s| {
            base(s) + lift
        })
        .unwrap();
        let a = solve_parabolic(&lo, &ops[k], &SourceTerm::none(), &cfg).unwrap();
        let b = solve_parabolic(&hi, &ops[k], &SourceTerm::none(), &cfg).unwrap();
        for (x, y) in a.last().values.iter().zip(&b.last().values) {
            prop_assert!(x <= &(y + 1e-12));
        }
        Ok(())
    });
    o.expect(result.is_ok(), format!("comparison principle property: {result:?}"));
    o.note("1000-case comparison property".to_string());
}

fn main() {
    let criteria: [(usize, fn(&mut Outcome)); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (n, run) in criteria {
        let t = Instant::now();
        let mut o = Outcome::default();
        let panicked = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(&mut o))).is_err();
        if panicked {
            o.failures.push("panicked".into());
        }
        let verdict = if o.failures.is_empty() { "PASS" } else { "FAIL" };
        if !o.failures.is_empty() {
            failed += 1;
        }
        println!("criterion {n:>2}: {verdict} ({:.2} s) {}", t.elapsed().as_secs_f64(), o.notes.join("; "));
        for f in &o.failures {
            println!("    {f}");
        }
    }
    let total = start.elapsed().as_secs_f64();
    println!("acceptance: {} of 10 criteria passed in {total:.1} s", 10 - failed);
    if failed > 0 || total >= 600.0 {
        std::process::exit(1);
    }
}
