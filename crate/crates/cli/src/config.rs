//! Scenario configuration files.
//!
//! A config is `{"schema_version": 1, "scenarios": [...]}`. Unknown fields
//! are rejected and every error carries the JSON path of the offending field.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use qcomp_core::eigen::NeumannVariant;
use qcomp_core::expr::Expr;
use qcomp_core::geometry::{BigN, CurvatureParams, Ends};
use qcomp_core::operators::OperatorSpec;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Parse or validation failure with the JSON path of the field at fault.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    McDirichlet,
    McNeumann,
    Decay,
    EigenDirichlet,
    EigenNeumann,
    Supersolution,
    TwoPoint,
    GradientParabolic,
    GradientElliptic,
    DecayRate,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::McDirichlet => "mc_dirichlet",
            Kind::McNeumann => "mc_neumann",
            Kind::Decay => "decay",
            Kind::EigenDirichlet => "eigen_dirichlet",
            Kind::EigenNeumann => "eigen_neumann",
            Kind::Supersolution => "supersolution",
            Kind::TwoPoint => "two_point",
            Kind::GradientParabolic => "gradient_parabolic",
            Kind::GradientElliptic => "gradient_elliptic",
            Kind::DecayRate => "decay_rate",
        }
    }

    /// Gradient barriers live on the `N = ∞` side by default.
    fn default_big_n(self) -> BigN {
        match self {
            Kind::GradientParabolic | Kind::GradientElliptic => BigN::Infinite,
            _ => BigN::Finite(3.0),
        }
    }
}

/// Density of the weighted interval.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Closed form in `s`.
    Expr(Expr),
    /// `-(N-1) log C_{κ,Λ}` on `[0, length]`.
    Model(CurvatureParams),
    /// `a1 s + a2 s² + a3 sin(w s + c)` drawn from the run seed.
    Random(RandomDensity),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDensity {
    #[serde(default = "default_coef")]
    pub max_coefficient: f64,
}

fn default_coef() -> f64 {
    0.5
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec::Expr(Expr::c(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
}

fn default_length() -> f64 {
    PI
}

fn default_intervals() -> usize {
    200
}

impl Default for SpaceSpec {
    fn default() -> Self {
        Self { length: default_length(), density: DensitySpec::default(), intervals: default_intervals() }
    }
}

/// Curvature data of the comparison model.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurvatureChoice {
    /// Grid-scan lower bounds of the space for the given `N`.
    Effective {
        #[serde(default)]
        big_n: Option<BigN>,
    },
    Explicit(CurvatureParams),
}

impl Default for CurvatureChoice {
    fn default() -> Self {
        CurvatureChoice::Effective { big_n: None }
    }
}

/// Boundary behaviour of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BcChoice {
    /// Dirichlet at both ends.
    Dirichlet,
    /// Dirichlet at `s = 0`, Neumann at `s = length`.
    Mixed,
    Neumann,
}

impl BcChoice {
    pub fn ends(self) -> Ends {
        match self {
            BcChoice::Mixed => Ends::Left,
            _ => Ends::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Time step; defaults to `0.4 h²`. Halved automatically on CFL failure.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Approximate number of stored snapshots.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default)]
    pub eps: Option<f64>,
}

fn default_t_end() -> f64 {
    0.5
}

fn default_snapshots() -> usize {
    20
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { dt: None, t_end: default_t_end(), snapshots: default_snapshots(), eps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Multiplier of `h + dt` (parabolic) or `h` (elliptic).
    #[serde(default = "default_tol_model")]
    pub model: f64,
    /// Relative tolerance of eigenvalue comparisons.
    #[serde(default = "default_eigen_rel")]
    pub eigen_rel: f64,
    /// Relative tolerance of decay-rate comparisons.
    #[serde(default = "default_rate_rel")]
    pub rate_rel: f64,
    /// Required `|λ_M - λ_model| / λ_model` upper bound, for sharpness runs.
    #[serde(default)]
    pub max_relative_gap: Option<f64>,
    /// Required `slack_max / tol` upper bound for decay runs.
    #[serde(default)]
    pub max_slack_ratio: Option<f64>,
}

fn default_tol_model() -> f64 {
    qcomp_core::verify::DEFAULT_TOL_MODEL
}

fn default_eigen_rel() -> f64 {
    qcomp_core::verify::DEFAULT_EIGEN_REL_TOL
}

fn default_rate_rel() -> f64 {
    0.02
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            model: default_tol_model(),
            eigen_rel: default_eigen_rel(),
            rate_rel: default_rate_rel(),
            max_relative_gap: None,
            max_slack_ratio: None,
        }
    }
}

/// Deliberate perturbations used by negative controls.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    /// Multiplies the profile drift.
    #[serde(default = "unit")]
    pub drift_sign: f64,
    /// Multiplies the barrier slope (gradient kinds).
    #[serde(default = "unit")]
    pub barrier_slope: f64,
    /// Multiplies the initial comparison profile.
    #[serde(default = "unit")]
    pub profile_scale: f64,
    /// Multiplies the decay rate of the separable barrier.
    #[serde(default = "unit")]
    pub rate: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for PerturbSpec {
    fn default() -> Self {
        Self { drift_sign: 1.0, barrier_slope: 1.0, profile_scale: 1.0, rate: 1.0 }
    }
}

impl PerturbSpec {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// CSV tables of trajectories, profiles and eigenfunctions.
    #[serde(default = "yes")]
    pub data: bool,
    /// Whitespace-separated plot columns.
    #[serde(default = "yes")]
    pub plots: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { data: true, plots: true }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub kind: Kind,
    /// The property being checked, shown by `qcomp list`.
    #[serde(default)]
    pub description: String,
    /// A control is expected to fail; it counts as ok when it does.
    #[serde(default)]
    pub control: bool,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(default = "default_operator")]
    pub operator: OperatorSpec,
    /// Homogeneity degree; defaults to the operator's own.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub curvature: CurvatureChoice,
    #[serde(default)]
    pub bc: Option<BcChoice>,
    /// Initial datum `u0(s)`.
    #[serde(default)]
    pub initial: Option<Expr>,
    /// Initial comparison profile `φ0(s)`.
    #[serde(default)]
    pub profile_initial: Option<Expr>,
    /// Profile of a supersolution check, as a function of the distance.
    #[serde(default)]
    pub phi: Option<Expr>,
    #[serde(default = "unit")]
    pub amplitude: f64,
    /// Constant source `b` of the elliptic gradient problem.
    #[serde(default)]
    pub b: Option<f64>,
    /// Initial slope of the elliptic barrier; defaults to 1.05 max|u'|.
    #[serde(default)]
    pub barrier_slope: Option<f64>,
    #[serde(default)]
    pub neumann_variant: Option<NeumannVariant>,
    /// Target of a decay-rate run; defaults to a lower bound by the model λ₁.
    #[serde(default)]
    pub expected_rate: Option<f64>,
    /// Radii of a model eigenvalue sweep written as plot data.
    #[serde(default)]
    pub radius_sweep: Vec<f64>,
    /// Independent random densities checked in one scenario.
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub perturb: PerturbSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn default_operator() -> OperatorSpec {
    OperatorSpec::new("laplacian")
}

fn one() -> usize {
    1
}

impl Scenario {
    pub fn big_n(&self) -> BigN {
        match &self.curvature {
            CurvatureChoice::Effective { big_n } => big_n.unwrap_or(self.kind.default_big_n()),
            CurvatureChoice::Explicit(p) => p.big_n,
        }
    }

    pub fn bc_or(&self, default: BcChoice) -> BcChoice {
        self.bc.unwrap_or(default)
    }
}

/// Parses a config, reporting the JSON path of the first bad field.
pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::at(path, e.into_inner().to_string())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load(path: &Path) -> anyhow::Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(parse(&text)?)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'))
}

/// Checks values serde cannot: versions, ids and the fields each kind needs.
pub fn validate(cfg: &Config) -> Result<(), ConfigError> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::at(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        ));
    }
    let mut seen = HashSet::new();
    for (i, s) in cfg.scenarios.iter().enumerate() {
        let at = |field: &str| format!("scenarios[{i}].{field}");
        if !valid_id(&s.id) {
            return Err(ConfigError::at(
                at("id"),
                format!("invalid id {:?}; use letters, digits, '.', '-', '_'", s.id),
            ));
        }
        if !seen.insert(s.id.as_str()) {
            return Err(ConfigError::at(at("id"), format!("duplicate id {:?}", s.id)));
        }
        if !(s.space.length > 0.0 && s.space.length.is_finite()) {
            return Err(ConfigError::at(at("space.length"), "must be positive and finite"));
        }
        if s.space.intervals < 16 || s.space.intervals % 2 != 0 {
            return Err(ConfigError::at(at("space.intervals"), "must be even and at least 16"));
        }
        if !(s.solver.t_end > 0.0) || s.solver.snapshots == 0 {
            return Err(ConfigError::at(at("solver"), "t_end and snapshots must be positive"));
        }
        if let Some(dt) = s.solver.dt {
            if !(dt > 0.0) {
                return Err(ConfigError::at(at("solver.dt"), "must be positive"));
            }
        }
        if !(s.tolerances.model > 0.0) || !(s.tolerances.eigen_rel > 0.0) || !(s.tolerances.rate_rel > 0.0) {
            return Err(ConfigError::at(at("tolerances"), "tolerances must be positive"));
        }
        if s.repeat == 0 {
            return Err(ConfigError::at(at("repeat"), "must be at least 1"));
        }
        if s.repeat > 1 && !matches!(s.space.density, DensitySpec::Random(_)) {
            return Err(ConfigError::at(at("repeat"), "repeat needs a random density"));
        }
        if s.kind == Kind::GradientElliptic && s.b.is_none() {
            return Err(ConfigError::at(at("b"), "gradient_elliptic needs a constant source b"));
        }
        if s.kind != Kind::GradientElliptic && (s.b.is_some() || s.barrier_slope.is_some()) {
            return Err(ConfigError::at(at("b"), "b and barrier_slope only apply to gradient_elliptic"));
        }
        if s.kind == Kind::McNeumann || s.kind == Kind::GradientParabolic {
            if let Some(bc) = s.bc {
                if bc != BcChoice::Neumann {
                    return Err(ConfigError::at(at("bc"), format!("{} runs with Neumann conditions", s.kind.name())));
                }
            }
        }
        if s.kind == Kind::McDirichlet && s.bc.is_some_and(|bc| bc != BcChoice::Dirichlet) {
            return Err(ConfigError::at(at("bc"), "mc_dirichlet runs with Dirichlet conditions"));
        }
        if s.kind == Kind::EigenNeumann && s.bc.is_some() {
            return Err(ConfigError::at(at("bc"), "eigen_neumann always uses Neumann conditions"));
        }
        if s.neumann_variant.is_some() && s.kind != Kind::EigenNeumann {
            return Err(ConfigError::at(at("neumann_variant"), "only applies to eigen_neumann"));
        }
        if !s.radius_sweep.is_empty() && s.kind != Kind::EigenDirichlet {
            return Err(ConfigError::at(at("radius_sweep"), "only applies to eigen_dirichlet"));
        }
        if s.radius_sweep.iter().any(|r| !(*r > 0.0)) {
            return Err(ConfigError::at(at("radius_sweep"), "radii must be positive"));
        }
        if s.phi.is_some() && s.kind != Kind::Supersolution {
            return Err(ConfigError::at(at("phi"), "only applies to supersolution"));
        }
        if s.expected_rate.is_some() && s.kind != Kind::DecayRate {
            return Err(ConfigError::at(at("expected_rate"), "only applies to decay_rate"));
        }
    }
    Ok(())
}
