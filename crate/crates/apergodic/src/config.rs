//! JSON experiment configuration.
//!
//! A config has a seed, an optional output directory and one experiment:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "experiment": {
//!     "kind": "ergodic",
//!     "observable": "x^2",
//!     "t_values": [10, 100, 1000],
//!     "replicas": 1000
//!   }
//! }
//! ```
//!
//! Unknown keys are rejected at every level. Time functions are either an
//! expression string or `{"expr", "lower", "upper", "period"}`; omitted
//! bounds are taken from a dense sample over the experiment horizon.

use apergodic_core::absorbed::BoundaryPair;
use apergodic_core::lyapunov::{PointMesh, Psi};
use apergodic_core::ou::OuSpec;
use apergodic_core::periodic::Mesh;
use apergodic_core::process::{InitialLaw, Observable};
use apergodic_core::TimeFunction;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

/// Samples used to infer bounds that a config leaves out.
pub const BOUND_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Ergodic(ErgodicParams),
    Drift(DriftParams),
    Minorization(MinorizationParams),
    Qsd(QsdParams),
    Survival(SurvivalParams),
    AsymptoticPeriodicity(PeriodicityParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Ergodic(_) => "ergodic",
            Experiment::Drift(_) => "drift",
            Experiment::Minorization(_) => "minorization",
            Experiment::Qsd(_) => "qsd",
            Experiment::Survival(_) => "survival",
            Experiment::AsymptoticPeriodicity(_) => "asymptotic-periodicity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeFunctionSpec {
    Text(String),
    Full(FullTimeFunction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullTimeFunction {
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl From<&str> for TimeFunctionSpec {
    fn from(s: &str) -> Self {
        TimeFunctionSpec::Text(s.to_string())
    }
}

impl TimeFunctionSpec {
    /// Parse, attach bounds (declared or sampled on `[0, horizon]`) and the
    /// declared period, falling back to `default_period`.
    pub fn build(&self, field: &str, horizon: f64, default_period: Option<f64>) -> Result<TimeFunction> {
        let (expr, lower, upper, period) = match self {
            TimeFunctionSpec::Text(e) => (e.as_str(), None, None, None),
            TimeFunctionSpec::Full(f) => (f.expr.as_str(), f.lower, f.upper, f.period),
        };
        let mut tf = TimeFunction::parse(expr).map_err(|e| RunError::invalid(field, e.to_string()))?;
        tf = match (lower, upper) {
            (Some(lo), Some(hi)) => tf.with_bounds(lo, hi),
            (None, None) => tf.with_sampled_bounds(horizon, BOUND_SAMPLES, 0.0),
            _ => return Err(RunError::invalid(field, "give both lower and upper bounds or neither")),
        };
        if let Some(p) = period.or(default_period) {
            if !(p > 0.0 && p.is_finite()) {
                return Err(RunError::invalid(format!("{field}.period"), format!("must be positive, got {p}")));
            }
            tf = tf.with_period(p);
        }
        tf.validate(horizon, BOUND_SAMPLES).map_err(|e| RunError::invalid(field, e.to_string()))?;
        Ok(tf)
    }
}

/// `dX = dW − λ(t)X dt` with γ-periodic companion `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuModel {
    pub lambda: TimeFunctionSpec,
    pub g: TimeFunctionSpec,
    pub gamma: f64,
}

impl OuModel {
    pub fn build(&self, field: &str, horizon: f64) -> Result<OuSpec> {
        positive(&format!("{field}.gamma"), self.gamma)?;
        let lambda = self.lambda.build(&format!("{field}.lambda"), horizon, None)?;
        let g =
            self.g.build(&format!("{field}.g"), horizon.min(10.0 * self.gamma).max(self.gamma), Some(self.gamma))?;
        let spec = OuSpec::new(lambda, g, self.gamma)?;
        spec.validate(horizon.max(self.gamma)).map_err(|e| RunError::invalid(field, e.to_string()))?;
        Ok(spec)
    }
}

fn ou_spec(model: &Option<OuModel>, horizon: f64) -> Result<OuSpec> {
    match model {
        Some(m) => m.build("experiment.model", horizon),
        None => Ok(OuSpec::default_experiment()),
    }
}

/// Boundaries `h` (asymptotically periodic) and `g` (γ-periodic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairModel {
    pub h: TimeFunctionSpec,
    pub g: TimeFunctionSpec,
    pub gamma: f64,
    #[serde(default = "one")]
    pub n0: u32,
}

fn one() -> u32 {
    1
}

impl PairModel {
    pub fn build(&self, field: &str, horizon: f64) -> Result<BoundaryPair> {
        positive(&format!("{field}.gamma"), self.gamma)?;
        let h = self.h.build(&format!("{field}.h"), horizon, None)?;
        let g =
            self.g.build(&format!("{field}.g"), horizon.min(10.0 * self.gamma).max(self.gamma), Some(self.gamma))?;
        let pair = BoundaryPair::new(h, g, self.gamma, self.n0).map_err(|e| RunError::invalid(field, e.to_string()))?;
        pair.validate(horizon).map_err(|e| RunError::invalid(field, e.to_string()))?;
        Ok(pair)
    }
}

fn boundary_pair(model: &Option<PairModel>, horizon: f64) -> Result<BoundaryPair> {
    match model {
        Some(m) => m.build("experiment.pair", horizon),
        None => Ok(BoundaryPair::default_pair()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Point(f64),
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Point(0.0)
    }
}

impl InitialSpec {
    fn build(&self, field: &str) -> Result<InitialLaw> {
        match *self {
            InitialSpec::Point(x) => finite(field, x).map(|_| InitialLaw::Point(x)),
            InitialSpec::Normal { mean, sd } => {
                finite(field, mean)?;
                if !(sd >= 0.0 && sd.is_finite()) {
                    return Err(RunError::invalid(format!("{field}.sd"), format!("must be nonnegative, got {sd}")));
                }
                Ok(InitialLaw::Normal { mean, sd })
            }
            InitialSpec::Uniform { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(RunError::invalid(field, format!("need lo < hi, got [{lo}, {hi}]")));
                }
                Ok(InitialLaw::Uniform { lo, hi })
            }
        }
    }
}

/// Point mesh for drift and minorization checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMeshSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for PointMeshSpec {
    fn default() -> Self {
        PointMeshSpec { lo: -8.0, hi: 8.0, points: 2001 }
    }
}

impl PointMeshSpec {
    pub fn build(&self, field: &str) -> Result<PointMesh> {
        PointMesh::new(self.lo, self.hi, self.points).map_err(|e| RunError::invalid(field, e.to_string()))
    }
}

/// Cell mesh for histograms and discretized kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellMeshSpec {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl CellMeshSpec {
    pub fn build(&self, field: &str) -> Result<Mesh> {
        Mesh::new(self.lo, self.hi, self.cells).map_err(|e| RunError::invalid(field, e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgodicMode {
    /// Replica ensemble: mean, L² error and variance of `Ā_t`.
    #[default]
    L2,
    /// Replica 0 only, observed at every `t` value.
    Pathwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathExport {
    pub replicas: usize,
    pub t_end: f64,
    /// Write every `stride`-th grid point.
    #[serde(default = "one_usize")]
    pub stride: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<OuModel>,
    /// Expression in `x`.
    pub observable: String,
    #[serde(default)]
    pub initial: InitialSpec,
    pub t_values: Vec<f64>,
    pub replicas: u64,
    #[serde(default = "ergodic_dt")]
    pub dt: f64,
    #[serde(default)]
    pub mode: ErgodicMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export_paths: Option<PathExport>,
}

fn ergodic_dt() -> f64 {
    apergodic_core::ergodic::DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<OuModel>,
    /// Use the periodic companion `g` instead of λ.
    #[serde(default)]
    pub auxiliary: bool,
    /// `"quadratic"` (1 + x²), `"constant"`, or an expression in `x`.
    #[serde(default = "quadratic")]
    pub psi: String,
    #[serde(default = "zero_list")]
    pub s_values: Vec<f64>,
    pub t1: f64,
    pub theta: f64,
    pub c: f64,
    pub k_edge: f64,
    #[serde(default)]
    pub mesh: PointMeshSpec,
    /// Lags for a `sup Pψ/ψ` growth check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_lags: Option<Vec<f64>>,
}

fn quadratic() -> String {
    "quadratic".into()
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinorizationParams {
    pub class: MinorizationClass,
    /// Mesh on which ν is exported.
    #[serde(default = "nu_mesh")]
    pub nu_mesh: CellMeshSpec,
}

fn nu_mesh() -> CellMeshSpec {
    CellMeshSpec { lo: -6.0, hi: 6.0, cells: 240 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MinorizationClass {
    /// `{Normal(m, σ²) : |m| ≤ a, b₋ ≤ σ ≤ b₊}`.
    GaussianClass { a: f64, b_minus: f64, b_plus: f64 },
    /// One-window OU laws from `K = [−k_edge, k_edge]`.
    Ou {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<OuModel>,
        s_values: Vec<f64>,
        t1: f64,
        k_edge: f64,
        /// Doeblin probes inside `K`; default 21 evenly spaced points.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probes: Option<Vec<f64>>,
        #[serde(default)]
        mesh: PointMeshSpec,
    },
    /// Conditioned Brownian laws under the boundary `h` of a pair.
    Conditional {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pair: Option<PairModel>,
        s: f64,
        lags: Vec<f64>,
        probes: Vec<f64>,
        paths: u64,
        cells: usize,
        #[serde(default = "absorbed_dt")]
        dt: f64,
    },
}

fn absorbed_dt() -> f64 {
    apergodic_core::absorbed::DEFAULT_DT
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryChoice {
    #[default]
    H,
    G,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QProcessSpec {
    pub t: f64,
    pub horizons: Vec<f64>,
    #[serde(default = "ten")]
    pub bins: usize,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsdParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairModel>,
    #[serde(default)]
    pub boundary: BoundaryChoice,
    pub particles: usize,
    #[serde(default = "absorbed_dt")]
    pub dt: f64,
    #[serde(default)]
    pub s: f64,
    pub duration: f64,
    #[serde(default)]
    pub burn_in: f64,
    #[serde(default = "forty")]
    pub bins: usize,
    #[serde(default)]
    pub x0: f64,
    /// Also run under the other boundary and a same-boundary control.
    #[serde(default)]
    pub compare: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_process: Option<QProcessSpec>,
}

fn forty() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairModel>,
    #[serde(default)]
    pub s: f64,
    pub t: f64,
    #[serde(default)]
    pub x: f64,
    pub k_list: Vec<u32>,
    pub paths: u64,
    #[serde(default = "absorbed_dt")]
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicityParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<OuModel>,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "one")]
    pub n: u32,
    pub k_values: Vec<u32>,
    #[serde(default = "default_probes")]
    pub probes: Vec<f64>,
    #[serde(default = "skeleton_mesh")]
    pub mesh: CellMeshSpec,
    #[serde(default = "power_tol")]
    pub tol: f64,
    #[serde(default = "power_iters")]
    pub max_iter: usize,
}

fn default_probes() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn skeleton_mesh() -> CellMeshSpec {
    CellMeshSpec { lo: -6.0, hi: 6.0, cells: 400 }
}

fn power_tol() -> f64 {
    1e-12
}

fn power_iters() -> usize {
    10_000
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RunError::invalid(field, format!("must be positive, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RunError::invalid(field, format!("must be nonnegative, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(RunError::invalid(field, format!("must be finite, got {v}")))
    }
}

fn at_least(field: &str, v: u64, min: u64) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(RunError::invalid(field, format!("must be at least {min}, got {v}")))
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(RunError::invalid(field, "must not be empty"))
    } else {
        Ok(())
    }
}

fn increasing(field: &str, v: &[f64]) -> Result<()> {
    nonempty(field, v)?;
    for (i, x) in v.iter().enumerate() {
        positive(&format!("{field}[{i}]"), *x)?;
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RunError::invalid(field, "must be strictly increasing"));
    }
    Ok(())
}

pub(crate) fn observable(field: &str, text: &str) -> Result<Observable> {
    Observable::parse(text).map_err(|e| RunError::invalid(field, e.to_string()))
}

pub(crate) fn psi(field: &str, text: &str) -> Result<Psi> {
    match text {
        "quadratic" => Ok(Psi::Quadratic),
        "constant" => Ok(Psi::Constant),
        expr => {
            let f = observable(field, expr)?;
            Ok(Psi::custom(expr, move |x| f.eval(x)))
        }
    }
}

/// Checked inputs of an ergodic run.
pub struct ErgodicInputs {
    pub spec: OuSpec,
    pub f: Observable,
    pub initial: InitialLaw,
}

impl ErgodicParams {
    pub fn check(&self) -> Result<ErgodicInputs> {
        positive("experiment.dt", self.dt)?;
        increasing("experiment.t_values", &self.t_values)?;
        at_least("experiment.replicas", self.replicas, 1)?;
        let horizon = *self.t_values.last().unwrap();
        if let Some(e) = &self.export_paths {
            at_least("experiment.export_paths.replicas", e.replicas as u64, 1)?;
            positive("experiment.export_paths.t_end", e.t_end)?;
            at_least("experiment.export_paths.stride", e.stride as u64, 1)?;
        }
        let spec = ou_spec(&self.model, horizon)?;
        Ok(ErgodicInputs {
            spec,
            f: observable("experiment.observable", &self.observable)?,
            initial: self.initial.build("experiment.initial")?,
        })
    }
}

impl DriftParams {
    pub fn check(&self) -> Result<(OuSpec, Psi, PointMesh)> {
        positive("experiment.t1", self.t1)?;
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(RunError::invalid("experiment.theta", format!("must lie in (0, 1), got {}", self.theta)));
        }
        nonnegative("experiment.c", self.c)?;
        nonnegative("experiment.k_edge", self.k_edge)?;
        nonempty("experiment.s_values", &self.s_values)?;
        for (i, s) in self.s_values.iter().enumerate() {
            nonnegative(&format!("experiment.s_values[{i}]"), *s)?;
        }
        if let Some(l) = &self.growth_lags {
            increasing("experiment.growth_lags", l)?;
        }
        let horizon = self.s_values.iter().fold(0.0f64, |a, b| a.max(*b)) + self.t1 + 1.0;
        Ok((ou_spec(&self.model, horizon)?, psi("experiment.psi", &self.psi)?, self.mesh.build("experiment.mesh")?))
    }
}

impl MinorizationParams {
    pub fn check(&self) -> Result<Mesh> {
        match &self.class {
            MinorizationClass::GaussianClass { a, b_minus, b_plus } => {
                nonnegative("experiment.class.a", *a)?;
                positive("experiment.class.b_minus", *b_minus)?;
                positive("experiment.class.b_plus", *b_plus)?;
                if b_minus > b_plus {
                    return Err(RunError::invalid("experiment.class.b_minus", "must not exceed b_plus"));
                }
            }
            MinorizationClass::Ou { s_values, t1, k_edge, mesh, .. } => {
                nonempty("experiment.class.s_values", s_values)?;
                positive("experiment.class.t1", *t1)?;
                nonnegative("experiment.class.k_edge", *k_edge)?;
                mesh.build("experiment.class.mesh")?;
            }
            MinorizationClass::Conditional { s, lags, probes, paths, cells, dt, .. } => {
                nonnegative("experiment.class.s", *s)?;
                increasing("experiment.class.lags", lags)?;
                nonempty("experiment.class.probes", probes)?;
                at_least("experiment.class.paths", *paths, 1)?;
                at_least("experiment.class.cells", *cells as u64, 1)?;
                positive("experiment.class.dt", *dt)?;
            }
        }
        self.nu_mesh.build("experiment.nu_mesh")
    }

    pub(crate) fn ou_spec(model: &Option<OuModel>, horizon: f64) -> Result<OuSpec> {
        ou_spec(model, horizon)
    }

    pub(crate) fn pair(model: &Option<PairModel>, horizon: f64) -> Result<BoundaryPair> {
        boundary_pair(model, horizon)
    }
}

impl QsdParams {
    pub fn check(&self) -> Result<BoundaryPair> {
        at_least("experiment.particles", self.particles as u64, 2)?;
        positive("experiment.dt", self.dt)?;
        nonnegative("experiment.s", self.s)?;
        positive("experiment.duration", self.duration)?;
        nonnegative("experiment.burn_in", self.burn_in)?;
        if self.burn_in >= self.duration {
            return Err(RunError::invalid("experiment.burn_in", "must be smaller than duration"));
        }
        at_least("experiment.bins", self.bins as u64, 1)?;
        finite("experiment.x0", self.x0)?;
        let mut horizon = self.s + self.duration;
        if let Some(q) = &self.q_process {
            increasing("experiment.q_process.horizons", &q.horizons)?;
            if q.t.is_nan() || q.t < self.s || q.horizons[0] < q.t {
                return Err(RunError::invalid("experiment.q_process", "need s <= t <= every horizon"));
            }
            at_least("experiment.q_process.bins", q.bins as u64, 1)?;
            horizon = horizon.max(*q.horizons.last().unwrap());
        }
        boundary_pair(&self.pair, horizon)
    }
}

impl SurvivalParams {
    pub fn check(&self) -> Result<BoundaryPair> {
        nonnegative("experiment.s", self.s)?;
        if !(self.t >= self.s && self.t.is_finite()) {
            return Err(RunError::invalid("experiment.t", format!("must be at least s = {}, got {}", self.s, self.t)));
        }
        finite("experiment.x", self.x)?;
        nonempty("experiment.k_list", &self.k_list)?;
        at_least("experiment.paths", self.paths, 1)?;
        positive("experiment.dt", self.dt)?;
        let gamma = self.pair.as_ref().map_or(1.0, |p| p.gamma);
        let k_max = *self.k_list.iter().max().unwrap() as f64;
        boundary_pair(&self.pair, self.t + k_max * gamma + gamma)
    }
}

impl PeriodicityParams {
    pub fn check(&self) -> Result<(OuSpec, Mesh)> {
        nonnegative("experiment.s", self.s)?;
        at_least("experiment.n", self.n as u64, 1)?;
        nonempty("experiment.k_values", &self.k_values)?;
        nonempty("experiment.probes", &self.probes)?;
        positive("experiment.tol", self.tol)?;
        at_least("experiment.max_iter", self.max_iter as u64, 1)?;
        let gamma = self.model.as_ref().map_or(1.0, |m| m.gamma);
        let k_max = *self.k_values.iter().max().unwrap() as f64;
        let spec = ou_spec(&self.model, self.s + (k_max + self.n as f64 + 1.0) * gamma)?;
        if self.s >= spec.gamma {
            return Err(RunError::invalid("experiment.s", format!("must lie in [0, gamma = {})", spec.gamma)));
        }
        Ok((spec, self.mesh.build("experiment.mesh")?))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Canonical JSON used for hashing and round-trips.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
