//! Experiment configurations, presets and run records.
//!
//! A configuration names the graph, a threshold rule, a schedule variant with
//! its relaxation `t`, and what to do with `p` (fixed points, a sweep, or a
//! critical-probability search). Real-valued parameters are mapped to
//! integers by [`ceil_policy`]; the policy name is written on every output
//! row. Running a configuration is a pure function of the configuration, so a
//! [`RunRecord`]'s `config` echo reproduces the record.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::{CubeError, CubeSpec};
use crate::engine::{EngineError, ScheduleKind, ThresholdSchedule};
use crate::estimator::{
    estimate_pc, percolation_probability, stabilization_profile, EstimatorError, PcEstimate,
    PcSearch, PercProbEstimate, StabilizationProfile, TrialPlan, DEFAULT_CONFIDENCE,
};

/// Name of the rounding rule for real-valued parameters.
pub const POLICY: &str = "ceil";

/// Exact CSV header.
pub const CSV_HEADER: [&str; 16] = [
    "experiment",
    "n",
    "k",
    "variant",
    "r",
    "t",
    "p",
    "trials",
    "successes",
    "p_hat",
    "ci_low",
    "ci_high",
    "pc_lo",
    "pc_hi",
    "seed",
    "policy",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid {field} `{value}`: {reason}")]
    Parse {
        field: &'static str,
        value: String,
        reason: String,
    },
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Schedule(#[from] EngineError),
    #[error("threshold resolves to r = {r}; it must be at least 1")]
    ThresholdBelowOne { r: u64 },
    #[error("variant {variant} needs a relaxation t")]
    MissingRelaxation { variant: ScheduleKind },
    #[error("t = {formula} is defined relative to r = n^a; use a power:a threshold")]
    NeedsPowerThreshold { formula: String },
    #[error("no p given: use a value, a sweep or auto-pc")]
    MissingP,
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config file {path}: {reason}")]
    File { path: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("estimation failed for {context}: {source}")]
    Estimator {
        context: String,
        #[source]
        source: EstimatorError,
    },
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding results: {0}")]
    Encode(String),
}

/// `ceil(x)`, except that values within floating-point noise of an integer
/// map to that integer (so `10^1` and `4^0.5` are not bumped up).
pub fn ceil_policy(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

fn parse_f64(field: &'static str, s: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::Parse {
            field,
            value: s.to_string(),
            reason: "expected a finite number".into(),
        })
}

fn parse_u64(field: &'static str, s: &str) -> Result<u64, ConfigError> {
    s.trim().parse::<u64>().map_err(|e| ConfigError::Parse {
        field,
        value: s.to_string(),
        reason: e.to_string(),
    })
}

/// How the base threshold `r` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ThresholdRule {
    /// `r` itself.
    Const(u64),
    /// `r = ceil(n^a)`.
    Power(f64),
    /// `r = ceil(N / 2)`.
    Majority,
}

impl ThresholdRule {
    pub fn resolve(&self, spec: CubeSpec) -> u64 {
        match *self {
            ThresholdRule::Const(r) => r,
            ThresholdRule::Power(a) => ceil_policy(f64::from(spec.n()).powf(a)),
            ThresholdRule::Majority => spec.degree().div_ceil(2),
        }
    }

    fn exponent(&self) -> Option<f64> {
        match *self {
            ThresholdRule::Power(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::Const(r) => write!(f, "const:{r}"),
            ThresholdRule::Power(a) => write!(f, "power:{a}"),
            ThresholdRule::Majority => f.write_str("majority"),
        }
    }
}

impl FromStr for ThresholdRule {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| ConfigError::Parse {
            field: "threshold",
            value: s.to_string(),
            reason: reason.into(),
        };
        match s.split_once(':') {
            None if s == "majority" => Ok(ThresholdRule::Majority),
            Some(("const", r)) => Ok(ThresholdRule::Const(parse_u64("threshold", r)?)),
            Some(("power", a)) => {
                let a = parse_f64("threshold", a)?;
                if a <= 0.0 {
                    return Err(bad("the exponent must be positive"));
                }
                Ok(ThresholdRule::Power(a))
            }
            _ => Err(bad("expected const:R, power:A or majority")),
        }
    }
}

/// How the relaxation `t` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RelaxationRule {
    Literal(u64),
    /// `t = ceil(eps2 * n^a)`.
    Eps2Na(f64),
    /// `t = ceil(n^(a/2 + delta) / 10)`.
    HalfPower(f64),
    /// `t = ceil(c * n)`.
    Linear(f64),
    /// `t = ceil(c * n^(k/2))`.
    KPower(f64),
}

impl RelaxationRule {
    pub fn resolve(&self, spec: CubeSpec, threshold: &ThresholdRule) -> Result<u64, ConfigError> {
        let n = f64::from(spec.n());
        let need_a = || {
            threshold
                .exponent()
                .ok_or_else(|| ConfigError::NeedsPowerThreshold {
                    formula: self.to_string(),
                })
        };
        Ok(match *self {
            RelaxationRule::Literal(t) => t,
            RelaxationRule::Eps2Na(eps) => ceil_policy(eps * n.powf(need_a()?)),
            RelaxationRule::HalfPower(delta) => ceil_policy(n.powf(need_a()? / 2.0 + delta) / 10.0),
            RelaxationRule::Linear(c) => ceil_policy(c * n),
            RelaxationRule::KPower(c) => ceil_policy(c * n.powf(f64::from(spec.k()) / 2.0)),
        })
    }
}

impl fmt::Display for RelaxationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelaxationRule::Literal(t) => write!(f, "{t}"),
            RelaxationRule::Eps2Na(x) => write!(f, "eps2_na:{x}"),
            RelaxationRule::HalfPower(x) => write!(f, "half_power:{x}"),
            RelaxationRule::Linear(x) => write!(f, "linear:{x}"),
            RelaxationRule::KPower(x) => write!(f, "k_power:{x}"),
        }
    }
}

impl FromStr for RelaxationRule {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let coefficient = |x: &str| -> Result<f64, ConfigError> {
            let v = parse_f64("t", x)?;
            if v < 0.0 {
                return Err(ConfigError::Parse {
                    field: "t",
                    value: s.to_string(),
                    reason: "the coefficient must be nonnegative".into(),
                });
            }
            Ok(v)
        };
        match s.split_once(':') {
            None => Ok(RelaxationRule::Literal(parse_u64("t", s)?)),
            Some(("eps2_na", x)) => Ok(RelaxationRule::Eps2Na(coefficient(x)?)),
            Some(("half_power", x)) => Ok(RelaxationRule::HalfPower(parse_f64("t", x)?)),
            Some(("linear", x)) => Ok(RelaxationRule::Linear(coefficient(x)?)),
            Some(("k_power", x)) => Ok(RelaxationRule::KPower(coefficient(x)?)),
            Some(_) => Err(ConfigError::Parse {
                field: "t",
                value: s.to_string(),
                reason: "expected an integer, eps2_na:E, half_power:D, linear:C or k_power:C"
                    .into(),
            }),
        }
    }
}

/// Splits `kind` or `kind:t` (`boot1:eps2_na:0.05`).
pub fn parse_variant(s: &str) -> Result<(ScheduleKind, Option<RelaxationRule>), ConfigError> {
    let (kind, t) = match s.split_once(':') {
        None => (s, None),
        Some((kind, t)) => (kind, Some(t.parse()?)),
    };
    let kind = kind
        .parse::<ScheduleKind>()
        .map_err(|reason| ConfigError::Parse {
            field: "variant",
            value: s.to_string(),
            reason,
        })?;
    Ok((kind, t))
}

/// Which values of `p` to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PMode {
    Value(f64),
    /// `points` evenly spaced values from `start` to `stop` inclusive.
    Sweep {
        start: f64,
        stop: f64,
        points: u64,
    },
    /// Bisection for the critical probability.
    AutoPc,
}

impl PMode {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            PMode::Value(p) => vec![p],
            PMode::Sweep {
                start,
                stop,
                points,
            } => {
                if points == 1 {
                    return vec![start];
                }
                let step = (stop - start) / (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            stop
                        } else {
                            start + step * i as f64
                        }
                    })
                    .collect()
            }
            PMode::AutoPc => Vec::new(),
        }
    }
}

impl fmt::Display for PMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PMode::Value(p) => write!(f, "{p}"),
            PMode::Sweep {
                start,
                stop,
                points,
            } => write!(f, "sweep:{start}:{stop}:{points}"),
            PMode::AutoPc => f.write_str("auto-pc"),
        }
    }
}

impl FromStr for PMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| ConfigError::Parse {
            field: "p",
            value: s.to_string(),
            reason: reason.into(),
        };
        let in_unit = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(p)
            } else {
                Err(bad("probabilities must lie in [0, 1]"))
            }
        };
        if s == "auto-pc" {
            return Ok(PMode::AutoPc);
        }
        if let Some(rest) = s.strip_prefix("sweep:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [start, stop, points] = parts[..] else {
                return Err(bad("expected sweep:START:STOP:POINTS"));
            };
            let points = parse_u64("p", points)?;
            if points == 0 {
                return Err(bad("a sweep needs at least one point"));
            }
            return Ok(PMode::Sweep {
                start: in_unit(parse_f64("p", start)?)?,
                stop: in_unit(parse_f64("p", stop)?)?,
                points,
            });
        }
        Ok(PMode::Value(in_unit(parse_f64("p", s)?)?))
    }
}

/// Reference quantities computed next to the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Reference {
    /// `n^(a-1)`.
    PowerLaw { a: f64 },
    /// `n^(a-1) - n^(a/2-1+delta)` and `n^(a-1) - n^(a/2-1)`.
    SecondOrder { a: f64, delta: f64 },
    /// `1/2 - n^(-k/2)` and, with a bracket, `(1/2 - p_c) n^(k/2) / sqrt(ln n)`.
    Majority,
}

impl Reference {
    fn evaluate(&self, spec: CubeSpec, pc: Option<&PcEstimate>) -> BTreeMap<String, f64> {
        let n = f64::from(spec.n());
        let mut out = BTreeMap::new();
        match *self {
            Reference::PowerLaw { a } => {
                out.insert("reference_pc".into(), n.powf(a - 1.0));
            }
            Reference::SecondOrder { a, delta } => {
                out.insert("reference_pc".into(), n.powf(a - 1.0));
                out.insert(
                    "lower_reference".into(),
                    n.powf(a - 1.0) - n.powf(a / 2.0 - 1.0 + delta),
                );
                out.insert(
                    "upper_reference".into(),
                    n.powf(a - 1.0) - n.powf(a / 2.0 - 1.0),
                );
            }
            Reference::Majority => {
                let scale = n.powf(f64::from(spec.k()) / 2.0);
                out.insert("upper_reference".into(), 0.5 - 1.0 / scale);
                if let Some(pc) = pc {
                    out.insert(
                        "gap_statistic".into(),
                        (0.5 - pc.midpoint()) * scale / n.ln().sqrt(),
                    );
                }
            }
        }
        out
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::PowerLaw { a } => write!(f, "power_law:{a}"),
            Reference::SecondOrder { a, delta } => write!(f, "second_order:{a}:{delta}"),
            Reference::Majority => f.write_str("majority"),
        }
    }
}

impl FromStr for Reference {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts[..] {
            ["majority"] => Ok(Reference::Majority),
            ["power_law", a] => Ok(Reference::PowerLaw {
                a: parse_f64("reference", a)?,
            }),
            ["second_order", a, delta] => Ok(Reference::SecondOrder {
                a: parse_f64("reference", a)?,
                delta: parse_f64("reference", delta)?,
            }),
            _ => Err(ConfigError::Parse {
                field: "reference",
                value: s.to_string(),
                reason: "expected power_law:A, second_order:A:DELTA or majority".into(),
            }),
        }
    }
}

macro_rules! string_serde {
    ($($ty:ty),*) => {$(
        impl TryFrom<String> for $ty {
            type Error = ConfigError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                s.parse()
            }
        }

        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.to_string()
            }
        }
    )*};
}

string_serde!(ThresholdRule, RelaxationRule, PMode, Reference);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(ConfigError::Parse {
                field: "format",
                value: s.to_string(),
                reason: "expected csv or json".into(),
            }),
        }
    }
}

fn default_experiment() -> String {
    "run".into()
}

fn default_k() -> u32 {
    1
}

fn default_variant() -> ScheduleKind {
    ScheduleKind::Boot
}

fn default_trials() -> u64 {
    10_000
}

fn default_tolerance() -> f64 {
    0.01
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

fn default_n_max() -> u32 {
    crate::cube::DEFAULT_N_MAX
}

/// One experiment. Field names match the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub n: u32,
    #[serde(default = "default_k")]
    pub k: u32,
    pub threshold: ThresholdRule,
    #[serde(default = "default_variant")]
    pub variant: ScheduleKind,
    /// Relaxation for the relaxed variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<RelaxationRule>,
    pub p: PMode,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Bracket width for auto-pc.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Also record fixpoint-step histograms at every point.
    #[serde(default)]
    pub profile: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(
        n: u32,
        k: u32,
        threshold: ThresholdRule,
        variant: ScheduleKind,
        t: Option<RelaxationRule>,
        p: PMode,
    ) -> Self {
        Self {
            experiment: default_experiment(),
            n,
            k,
            threshold,
            variant,
            t,
            p,
            trials: default_trials(),
            seed: 0,
            tolerance: default_tolerance(),
            confidence: default_confidence(),
            n_max: default_n_max(),
            profile: false,
            reference: None,
            output: None,
            format: OutputFormat::Csv,
        }
    }

    /// Evaluates every formula and checks the combination.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        self.resolve_full().map(|(resolved, _, _)| resolved)
    }

    fn resolve_full(&self) -> Result<(Resolved, CubeSpec, ThresholdSchedule), ConfigError> {
        let spec = CubeSpec::with_cap(self.n, self.k, self.n_max)?;
        let r = self.threshold.resolve(spec);
        if r < 1 {
            return Err(ConfigError::ThresholdBelowOne { r });
        }
        let t = match (self.variant, &self.t) {
            (ScheduleKind::Boot, None) => 0,
            (kind, None) => return Err(ConfigError::MissingRelaxation { variant: kind }),
            (_, Some(rule)) => rule.resolve(spec, &self.threshold)?,
        };
        let schedule = ThresholdSchedule::new(self.variant, r, t)?;
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        if self.p == PMode::AutoPc && !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "tolerance {} outside (0, 1)",
                self.tolerance
            )));
        }
        let resolved = Resolved {
            n: self.n,
            k: self.k,
            degree: spec.degree(),
            r,
            t,
            variant: self.variant,
            policy: POLICY.into(),
        };
        Ok((resolved, spec, schedule))
    }

    /// Reads a JSON configuration file.
    pub fn from_json_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// The integers a configuration resolves to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolved {
    pub n: u32,
    pub k: u32,
    /// `N`, the common degree.
    pub degree: u64,
    pub r: u64,
    pub t: u64,
    pub variant: ScheduleKind,
    pub policy: String,
}

/// Fixpoint-step statistics at one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub p: f64,
    pub profile: StabilizationProfile,
}

/// Everything a run produced, with the configuration that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    pub points: Vec<PercProbEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profiles: Vec<ProfilePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pc: Option<PcEstimate>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub reference: BTreeMap<String, f64>,
    pub wall_time_secs: f64,
    pub version: String,
    pub seed: u64,
}

impl RunRecord {
    /// Copy with the wall time zeroed, for comparisons between runs.
    pub fn without_wall_time(&self) -> Self {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        }
    }
}

/// Runs the sweep or the critical-probability search a configuration asks for.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord, ExperimentError> {
    let started = Instant::now();
    let (resolved, spec, schedule) = config.resolve_full()?;
    let context = |p: Option<f64>| match p {
        Some(p) => format!("{} on {spec} with {schedule} at p = {p}", config.experiment),
        None => format!("{} on {spec} with {schedule}", config.experiment),
    };
    let mut points = Vec::new();
    let mut profiles = Vec::new();
    let mut pc = None;
    match config.p {
        PMode::AutoPc => {
            let search = PcSearch {
                trials_per_point: config.trials,
                tolerance: config.tolerance,
                seed: config.seed,
                confidence: config.confidence,
            };
            let est = estimate_pc(spec, &schedule, &search).map_err(|source| {
                ExperimentError::Estimator {
                    context: context(None),
                    source,
                }
            })?;
            pc = Some(est);
        }
        mode => {
            for p in mode.values() {
                let plan = TrialPlan::new(spec, schedule, p, config.trials, config.seed)
                    .with_confidence(config.confidence);
                let wrap = |source| ExperimentError::Estimator {
                    context: context(Some(p)),
                    source,
                };
                if config.profile {
                    let profile = stabilization_profile(&plan).map_err(wrap)?;
                    points.push(PercProbEstimate {
                        p,
                        proportion: profile.percolated,
                    });
                    profiles.push(ProfilePoint { p, profile });
                } else {
                    points.push(percolation_probability(&plan).map_err(wrap)?);
                }
            }
        }
    }
    let reference = config
        .reference
        .map(|r| r.evaluate(spec, pc.as_ref()))
        .unwrap_or_default();
    Ok(RunRecord {
        config: config.clone(),
        resolved,
        points,
        profiles,
        pc,
        reference,
        wall_time_secs: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
    })
}

/// Overrides applied to every configuration of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PresetOptions {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

/// Exponent of the `r = n^a` presets.
pub const PRESET_A: f64 = 0.8;
/// Second-order offset for the `theorem2` preset; must exceed `(1 - a) / 2`.
pub const PRESET_DELTA: f64 = 0.15;
/// Relative shortfall of `p` below `n^(a-1)` in the one-step stabilization preset.
pub const PRESET_EPS1: f64 = 0.2;
/// Relaxation coefficient `t = eps2 n^a`; `PRESET_EPS1 > 2 PRESET_EPS2`.
pub const PRESET_EPS2: f64 = 0.05;
/// Coefficient of `t = c n^(k/2)` for the majority relaxation.
pub const PRESET_C2: f64 = 1.0;

const _: () = assert!(PRESET_EPS1 > 2.0 * PRESET_EPS2 && PRESET_DELTA > 0.5 * (1.0 - PRESET_A));

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 5] = [
    "theorem1",
    "theorem2",
    "theorem3",
    "stable-boot1",
    "stable-boot2",
];

/// Configurations of a named preset.
///
/// - `theorem1`: `p_c(Q_n, ceil(n^0.8))` for `n` in {12, 16, 20}, with the
///   reference `n^(a-1)`.
/// - `theorem2`: the same searches with the second-order references.
/// - `theorem3`: `p_c(Q_{2,n}, ceil(N/2))` for `n` in {8, 10, 12}, with the
///   measured gap statistic.
/// - `stable-boot1`: fixpoint-step profile of Boot1 on `Q_12` at
///   `p = (1 - eps1) n^(a-1)`, `t = ceil(eps2 n^a)`.
/// - `stable-boot2`: fixpoint-step profile of Boot2 on `Q_12` at
///   `p = n^(a-1) - n^(a/2-1+delta)`, `t = ceil(n^(a/2+delta) / 10)`.
pub fn preset(name: &str, options: PresetOptions) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let power = ThresholdRule::Power(PRESET_A);
    let mut configs: Vec<ExperimentConfig> = match name {
        "theorem1" | "theorem2" => [12, 16, 20]
            .into_iter()
            .map(|n| {
                let mut c =
                    ExperimentConfig::new(n, 1, power, ScheduleKind::Boot, None, PMode::AutoPc);
                c.trials = 20_000;
                c.tolerance = 0.02;
                c.reference = Some(if name == "theorem1" {
                    Reference::PowerLaw { a: PRESET_A }
                } else {
                    Reference::SecondOrder {
                        a: PRESET_A,
                        delta: PRESET_DELTA,
                    }
                });
                c
            })
            .collect(),
        "theorem3" => [8, 10, 12]
            .into_iter()
            .map(|n| {
                let mut c = ExperimentConfig::new(
                    n,
                    2,
                    ThresholdRule::Majority,
                    ScheduleKind::Boot,
                    None,
                    PMode::AutoPc,
                );
                c.trials = 20_000;
                c.tolerance = 0.01;
                c.reference = Some(Reference::Majority);
                c
            })
            .collect(),
        "stable-boot1" => {
            let n = 12u32;
            let p = (1.0 - PRESET_EPS1) * f64::from(n).powf(PRESET_A - 1.0);
            let t = Some(RelaxationRule::Eps2Na(PRESET_EPS2));
            let mut c = ExperimentConfig::new(n, 1, power, ScheduleKind::Boot1, t, PMode::Value(p));
            c.profile = true;
            vec![c]
        }
        "stable-boot2" => {
            let n = 12u32;
            let nf = f64::from(n);
            let p = nf.powf(PRESET_A - 1.0) - nf.powf(PRESET_A / 2.0 - 1.0 + PRESET_DELTA);
            let t = Some(RelaxationRule::HalfPower(PRESET_DELTA));
            let mut c = ExperimentConfig::new(n, 1, power, ScheduleKind::Boot2, t, PMode::Value(p));
            c.profile = true;
            vec![c]
        }
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    for c in &mut configs {
        c.experiment = name.to_string();
        if let Some(trials) = options.trials {
            c.trials = trials;
        }
        if let Some(seed) = options.seed {
            c.seed = seed;
        }
        if let Some(tolerance) = options.tolerance {
            c.tolerance = tolerance;
        }
        c.resolve()?;
    }
    Ok(configs)
}

/// `x` with 10 significant digits, shortest form, as C's `%.10g`.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-5..10).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa.to_string()), exp.abs())
    } else {
        let decimals = (9 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    }
}

fn csv_rows(record: &RunRecord) -> Vec<[String; 16]> {
    let c = &record.config;
    let res = &record.resolved;
    let row = |p: String,
               trials: String,
               est: Option<&PercProbEstimate>,
               pc: Option<&PcEstimate>|
     -> [String; 16] {
        let prop = est.map(|e| e.proportion);
        [
            c.experiment.clone(),
            res.n.to_string(),
            res.k.to_string(),
            res.variant.to_string(),
            res.r.to_string(),
            res.t.to_string(),
            p,
            trials,
            prop.map(|q| q.successes.to_string()).unwrap_or_default(),
            prop.map(|q| format_sig10(q.p_hat)).unwrap_or_default(),
            prop.map(|q| format_sig10(q.ci_low)).unwrap_or_default(),
            prop.map(|q| format_sig10(q.ci_high)).unwrap_or_default(),
            pc.map(|b| format_sig10(b.lo)).unwrap_or_default(),
            pc.map(|b| format_sig10(b.hi)).unwrap_or_default(),
            c.seed.to_string(),
            res.policy.clone(),
        ]
    };
    let mut rows: Vec<[String; 16]> = record
        .points
        .iter()
        .map(|e| {
            row(
                format_sig10(e.p),
                e.proportion.trials.to_string(),
                Some(e),
                None,
            )
        })
        .collect();
    if let Some(pc) = &record.pc {
        rows.extend(pc.evaluations.iter().map(|e| {
            row(
                format_sig10(e.p),
                e.proportion.trials.to_string(),
                Some(e),
                None,
            )
        }));
        rows.push(row(String::new(), String::new(), None, Some(pc)));
    }
    rows
}

/// Writes the CSV rows of `records` under one header.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let encode = |e: csv::Error| ExperimentError::Encode(e.to_string());
    w.write_record(CSV_HEADER).map_err(encode)?;
    for record in records {
        for row in csv_rows(record) {
            w.write_record(&row).map_err(encode)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON document: the record itself, or an array for several.
pub fn write_json<W: Write>(records: &[RunRecord], mut out: W) -> Result<(), ExperimentError> {
    let encode = |e: serde_json::Error| ExperimentError::Encode(e.to_string());
    match records {
        [one] => serde_json::to_writer_pretty(&mut out, one).map_err(encode)?,
        many => serde_json::to_writer_pretty(&mut out, many).map_err(encode)?,
    }
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `records` in `format`.
pub fn emit_results<W: Write>(
    records: &[RunRecord],
    format: OutputFormat,
    out: W,
) -> Result<(), ExperimentError> {
    match format {
        OutputFormat::Csv => write_csv(records, out),
        OutputFormat::Json => write_json(records, out),
    }
}

/// Parses the output of [`write_json`].
pub fn parse_json(text: &str) -> Result<Vec<RunRecord>, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|r| vec![r])
    }
}
