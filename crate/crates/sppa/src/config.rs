//! Experiment configuration: a single text file of flat dotted keys.
//!
//! ```text
//! # Frechet mean in Euclidean 5-space
//! run.space = euclidean:5
//! run.integrand.family = squared-distance
//! run.integrand.anchors = anchors.txt
//! run.x0 = 0.5,0,0,0,0
//! run.schedule = power:c=1,p=0.75,n0=1
//! run.iterations = 100000
//! run.seed = 42
//! run.replicas = 20
//! run.reference = baseline
//! baseline.compute = true
//! diagnostics.checks = step-bound,quasi-fejer,summability,boundedness,convergence
//! diagnostics.eps = 0.05
//! output.dir = out
//! ```
//!
//! Unknown keys are rejected outright — a silently ignored typo corrupts an
//! experiment — and duplicate keys are errors. Values are flat strings with
//! small grammars (`euclidean:5`, `power:c=1,p=0.75,n0=1`, point encodings
//! from the geometry module); file paths resolve relative to the config
//! file. The full key list lives in the README.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::simulators::{AlphaSampler, BetaRule, GammaRule};
use crate::geometry::Space;
use crate::schedule::{PowerTail, StepSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("duplicate key {0}")]
    Duplicate(String),
    #[error("unknown key(s): {0}")]
    UnknownKeys(String),
    #[error("missing required key {0}")]
    Missing(String),
    #[error("key {key}: {reason}")]
    Value { key: String, reason: String },
    #[error("config is inconsistent: {0}")]
    Inconsistent(String),
    #[error("io error reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Parsed key/value pairs with consumption tracking.
pub struct KeyBag {
    values: BTreeMap<String, String>,
    /// Directory against which relative paths resolve.
    pub base_dir: PathBuf,
}

impl KeyBag {
    pub fn parse(text: &str, base_dir: &Path) -> Result<KeyBag> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                reason: "expected `key = value`".into(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: idx + 1, reason: "empty key".into() });
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(ConfigError::Duplicate(key));
            }
        }
        Ok(KeyBag { values, base_dir: base_dir.to_path_buf() })
    }

    pub fn read_file(path: &Path) -> Result<KeyBag> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        KeyBag::parse(&text, &base)
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    pub fn require(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// Error out if any keys were never consumed.
    pub fn finish(self) -> Result<()> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let keys: Vec<String> = self.values.into_keys().collect();
            Err(ConfigError::UnknownKeys(keys.join(", ")))
        }
    }

    pub fn resolve_path(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn value_err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), reason: reason.into() }
}

pub fn parse_typed<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| value_err(key, format!("cannot parse {value:?}: {e}")))
}

/// `euclidean:D | hyperboloid:D | spider:K | product:[spec;spec;...]`
pub fn parse_space(key: &str, value: &str) -> Result<Space> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| value_err(key, format!("expected kind:params, got {value:?}")))?;
    let build = |r: std::result::Result<Space, crate::geometry::GeometryError>| {
        r.map_err(|e| value_err(key, e.to_string()))
    };
    match kind.trim() {
        "euclidean" => build(Space::euclidean(parse_typed(key, rest.trim())?)),
        "hyperboloid" => build(Space::hyperboloid(parse_typed(key, rest.trim())?)),
        "spider" => build(Space::spider(parse_typed(key, rest.trim())?)),
        "product" => {
            let inner = rest.trim();
            let inner = inner
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| value_err(key, "product components go in [...]"))?;
            let mut components = Vec::new();
            for part in split_top_level(inner, ';') {
                components.push(parse_space(key, part.trim())?);
            }
            build(Space::product(components))
        }
        other => Err(value_err(key, format!("unknown space kind {other:?}"))),
    }
}

/// Split on `sep` outside any [...] brackets.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_named_fields<'a>(key: &str, body: &'a str) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut out = BTreeMap::new();
    for part in body.split(',') {
        let (name, v) = part
            .split_once('=')
            .ok_or_else(|| value_err(key, format!("expected name=value, got {part:?}")))?;
        out.insert(name.trim(), v.trim());
    }
    Ok(out)
}

/// `power:c=1,p=0.75,n0=1` or `explicit:0.5,0.25[;tail=power:c=..,p=..,n0=..]`
pub fn parse_schedule(key: &str, value: &str) -> Result<StepSchedule> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| value_err(key, format!("expected kind:params, got {value:?}")))?;
    match kind.trim() {
        "power" => {
            let fields = parse_named_fields(key, rest)?;
            let c = parse_typed(key, fields.get("c").copied().unwrap_or("1"))?;
            let p =
                parse_typed(key, fields.get("p").copied().ok_or_else(|| value_err(key, "power needs p="))?)?;
            let n0 = parse_typed(key, fields.get("n0").copied().unwrap_or("1"))?;
            StepSchedule::power(c, p, n0).map_err(|e| value_err(key, e.to_string()))
        }
        "explicit" => {
            let mut parts = rest.splitn(2, ";tail=");
            let prefix_str = parts.next().unwrap_or("");
            let tail = match parts.next() {
                Some(t) => match parse_schedule(key, t)? {
                    StepSchedule::Power { c, p, n0 } => Some(PowerTail { c, p, n0 }),
                    _ => return Err(value_err(key, "tail rule must be a power schedule")),
                },
                None => None,
            };
            let prefix = prefix_str
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_typed(key, s.trim()))
                .collect::<Result<Vec<f64>>>()?;
            StepSchedule::explicit(prefix, tail).map_err(|e| value_err(key, e.to_string()))
        }
        other => Err(value_err(key, format!("unknown schedule kind {other:?}"))),
    }
}

/// `constant:1` | `uniform:0,2`
pub fn parse_alpha(key: &str, value: &str) -> Result<AlphaSampler> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| value_err(key, format!("expected kind:params, got {value:?}")))?;
    match kind.trim() {
        "constant" => Ok(AlphaSampler::Constant(parse_typed(key, rest.trim())?)),
        "uniform" => {
            let (lo, hi) = rest
                .split_once(',')
                .ok_or_else(|| value_err(key, "uniform needs lo,hi"))?;
            Ok(AlphaSampler::Uniform {
                lo: parse_typed(key, lo.trim())?,
                hi: parse_typed(key, hi.trim())?,
            })
        }
        other => Err(value_err(key, format!("unknown alpha kind {other:?}"))),
    }
}

/// `constant:1`
pub fn parse_gamma(key: &str, value: &str) -> Result<GammaRule> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| value_err(key, format!("expected kind:params, got {value:?}")))?;
    match kind.trim() {
        "constant" => Ok(GammaRule::Constant(parse_typed(key, rest.trim())?)),
        other => Err(value_err(key, format!("unknown gamma kind {other:?}"))),
    }
}

/// `power:scale=1,q=0.25` | `recursion:beta0=1,balance=0.5`
pub fn parse_beta(key: &str, value: &str) -> Result<BetaRule> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| value_err(key, format!("expected kind:params, got {value:?}")))?;
    let fields = parse_named_fields(key, rest)?;
    match kind.trim() {
        "power" => Ok(BetaRule::PowerDecay {
            scale: parse_typed(key, fields.get("scale").copied().unwrap_or("1"))?,
            q: parse_typed(key, fields.get("q").copied().ok_or_else(|| value_err(key, "power needs q="))?)?,
        }),
        "recursion" => Ok(BetaRule::DrivenRecursion {
            beta0: parse_typed(key, fields.get("beta0").copied().unwrap_or("1"))?,
            balance: parse_typed(key, fields.get("balance").copied().unwrap_or("0.5"))?,
        }),
        other => Err(value_err(key, format!("unknown beta kind {other:?}"))),
    }
}

/// How the run is iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Sppa,
    Splitting,
}

/// Which reference point diagnostics compare against.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec {
    None,
    /// Use the computed baseline minimizer.
    Baseline,
    /// Explicit point in the geometry text encoding.
    Point(String),
}

/// Diagnostics checks selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    StepBound,
    ProxInequality,
    Growth,
    QuasiFejer,
    Summability,
    Boundedness,
    Oscillation,
    Convergence,
    AsymptoticCenter,
}

impl CheckKind {
    pub fn parse(s: &str) -> Result<CheckKind> {
        Ok(match s {
            "step-bound" => CheckKind::StepBound,
            "prox-inequality" => CheckKind::ProxInequality,
            "growth" => CheckKind::Growth,
            "quasi-fejer" => CheckKind::QuasiFejer,
            "summability" => CheckKind::Summability,
            "boundedness" => CheckKind::Boundedness,
            "oscillation" => CheckKind::Oscillation,
            "convergence" => CheckKind::Convergence,
            "asymptotic-center" => CheckKind::AsymptoticCenter,
            other => {
                return Err(value_err(
                    "diagnostics.checks",
                    format!(
                        "unknown check {other:?} (known: step-bound, prox-inequality, growth, \
                         quasi-fejer, summability, boundedness, oscillation, convergence, \
                         asymptotic-center)"
                    ),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::StepBound => "step-bound",
            CheckKind::ProxInequality => "prox-inequality",
            CheckKind::Growth => "growth",
            CheckKind::QuasiFejer => "quasi-fejer",
            CheckKind::Summability => "summability",
            CheckKind::Boundedness => "boundedness",
            CheckKind::Oscillation => "oscillation",
            CheckKind::Convergence => "convergence",
            CheckKind::AsymptoticCenter => "asymptotic-center",
        }
    }

    /// Whether the check needs a reference point / baseline minimizer.
    pub fn needs_reference(&self) -> bool {
        matches!(
            self,
            CheckKind::QuasiFejer
                | CheckKind::Summability
                | CheckKind::Boundedness
                | CheckKind::Oscillation
                | CheckKind::Convergence
                | CheckKind::AsymptoticCenter
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandFamilyChoice {
    SquaredDistance,
    Distance,
    FiniteSum,
}

/// Fully parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub space: Space,
    pub mode: RunMode,
    pub family: IntegrandFamilyChoice,
    /// Component family of a finite sum.
    pub component_family: IntegrandFamilyChoice,
    pub anchors_path: PathBuf,
    pub base_point: Option<String>,
    pub operating_radius: Option<f64>,
    pub x0: String,
    pub schedule: StepSchedule,
    pub iterations: u64,
    pub seed: u64,
    pub trace_stride: u64,
    pub big_f_samples: u32,
    pub replicas: u32,
    pub reference: ReferenceSpec,
    pub compute_baseline: bool,
    pub checks: Vec<CheckKind>,
    pub mc_samples: u32,
    pub qf_states: u32,
    pub levels: Vec<f64>,
    pub eps: f64,
    pub diag_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        Self::from_bag(KeyBag::read_file(path)?)
    }

    pub fn from_str_at(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
        Self::from_bag(KeyBag::parse(text, base_dir)?)
    }

    fn from_bag(mut bag: KeyBag) -> Result<ExperimentConfig> {
        let space = parse_space("run.space", &bag.require("run.space")?)?;
        let mode = match bag.take("run.mode").as_deref() {
            None | Some("sppa") => RunMode::Sppa,
            Some("splitting") => RunMode::Splitting,
            Some(other) => {
                return Err(value_err("run.mode", format!("expected sppa|splitting, got {other:?}")))
            }
        };
        let family_key = bag.require("run.integrand.family")?;
        let parse_family = |key: &str, v: &str| -> Result<IntegrandFamilyChoice> {
            Ok(match v {
                "squared-distance" => IntegrandFamilyChoice::SquaredDistance,
                "distance" => IntegrandFamilyChoice::Distance,
                "finite-sum" => IntegrandFamilyChoice::FiniteSum,
                other => {
                    return Err(value_err(
                        key,
                        format!("expected squared-distance|distance|finite-sum, got {other:?}"),
                    ))
                }
            })
        };
        let family = parse_family("run.integrand.family", &family_key)?;
        let component_family = match bag.take("run.integrand.component_family") {
            Some(v) => {
                let f = parse_family("run.integrand.component_family", &v)?;
                if f == IntegrandFamilyChoice::FiniteSum {
                    return Err(value_err(
                        "run.integrand.component_family",
                        "components cannot themselves be finite sums",
                    ));
                }
                f
            }
            None => IntegrandFamilyChoice::Distance,
        };
        let anchors_raw = bag.require("run.integrand.anchors")?;
        let anchors_path = bag.resolve_path(&anchors_raw);
        let base_point = bag.take("run.integrand.base_point");
        let operating_radius = bag
            .take("run.integrand.operating_radius")
            .map(|v| parse_typed("run.integrand.operating_radius", &v))
            .transpose()?;
        let x0 = bag.require("run.x0")?;
        let schedule = parse_schedule("run.schedule", &bag.require("run.schedule")?)?;
        let iterations = parse_typed("run.iterations", &bag.require("run.iterations")?)?;
        let seed = parse_typed("run.seed", &bag.require("run.seed")?)?;
        let trace_stride = match bag.take("run.trace_stride") {
            Some(v) => parse_typed("run.trace_stride", &v)?,
            None => crate::engine::DEFAULT_TRACE_STRIDE,
        };
        let big_f_samples = match bag.take("run.big_f_samples") {
            Some(v) => parse_typed("run.big_f_samples", &v)?,
            None => 1000,
        };
        let replicas = match bag.take("run.replicas") {
            Some(v) => parse_typed("run.replicas", &v)?,
            None => 1,
        };
        let reference = match bag.take("run.reference") {
            None => ReferenceSpec::None,
            Some(v) if v == "baseline" => ReferenceSpec::Baseline,
            Some(v) => ReferenceSpec::Point(v),
        };
        let compute_baseline = match bag.take("baseline.compute") {
            Some(v) => parse_typed("baseline.compute", &v)?,
            None => false,
        };
        let checks = match bag.take("diagnostics.checks") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(CheckKind::parse)
                .collect::<Result<Vec<_>>>()?,
        };
        let mc_samples = match bag.take("diagnostics.mc_samples") {
            Some(v) => parse_typed("diagnostics.mc_samples", &v)?,
            None => 10_000,
        };
        let qf_states = match bag.take("diagnostics.states") {
            Some(v) => parse_typed("diagnostics.states", &v)?,
            None => 200,
        };
        let levels = match bag.take("diagnostics.levels") {
            None => vec![0.1, 0.5],
            Some(v) => v
                .split(',')
                .map(|s| parse_typed("diagnostics.levels", s.trim()))
                .collect::<Result<Vec<f64>>>()?,
        };
        let eps = match bag.take("diagnostics.eps") {
            Some(v) => parse_typed("diagnostics.eps", &v)?,
            None => 1e-2,
        };
        let diag_seed = match bag.take("diagnostics.seed") {
            Some(v) => parse_typed("diagnostics.seed", &v)?,
            None => seed ^ 0x5EED,
        };
        let output_raw = bag.take("output.dir").unwrap_or_else(|| "out".into());
        let output_dir = bag.resolve_path(&output_raw);
        bag.finish()?;

        let cfg = ExperimentConfig {
            space,
            mode,
            family,
            component_family,
            anchors_path,
            base_point,
            operating_radius,
            x0,
            schedule,
            iterations,
            seed,
            trace_stride,
            big_f_samples,
            replicas,
            reference,
            compute_baseline,
            checks,
            mc_samples,
            qf_states,
            levels,
            eps,
            diag_seed,
            output_dir,
        };
        cfg.check_consistency()?;
        Ok(cfg)
    }

    fn check_consistency(&self) -> Result<()> {
        if self.mode == RunMode::Splitting && self.family != IntegrandFamilyChoice::FiniteSum {
            return Err(ConfigError::Inconsistent(
                "run.mode = splitting requires run.integrand.family = finite-sum".into(),
            ));
        }
        if !self.anchors_path.exists() {
            return Err(ConfigError::Inconsistent(format!(
                "anchors file {} does not exist",
                self.anchors_path.display()
            )));
        }
        let needs_ref = self.checks.iter().any(CheckKind::needs_reference);
        if needs_ref && self.reference == ReferenceSpec::None && !self.compute_baseline {
            return Err(ConfigError::Inconsistent(
                "the requested checks need run.reference (or baseline.compute = true)".into(),
            ));
        }
        if self.replicas == 0 {
            return Err(ConfigError::Inconsistent("run.replicas must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parsed `simulate` configuration.
#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub schedule: StepSchedule,
    pub n: u64,
    pub replicas: u32,
    pub seed: u64,
    pub alpha: AlphaSampler,
    pub adversarial: bool,
    pub theta: f64,
    pub gamma: GammaRule,
    pub beta: BetaRule,
    pub admissible: bool,
    /// Re-derive θ, α, γ, β from the run artifacts in this directory
    /// (manifest.json + baseline) instead of the explicit rules.
    pub derive_from: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn from_file(path: &Path) -> Result<SimulateConfig> {
        let mut bag = KeyBag::read_file(path)?;
        let schedule = match bag.take("simulate.schedule") {
            Some(v) => parse_schedule("simulate.schedule", &v)?,
            None => StepSchedule::default_power(),
        };
        let n = parse_typed("simulate.n", &bag.require("simulate.n")?)?;
        let replicas = match bag.take("simulate.replicas") {
            Some(v) => parse_typed("simulate.replicas", &v)?,
            None => 50,
        };
        let seed = match bag.take("simulate.seed") {
            Some(v) => parse_typed("simulate.seed", &v)?,
            None => 0,
        };
        let alpha = match bag.take("simulate.alpha") {
            Some(v) => parse_alpha("simulate.alpha", &v)?,
            None => AlphaSampler::Uniform { lo: 0.0, hi: 2.0 },
        };
        let adversarial = match bag.take("simulate.adversarial") {
            Some(v) => parse_typed("simulate.adversarial", &v)?,
            None => false,
        };
        let theta = match bag.take("simulate.theta") {
            Some(v) => parse_typed("simulate.theta", &v)?,
            None => 1.0,
        };
        let gamma = match bag.take("simulate.gamma") {
            Some(v) => parse_gamma("simulate.gamma", &v)?,
            None => GammaRule::Constant(1.0),
        };
        let beta = match bag.take("simulate.beta") {
            Some(v) => parse_beta("simulate.beta", &v)?,
            None => BetaRule::DrivenRecursion { beta0: 1.0, balance: 0.5 },
        };
        let admissible = match bag.take("simulate.admissible") {
            Some(v) => parse_typed("simulate.admissible", &v)?,
            None => true,
        };
        let derive_from = bag.take("simulate.derive_from").map(|v| bag.resolve_path(&v));
        bag.finish()?;
        Ok(SimulateConfig {
            schedule,
            n,
            replicas,
            seed,
            alpha,
            adversarial,
            theta,
            gamma,
            beta,
            admissible,
            derive_from,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_anchor_file(dir: &Path) -> PathBuf {
        let path = dir.join("anchors.txt");
        std::fs::write(&path, "0,0\n2,0\n").unwrap();
        path
    }

    fn minimal_config(dir: &Path) -> String {
        write_anchor_file(dir);
        "run.space = euclidean:2\n\
         run.integrand.family = squared-distance\n\
         run.integrand.anchors = anchors.txt\n\
         run.x0 = 2,0\n\
         run.schedule = power:c=1,p=1,n0=1\n\
         run.iterations = 10\n\
         run.seed = 1\n"
            .to_string()
    }

    #[test]
    fn minimal_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_str_at(&minimal_config(dir.path()), dir.path()).unwrap();
        assert_eq!(cfg.iterations, 10);
        assert_eq!(cfg.replicas, 1);
        assert_eq!(cfg.mode, RunMode::Sppa);
        assert!(cfg.checks.is_empty());
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = minimal_config(dir.path()) + "run.schedul = power:p=1\n";
        match ExperimentConfig::from_str_at(&text, dir.path()) {
            Err(ConfigError::UnknownKeys(keys)) => assert!(keys.contains("run.schedul")),
            other => panic!("expected unknown-key error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = minimal_config(dir.path()) + "run.seed = 2\n";
        assert!(matches!(
            ExperimentConfig::from_str_at(&text, dir.path()),
            Err(ConfigError::Duplicate(_))
        ));
    }

    #[test]
    fn splitting_requires_finite_sum() {
        let dir = tempfile::tempdir().unwrap();
        let text = minimal_config(dir.path()) + "run.mode = splitting\n";
        assert!(matches!(
            ExperimentConfig::from_str_at(&text, dir.path()),
            Err(ConfigError::Inconsistent(_))
        ));
    }

    #[test]
    fn missing_anchor_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = minimal_config(dir.path()).replace("anchors.txt", "nope.txt");
        assert!(matches!(
            ExperimentConfig::from_str_at(&text, dir.path()),
            Err(ConfigError::Inconsistent(_))
        ));
    }

    #[test]
    fn checks_need_reference() {
        let dir = tempfile::tempdir().unwrap();
        let text = minimal_config(dir.path()) + "diagnostics.checks = summability\n";
        assert!(matches!(
            ExperimentConfig::from_str_at(&text, dir.path()),
            Err(ConfigError::Inconsistent(_))
        ));
        let ok = minimal_config(dir.path())
            + "diagnostics.checks = summability\nbaseline.compute = true\nrun.reference = baseline\n";
        assert!(ExperimentConfig::from_str_at(&ok, dir.path()).is_ok());
    }

    #[test]
    fn nested_product_space_parses() {
        let s = parse_space("run.space", "product:[euclidean:2;product:[spider:3;euclidean:1]]")
            .unwrap();
        match s {
            Space::Product { components } => {
                assert_eq!(components.len(), 2);
                assert!(matches!(components[1], Space::Product { .. }));
            }
            _ => panic!("expected product"),
        }
    }

    #[test]
    fn schedule_grammar() {
        assert_eq!(
            parse_schedule("k", "power:c=1,p=0.75,n0=1").unwrap(),
            StepSchedule::power(1.0, 0.75, 1).unwrap()
        );
        let explicit = parse_schedule("k", "explicit:0.5,0.25;tail=power:c=1,p=1,n0=3").unwrap();
        match explicit {
            StepSchedule::Explicit { prefix, tail } => {
                assert_eq!(prefix, vec![0.5, 0.25]);
                assert_eq!(tail, Some(PowerTail { c: 1.0, p: 1.0, n0: 3 }));
            }
            _ => panic!(),
        }
        assert!(parse_schedule("k", "power:p=0").is_err());
    }

    mod fuzz {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            // Arbitrary text must produce an error or a config, never a panic.
            #[test]
            fn parser_never_panics(text in ".{0,200}") {
                let dir = std::env::temp_dir();
                let _ = ExperimentConfig::from_str_at(&text, &dir);
            }

            #[test]
            fn space_grammar_never_panics(s in ".{0,60}") {
                let _ = parse_space("k", &s);
                let _ = parse_schedule("k", &s);
                let _ = parse_alpha("k", &s);
                let _ = parse_beta("k", &s);
            }
        }
    }

    #[test]
    fn simulate_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.cfg");
        std::fs::write(
            &path,
            "simulate.n = 1000\nsimulate.alpha = uniform:0,2\nsimulate.beta = power:scale=1,q=0.25\n",
        )
        .unwrap();
        let cfg = SimulateConfig::from_file(&path).unwrap();
        assert_eq!(cfg.n, 1000);
        assert_eq!(cfg.alpha, AlphaSampler::Uniform { lo: 0.0, hi: 2.0 });
        assert_eq!(cfg.beta, BetaRule::PowerDecay { scale: 1.0, q: 0.25 });
    }
}
