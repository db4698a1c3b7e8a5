//! Experiment configuration files.
//!
//! A config is one JSON object. Recognized keys:
//!
//! | key         | used by                                   |
//! |-------------|-------------------------------------------|
//! | `instance`  | every verb except `thresholds`            |
//! | `policy`    | `joint-compare`, `rate-sweep`             |
//! | `horizon`   | `inference-sweep`, `joint-compare`, `oracle` |
//! | `reps`      | simulation verbs                          |
//! | `seed`      | simulation verbs                          |
//! | `lambda`    | `joint-compare`, `rate-sweep`, `oracle`   |
//! | `estimator` | `joint-compare`                           |
//! | `sweep`     | pilot sizes or horizons                   |
//! | `profiles`  | `thresholds`                              |
//! | `n1_cap`    | `thresholds`                              |
//!
//! `policy` is a policy object, a bare policy name, or a list of either.

use std::fmt;
use std::path::Path;

use anyhow::{anyhow, Context};
use banditlab::design::{VarianceProfile, DEFAULT_N1_CAP};
use banditlab::estimators::EstimatorKind;
use banditlab::harness::{
    Experiment, ExperimentConfig, SweepBase, DEFAULT_INFERENCE_REPS, DEFAULT_JOINT_REPS,
};
use banditlab::oracle::JointProblem;
use banditlab::policies::{PolicyRegistry, PolicySpec};
use banditlab::BanditInstance;
use serde::Deserialize;
use serde_json::Value;

pub const DEFAULT_SEED: u64 = 2024;

/// A problem with the config itself, as opposed to a numerical failure.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub instance: Option<BanditInstance>,
    pub policy: Option<Value>,
    pub horizon: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub estimator: Option<EstimatorKind>,
    pub sweep: Option<Vec<usize>>,
    pub profiles: Option<Vec<Vec<f64>>>,
    pub n1_cap: Option<usize>,
}

/// Reads `path`, applies `key=value` overrides, and parses the result.
pub fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> anyhow::Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: invalid JSON: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(s) = seed {
        set_path(&mut doc, "seed", Value::from(s))?;
    }
    parse(doc).with_context(|| format!("in {}", path.display()))
}

pub fn parse(doc: Value) -> anyhow::Result<Config> {
    if !doc.is_object() {
        return Err(config_err("config must be a JSON object"));
    }
    let cfg: Config = serde_json::from_value(doc).map_err(|e| config_err(e.to_string()))?;
    if let Some(inst) = &cfg.instance {
        inst.validate().map_err(|e| config_err(format!("instance: {e}")))?;
    }
    if let Some(l) = cfg.lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(config_err(format!("lambda must lie in [0, 1], got {l}")));
        }
    }
    if cfg.reps == Some(0) {
        return Err(config_err("reps must be at least 1"));
    }
    if cfg.horizon == Some(0) {
        return Err(config_err("horizon must be positive"));
    }
    if let Some(s) = &cfg.sweep {
        if s.is_empty() || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("sweep must be a non-empty, strictly ascending list"));
        }
    }
    Ok(cfg)
}

/// `a.b=value`: `value` is parsed as JSON, falling back to a string.
fn apply_override(doc: &mut Value, spec: &str) -> anyhow::Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{spec}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    set_path(doc, key, value)
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> anyhow::Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert((*part).to_owned(), value);
                    return Ok(());
                }
                map.entry(*part).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| config_err(format!("override `{key}`: `{part}` is not an index")))?;
                let len = items.len();
                let slot = items.get_mut(i).ok_or_else(|| {
                    config_err(format!("override `{key}`: index {i} out of range ({len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(config_err(format!("override `{key}`: `{part}` is not inside an object"))),
        };
    }
    Err(config_err("empty override key"))
}

impl Config {
    fn instance(&self) -> anyhow::Result<&BanditInstance> {
        self.instance.as_ref().ok_or_else(|| config_err("missing `instance`"))
    }

    fn horizon(&self) -> anyhow::Result<usize> {
        self.horizon.ok_or_else(|| config_err("missing `horizon`"))
    }

    fn lambda(&self) -> anyhow::Result<f64> {
        self.lambda.ok_or_else(|| config_err("missing `lambda`"))
    }

    fn sweep(&self) -> anyhow::Result<&[usize]> {
        self.sweep.as_deref().ok_or_else(|| config_err("missing `sweep`"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn policies(&self) -> anyhow::Result<Vec<PolicySpec>> {
        let v = self.policy.as_ref().ok_or_else(|| config_err("missing `policy`"))?;
        let items = match v {
            Value::Array(items) if items.is_empty() => {
                return Err(config_err("`policy` list is empty"))
            }
            Value::Array(items) => items.clone(),
            other => vec![other.clone()],
        };
        items
            .into_iter()
            .enumerate()
            .map(|(i, item)| match item {
                Value::String(name) => Ok(PolicySpec::new(name)),
                obj => serde_json::from_value(obj)
                    .map_err(|e| config_err(format!("policy {i}: {e}"))),
            })
            .collect()
    }

    fn reject(&self, verb: &str, keys: &[(&str, bool)]) -> anyhow::Result<()> {
        for (key, present) in keys {
            if *present {
                return Err(config_err(format!("`{key}` is not used by {verb}")));
            }
        }
        Ok(())
    }

    pub fn thresholds_plan(&self) -> anyhow::Result<ThresholdsPlan> {
        self.reject(
            "thresholds",
            &[
                ("instance", self.instance.is_some()),
                ("policy", self.policy.is_some()),
                ("sweep", self.sweep.is_some()),
            ],
        )?;
        let profiles = self
            .profiles
            .clone()
            .ok_or_else(|| config_err("missing `profiles`"))?;
        if profiles.is_empty() {
            return Err(config_err("`profiles` is empty"));
        }
        let n1_cap = self.n1_cap.unwrap_or(DEFAULT_N1_CAP);
        if n1_cap < 3 {
            return Err(config_err("n1_cap must be at least 3"));
        }
        Ok(ThresholdsPlan { profiles, n1_cap })
    }

    pub fn inference_plan(&self) -> anyhow::Result<InferencePlan> {
        self.reject(
            "inference-sweep",
            &[
                ("policy", self.policy.is_some()),
                ("profiles", self.profiles.is_some()),
                ("lambda", self.lambda.is_some()),
            ],
        )?;
        if let Some(e) = self.estimator {
            if e != EstimatorKind::Pcipw {
                return Err(config_err(format!(
                    "inference-sweep compares pcipw against uniform sample means; estimator `{}` is not supported",
                    e.as_str()
                )));
            }
        }
        let instance = self.instance()?.clone();
        let horizon = self.horizon()?;
        let pilots = self.sweep()?.to_vec();
        let k = instance.num_arms();
        VarianceProfile::new(instance.std_devs().to_vec()).map_err(|e| config_err(e.to_string()))?;
        for &n1 in &pilots {
            if n1 % k != 0 || n1 >= horizon || n1 == 0 {
                return Err(config_err(format!(
                    "pilot size {n1} must be a positive multiple of K = {k} below horizon {horizon}"
                )));
            }
        }
        Ok(InferencePlan {
            base: SweepBase {
                instance,
                horizon,
                reps: self.reps.unwrap_or(DEFAULT_INFERENCE_REPS),
                base_seed: self.seed(),
            },
            pilots,
        })
    }

    /// One experiment per policy, validated against the registry.
    pub fn joint_plan(&self, registry: &PolicyRegistry) -> anyhow::Result<Vec<Experiment>> {
        self.reject(
            "joint-compare",
            &[
                ("sweep", self.sweep.is_some()),
                ("profiles", self.profiles.is_some()),
            ],
        )?;
        let horizon = self.horizon()?;
        self.experiments(registry, horizon, self.estimator.unwrap_or(EstimatorKind::SampleMean))
    }

    pub fn rate_plan(&self, registry: &PolicyRegistry) -> anyhow::Result<RatePlan> {
        self.reject(
            "rate-sweep",
            &[
                ("horizon", self.horizon.is_some()),
                ("profiles", self.profiles.is_some()),
                ("estimator", self.estimator.is_some()),
            ],
        )?;
        let horizons = self.sweep()?.to_vec();
        for &n in &horizons {
            self.experiments(registry, n, EstimatorKind::SampleMean)?;
        }
        Ok(RatePlan {
            instance: self.instance()?.clone(),
            policies: self.policies()?,
            horizons,
            reps: self.reps.unwrap_or(DEFAULT_JOINT_REPS),
            seed: self.seed(),
            lambda: self.lambda()?,
        })
    }

    pub fn oracle_plan(&self) -> anyhow::Result<OraclePlan> {
        self.reject(
            "oracle",
            &[
                ("policy", self.policy.is_some()),
                ("profiles", self.profiles.is_some()),
                ("reps", self.reps.is_some()),
                ("estimator", self.estimator.is_some()),
            ],
        )?;
        let instance = self.instance()?;
        let lambda = self.lambda()?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(config_err(format!("oracle needs lambda strictly inside (0, 1), got {lambda}")));
        }
        let mut horizons: Vec<usize> = self.sweep.clone().unwrap_or_default();
        if let Some(h) = self.horizon {
            horizons.push(h);
        }
        horizons.sort_unstable();
        horizons.dedup();
        if horizons.is_empty() {
            return Err(config_err("oracle needs `horizon` or `sweep`"));
        }
        let problem = JointProblem::from_instance(instance, lambda, horizons[0])
            .map_err(|e| config_err(e.to_string()))?;
        Ok(OraclePlan { problem, horizons })
    }

    fn experiments(
        &self,
        registry: &PolicyRegistry,
        horizon: usize,
        estimator: EstimatorKind,
    ) -> anyhow::Result<Vec<Experiment>> {
        let instance = self.instance()?;
        let lambda = self.lambda()?;
        self.policies()?
            .into_iter()
            .map(|policy| {
                let label = policy.label().to_owned();
                Experiment::new(
                    ExperimentConfig {
                        instance: instance.clone(),
                        policy,
                        horizon,
                        reps: self.reps.unwrap_or(DEFAULT_JOINT_REPS),
                        base_seed: self.seed(),
                        lambda: Some(lambda),
                        estimator,
                    },
                    registry,
                )
                .map_err(|e| config_err(format!("policy `{label}`: {e}")))
            })
            .collect()
    }

    /// Validates against whichever verb the present keys describe.
    pub fn validate(&self, registry: &PolicyRegistry) -> anyhow::Result<&'static str> {
        if self.profiles.is_some() {
            self.thresholds_plan().map(|_| "thresholds")
        } else if self.policy.is_some() && self.sweep.is_some() {
            self.rate_plan(registry).map(|_| "rate-sweep")
        } else if self.policy.is_some() {
            self.joint_plan(registry).map(|_| "joint-compare")
        } else if self.sweep.is_some() && self.lambda.is_none() {
            self.inference_plan().map(|_| "inference-sweep")
        } else if self.instance.is_some() && self.lambda.is_some() {
            self.oracle_plan().map(|_| "oracle")
        } else {
            Err(anyhow!(ConfigError(
                "config does not describe any verb: need `profiles`, `policy`, `sweep`, or `instance` with `lambda`".into()
            )))
        }
    }
}

#[derive(Debug)]
pub struct ThresholdsPlan {
    pub profiles: Vec<Vec<f64>>,
    pub n1_cap: usize,
}

#[derive(Debug)]
pub struct InferencePlan {
    pub base: SweepBase,
    pub pilots: Vec<usize>,
}

#[derive(Debug)]
pub struct RatePlan {
    pub instance: BanditInstance,
    pub policies: Vec<PolicySpec>,
    pub horizons: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub lambda: f64,
}

#[derive(Debug)]
pub struct OraclePlan {
    pub problem: JointProblem,
    pub horizons: Vec<usize>,
}
