//! Regret minimizers used on exploitation rounds of the mixture policies.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::RunningMoments;

pub trait ExploitAlgorithm: Send {
    fn choose(&mut self, rng: &mut RngStream) -> usize;

    fn update(&mut self, arm: usize, reward: f64);

    /// The arm this rule would pick right now, for rules that do not
    /// randomize.
    fn deterministic_choice(&self) -> Option<usize> {
        None
    }
}

pub trait AlgBuilder: Send + Sync + fmt::Debug {
    /// A fresh instance for arms with reward standard deviations `std_devs`.
    fn build(&self, std_devs: &[f64]) -> Box<dyn ExploitAlgorithm>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgSpec {
    pub kind: String,
    /// Thompson noise scale `s` shared by all arms: draws are
    /// `N(mean_i, s^2 / n_i)`. Unset means each arm's own `sigma_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// UCB1 bonus multiplier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl AlgSpec {
    pub fn thompson() -> Self {
        Self {
            kind: "thompson".into(),
            scale: None,
            c: None,
        }
    }
}

pub type AlgConstructor = fn(&AlgSpec) -> Result<Arc<dyn AlgBuilder>>;

#[derive(Clone)]
pub struct AlgRegistry {
    entries: BTreeMap<String, AlgConstructor>,
}

impl fmt::Debug for AlgRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl AlgRegistry {
    pub fn with_builtins() -> Self {
        let mut entries: BTreeMap<String, AlgConstructor> = BTreeMap::new();
        entries.insert("thompson".into(), thompson_ctor);
        entries.insert("ucb1".into(), ucb1_ctor);
        Self { entries }
    }

    pub fn register(&mut self, name: &str, ctor: AlgConstructor) {
        self.entries.insert(name.to_owned(), ctor);
    }

    /// Builds the named algorithm; `None` selects Gaussian Thompson sampling.
    pub fn build(&self, spec: Option<&AlgSpec>) -> Result<Arc<dyn AlgBuilder>> {
        let default = AlgSpec::thompson();
        let spec = spec.unwrap_or(&default);
        let ctor = self.entries.get(&spec.kind).ok_or_else(|| Error::Unknown {
            kind: "exploitation algorithm",
            name: spec.kind.clone(),
        })?;
        ctor(spec)
    }
}

fn positive(v: Option<f64>, default: f64, what: &str) -> Result<f64> {
    let v = v.unwrap_or(default);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(format!("{what} must be positive, got {v}")));
    }
    Ok(v)
}

fn thompson_ctor(spec: &AlgSpec) -> Result<Arc<dyn AlgBuilder>> {
    if spec.c.is_some() {
        return Err(Error::invalid("thompson does not take parameter `c`"));
    }
    let scale = match spec.scale {
        Some(s) => Some(positive(Some(s), 1.0, "thompson scale")?),
        None => None,
    };
    Ok(Arc::new(ThompsonBuilder { scale }))
}

fn ucb1_ctor(spec: &AlgSpec) -> Result<Arc<dyn AlgBuilder>> {
    if spec.scale.is_some() {
        return Err(Error::invalid("ucb1 does not take parameter `scale`"));
    }
    Ok(Arc::new(Ucb1Builder {
        c: positive(spec.c, 1.0, "ucb1 c")?,
    }))
}

#[derive(Debug)]
struct ThompsonBuilder {
    scale: Option<f64>,
}

impl AlgBuilder for ThompsonBuilder {
    fn build(&self, std_devs: &[f64]) -> Box<dyn ExploitAlgorithm> {
        Box::new(match self.scale {
            Some(s) => GaussianThompson::new(std_devs.len(), s),
            None => GaussianThompson::with_noise(std_devs.to_vec()),
        })
    }
}

#[derive(Debug)]
struct Ucb1Builder {
    c: f64,
}

impl AlgBuilder for Ucb1Builder {
    fn build(&self, std_devs: &[f64]) -> Box<dyn ExploitAlgorithm> {
        Box::new(Ucb1::new(std_devs.len(), self.c))
    }
}

/// Gaussian Thompson sampling with a flat prior and known noise levels:
/// sample `theta_i ~ N(mean_i, s_i^2 / n_i)` and play the argmax.
/// Unplayed arms are played first, lowest index first.
#[derive(Debug, Clone)]
pub struct GaussianThompson {
    stats: Vec<RunningMoments>,
    noise: Vec<f64>,
}

impl GaussianThompson {
    /// Same noise scale on every arm.
    pub fn new(num_arms: usize, scale: f64) -> Self {
        Self::with_noise(vec![scale; num_arms])
    }

    /// Per-arm noise standard deviations.
    pub fn with_noise(noise: Vec<f64>) -> Self {
        Self {
            stats: vec![RunningMoments::default(); noise.len()],
            noise,
        }
    }
}

impl ExploitAlgorithm for GaussianThompson {
    fn choose(&mut self, rng: &mut RngStream) -> usize {
        if let Some(i) = self.stats.iter().position(|s| s.count() == 0) {
            return i;
        }
        let mut best = 0;
        let mut best_theta = f64::NEG_INFINITY;
        for (i, s) in self.stats.iter().enumerate() {
            let theta = s.mean() + self.noise[i] / (s.count() as f64).sqrt() * rng.standard_normal();
            if theta > best_theta {
                best = i;
                best_theta = theta;
            }
        }
        best
    }

    fn update(&mut self, arm: usize, reward: f64) {
        self.stats[arm].push(reward);
    }
}

/// UCB1: `mean_i + c sqrt(2 ln n / n_i)`, ties to the lowest index.
#[derive(Debug, Clone)]
pub struct Ucb1 {
    stats: Vec<RunningMoments>,
    total: usize,
    c: f64,
}

impl Ucb1 {
    pub fn new(num_arms: usize, c: f64) -> Self {
        Self {
            stats: vec![RunningMoments::default(); num_arms],
            total: 0,
            c,
        }
    }

    fn argmax(&self) -> usize {
        if let Some(i) = self.stats.iter().position(|s| s.count() == 0) {
            return i;
        }
        let log_n = (self.total as f64).ln();
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for (i, s) in self.stats.iter().enumerate() {
            let index = s.mean() + self.c * (2.0 * log_n / s.count() as f64).sqrt();
            if index > best_index {
                best = i;
                best_index = index;
            }
        }
        best
    }
}

impl ExploitAlgorithm for Ucb1 {
    fn choose(&mut self, _rng: &mut RngStream) -> usize {
        self.argmax()
    }

    fn update(&mut self, arm: usize, reward: f64) {
        self.stats[arm].push(reward);
        self.total += 1;
    }

    fn deterministic_choice(&self) -> Option<usize> {
        Some(self.argmax())
    }
}
