//! Sequential sampling policies behind a common [`Policy`] trait.
//!
//! Policies are looked up by name in a [`PolicyRegistry`]. A constructor
//! validates a [`PolicySpec`] against the instance once and returns a
//! [`PolicyFactory`], which then hands out fresh per-replication state.

mod alg;
mod narp;
mod oracle_static;
mod sarp;
mod two_stage;
mod uniform;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::Branch;
use crate::instance::BanditInstance;
use crate::rng::RngStream;

pub use alg::{AlgBuilder, AlgRegistry, AlgSpec, ExploitAlgorithm, GaussianThompson, Ucb1};
pub use narp::{Narp, NarpConfig};
pub use oracle_static::OracleStatic;
pub use sarp::{Sarp, SarpConfig};
pub use two_stage::{SecondStage, TwoStageNeyman};
pub use uniform::Uniform;

/// The arm chosen at one round and the probability with which it was chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDecision {
    pub arm: usize,
    pub assign_prob: f64,
    pub branch: Branch,
}

pub trait Policy: Send {
    /// Chooses the arm for round `t` (1-based).
    fn select(&mut self, t: usize, rng: &mut RngStream) -> ActionDecision;

    /// Feeds back the reward of the decision just taken.
    fn observe(&mut self, decision: &ActionDecision, reward: f64);

    /// Number of plug-in standard deviations raised to the floor so far.
    fn sd_floor_events(&self) -> usize {
        0
    }
}

pub trait PolicyFactory: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;

    fn instantiate(&self) -> Box<dyn Policy>;

    /// Whether recorded assignment probabilities are the exact conditional
    /// probabilities, so that IPW-type estimators are valid.
    fn exact_propensities(&self) -> bool;

    /// Balanced pilot length, for policies that start with one.
    fn pilot_size(&self) -> Option<usize> {
        None
    }
}

/// Policy name plus every hyperparameter any built-in policy accepts.
/// Constructors reject fields that do not apply to them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: String,
    /// Display name in reports; defaults to `kind`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Two-stage pilot length `N1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot: Option<usize>,
    /// Fixed second-stage probabilities for the two-stage design instead of
    /// the plug-in Neyman allocation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_stage: Option<Vec<f64>>,
    /// SARP exploration constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_x: Option<f64>,
    /// SARP exploration distribution; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explore_dist: Option<Vec<f64>>,
    /// NARP warm-start pulls per arm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<usize>,
    /// NARP forced-exploration constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg: Option<AlgSpec>,
    /// Let the exploitation algorithm learn from every round rather than
    /// only the rounds it governs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alg_sees_all_data: Option<bool>,
}

impl PolicySpec {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            ..Default::default()
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.kind)
    }

    fn reject_unused(&self, allowed: &[&str]) -> Result<()> {
        let present = [
            ("pilot", self.pilot.is_some()),
            ("second_stage", self.second_stage.is_some()),
            ("c_x", self.c_x.is_some()),
            ("explore_dist", self.explore_dist.is_some()),
            ("m0", self.m0.is_some()),
            ("alpha", self.alpha.is_some()),
            ("alg", self.alg.is_some()),
            ("alg_sees_all_data", self.alg_sees_all_data.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(Error::invalid(format!(
                    "policy `{}` does not take parameter `{name}`",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

/// What a constructor may read about the experiment.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub instance: &'a BanditInstance,
    pub horizon: usize,
    pub lambda: Option<f64>,
    pub algs: &'a AlgRegistry,
}

pub type PolicyConstructor = fn(&PolicySpec, &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>>;

#[derive(Clone)]
pub struct PolicyRegistry {
    entries: BTreeMap<String, Option<PolicyConstructor>>,
    algs: AlgRegistry,
}

impl fmt::Debug for PolicyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolicyRegistry")
            .field("policies", &self.entries.keys().collect::<Vec<_>>())
            .field("algs", &self.algs)
            .finish()
    }
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
            algs: AlgRegistry::with_builtins(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("uniform", uniform::construct);
        r.register("two-stage-an", two_stage::construct);
        r.register("sarp", sarp::construct);
        r.register("narp", narp::construct);
        r.register("oracle", oracle_static::construct);
        // slot kept so configs naming it fail with a clear message
        r.reserve("forcing-balance");
        r
    }

    pub fn register(&mut self, name: &str, ctor: PolicyConstructor) {
        self.entries.insert(name.to_owned(), Some(ctor));
    }

    pub fn reserve(&mut self, name: &str) {
        self.entries.insert(name.to_owned(), None);
    }

    pub fn algs(&self) -> &AlgRegistry {
        &self.algs
    }

    pub fn algs_mut(&mut self) -> &mut AlgRegistry {
        &mut self.algs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        spec: &PolicySpec,
        instance: &BanditInstance,
        horizon: usize,
        lambda: Option<f64>,
    ) -> Result<Arc<dyn PolicyFactory>> {
        match self.entries.get(spec.kind.as_str()) {
            Some(Some(ctor)) => ctor(
                spec,
                &PolicyContext {
                    instance,
                    horizon,
                    lambda,
                    algs: &self.algs,
                },
            ),
            Some(None) => Err(Error::ReservedPolicy(spec.kind.clone())),
            None => Err(Error::Unknown {
                kind: "policy",
                name: spec.kind.clone(),
            }),
        }
    }
}

/// Checks that `probs` is a full-support distribution over `k` arms.
pub(crate) fn validate_distribution(probs: &[f64], k: usize, what: &str) -> Result<()> {
    if probs.len() != k {
        return Err(Error::invalid(format!(
            "{what} has {} entries, expected {k}",
            probs.len()
        )));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::invalid(format!("{what} must be strictly positive")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("{what} sums to {total}, expected 1")));
    }
    Ok(())
}

/// Assignment probability of `arm` under the explore/exploit mixture with
/// exploration probability `x` and exploration distribution `explore`.
///
/// The exploitation algorithm's own choice probability is known exactly only
/// for deterministic rules (`exploit_choice`); for randomized rules the
/// realized indicator is used on exploit rounds and zero on explore rounds.
pub(crate) fn mixture_probability(
    x: f64,
    explore: &[f64],
    arm: usize,
    branch: Branch,
    exploit_choice: Option<usize>,
) -> f64 {
    let q = match (exploit_choice, branch) {
        (Some(c), _) => f64::from(u8::from(c == arm)),
        (None, Branch::Exploit) => 1.0,
        (None, _) => 0.0,
    };
    (x * explore[arm] + (1.0 - x) * q).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> BanditInstance {
        BanditInstance::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn registry_lists_builtins() {
        let r = PolicyRegistry::with_builtins();
        let names: Vec<&str> = r.names().collect();
        assert_eq!(
            names,
            vec!["forcing-balance", "narp", "oracle", "sarp", "two-stage-an", "uniform"]
        );
    }

    #[test]
    fn reserved_and_unknown() {
        let r = PolicyRegistry::with_builtins();
        let err = r.build(&PolicySpec::new("forcing-balance"), &inst(), 10, None).unwrap_err();
        assert_eq!(err, Error::ReservedPolicy("forcing-balance".into()));
        let err = r.build(&PolicySpec::new("greedy"), &inst(), 10, None).unwrap_err();
        assert!(matches!(err, Error::Unknown { .. }));
    }

    #[test]
    fn rejects_foreign_parameters() {
        let r = PolicyRegistry::with_builtins();
        let spec = PolicySpec {
            m0: Some(2),
            ..PolicySpec::new("uniform")
        };
        assert!(r.build(&spec, &inst(), 10, None).is_err());
    }

    #[test]
    fn custom_registration() {
        fn ctor(_: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>> {
            uniform::construct(&PolicySpec::new("uniform"), ctx)
        }
        let mut r = PolicyRegistry::empty();
        r.register("my-uniform", ctor);
        assert!(r.build(&PolicySpec::new("my-uniform"), &inst(), 10, None).is_ok());
    }

    #[test]
    fn mixture_probability_cases() {
        let p0 = [0.5, 0.5];
        assert_eq!(mixture_probability(0.1, &p0, 0, Branch::Exploit, None), 0.05 + 0.9);
        assert_eq!(mixture_probability(0.1, &p0, 0, Branch::Explore, None), 0.05);
        assert_eq!(mixture_probability(0.1, &p0, 1, Branch::Explore, Some(1)), 0.05 + 0.9);
        assert_eq!(mixture_probability(0.1, &p0, 0, Branch::Exploit, Some(1)), 0.05);
    }
}
