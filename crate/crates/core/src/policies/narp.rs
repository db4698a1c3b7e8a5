//! Neyman-adaptive rate policy.
//!
//! After `m0` warm-up pulls per arm, each round first checks the
//! forced-exploration quota `g(t) = m0 + ceil(alpha sqrt t)` for the
//! least-sampled arm. Otherwise it recomputes plug-in means and standard
//! deviations over every sample so far, forms the rooted-Neyman profile
//! `sd_i^(2/3) / sum_k sd_k^(2/3)`, and explores from it with probability
//! `min(1, (lambda M / ((1 - lambda) L))^(2/3) t^(-1/3))`, where
//! `M = sum_{i != best} sd_i / sqrt(p_i)` and `L = sum_{i != best} gap_i p_i`.

use std::sync::Arc;

use super::{
    mixture_probability, ActionDecision, AlgBuilder, ExploitAlgorithm, Policy, PolicyContext,
    PolicyFactory, PolicySpec,
};
use crate::error::{Error, Result};
use crate::estimators::floor_sds;
use crate::history::Branch;
use crate::rng::RngStream;
use crate::stats::RunningMoments;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NarpConfig {
    pub num_arms: usize,
    pub m0: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub alg_sees_all_data: bool,
}

impl NarpConfig {
    /// Forced-exploration quota `m0 + ceil(alpha sqrt t)`.
    pub fn quota(&self, t: usize) -> usize {
        self.m0 + (self.alpha * (t as f64).sqrt()).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.m0 < 2 {
            return Err(Error::invalid(format!("m0 must be >= 2, got {}", self.m0)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::invalid(format!(
                "narp needs lambda in (0, 1), got {}",
                self.lambda
            )));
        }
        if self.num_arms < 2 {
            return Err(Error::invalid("narp needs at least two arms"));
        }
        Ok(())
    }
}

/// Plug-in quantities behind one exploration decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugIn {
    pub best: usize,
    pub gaps: Vec<f64>,
    pub rooted_neyman: Vec<f64>,
    pub m_hat: f64,
    pub l_hat: f64,
    pub floored: usize,
}

impl PlugIn {
    pub fn from_moments(means: &[f64], sds: &[f64]) -> Self {
        let mut best = 0;
        for (i, &m) in means.iter().enumerate() {
            if m > means[best] {
                best = i;
            }
        }
        let gaps: Vec<f64> = means.iter().map(|m| (means[best] - m).max(0.0)).collect();
        let (sds, floored) = floor_sds(sds);
        let weights: Vec<f64> = sds.iter().map(|s| s.powf(2.0 / 3.0)).collect();
        let total: f64 = weights.iter().sum();
        let rooted_neyman: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let (mut m_hat, mut l_hat) = (0.0, 0.0);
        for i in (0..means.len()).filter(|&i| i != best) {
            m_hat += sds[i] / rooted_neyman[i].sqrt();
            l_hat += gaps[i] * rooted_neyman[i];
        }
        Self {
            best,
            gaps,
            rooted_neyman,
            m_hat,
            l_hat,
            floored,
        }
    }

    pub fn explore_probability(&self, lambda: f64, t: usize) -> f64 {
        if self.l_hat == 0.0 {
            return 1.0;
        }
        let c = (lambda * self.m_hat / ((1.0 - lambda) * self.l_hat)).powf(2.0 / 3.0);
        (c * (t as f64).powf(-1.0 / 3.0)).min(1.0)
    }
}

pub struct Narp {
    config: NarpConfig,
    moments: Vec<RunningMoments>,
    alg: Box<dyn ExploitAlgorithm>,
    floor_events: usize,
}

impl Narp {
    pub fn new(config: NarpConfig, alg: Box<dyn ExploitAlgorithm>) -> Self {
        Self {
            moments: vec![RunningMoments::default(); config.num_arms],
            config,
            alg,
            floor_events: 0,
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        self.moments.iter().map(RunningMoments::count).collect()
    }

    /// Least-sampled arm, lowest index on ties.
    fn least_sampled(&self) -> usize {
        let mut u = 0;
        for (i, m) in self.moments.iter().enumerate() {
            if m.count() < self.moments[u].count() {
                u = i;
            }
        }
        u
    }

    pub fn plug_in(&self) -> PlugIn {
        let means: Vec<f64> = self.moments.iter().map(RunningMoments::mean).collect();
        let sds: Vec<f64> = self.moments.iter().map(RunningMoments::sd).collect();
        PlugIn::from_moments(&means, &sds)
    }
}

impl Policy for Narp {
    fn select(&mut self, t: usize, rng: &mut RngStream) -> ActionDecision {
        let k = self.config.num_arms;
        if t <= self.config.m0 * k {
            return ActionDecision {
                arm: (t - 1) % k,
                assign_prob: 1.0,
                branch: Branch::Warmup,
            };
        }
        let u = self.least_sampled();
        if self.moments[u].count() < self.config.quota(t) {
            return ActionDecision {
                arm: u,
                assign_prob: 1.0,
                branch: Branch::Forced,
            };
        }
        let plug = self.plug_in();
        self.floor_events += plug.floored;
        let x = plug.explore_probability(self.config.lambda, t);
        let peek = self.alg.deterministic_choice();
        let (arm, branch) = if rng.bernoulli(x) {
            (rng.categorical(&plug.rooted_neyman), Branch::Explore)
        } else {
            (self.alg.choose(rng), Branch::Exploit)
        };
        ActionDecision {
            arm,
            assign_prob: mixture_probability(x, &plug.rooted_neyman, arm, branch, peek),
            branch,
        }
    }

    fn observe(&mut self, decision: &ActionDecision, reward: f64) {
        self.moments[decision.arm].push(reward);
        let governs = matches!(decision.branch, Branch::Warmup | Branch::Exploit);
        if governs || self.config.alg_sees_all_data {
            self.alg.update(decision.arm, reward);
        }
    }

    fn sd_floor_events(&self) -> usize {
        self.floor_events
    }
}

#[derive(Debug)]
struct NarpFactory {
    config: NarpConfig,
    alg: Arc<dyn AlgBuilder>,
    std_devs: Vec<f64>,
}

impl PolicyFactory for NarpFactory {
    fn kind(&self) -> &'static str {
        "narp"
    }

    fn instantiate(&self) -> Box<dyn Policy> {
        Box::new(Narp::new(self.config, self.alg.build(&self.std_devs)))
    }

    fn exact_propensities(&self) -> bool {
        false
    }
}

pub(super) fn construct(spec: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>> {
    spec.reject_unused(&["m0", "alpha", "alg", "alg_sees_all_data"])?;
    let config = NarpConfig {
        num_arms: ctx.instance.num_arms(),
        m0: spec.m0.unwrap_or(2),
        alpha: spec.alpha.unwrap_or(1.0),
        lambda: ctx
            .lambda
            .ok_or_else(|| Error::invalid("narp requires `lambda`"))?,
        alg_sees_all_data: spec.alg_sees_all_data.unwrap_or(false),
    };
    config.validate()?;
    Ok(Arc::new(NarpFactory {
        config,
        alg: ctx.algs.build(spec.alg.as_ref())?,
        std_devs: ctx.instance.std_devs().to_vec(),
    }))
}
