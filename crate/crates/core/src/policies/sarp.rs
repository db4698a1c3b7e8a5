//! Static-allocation rate policy: one warm-up pull per arm, then explore
//! from a fixed distribution with probability `min(1, c_x t^(-1/3))` and
//! hand the round to the exploitation algorithm otherwise.

use std::sync::Arc;

use super::{
    mixture_probability, validate_distribution, ActionDecision, AlgBuilder, ExploitAlgorithm,
    Policy, PolicyContext, PolicyFactory, PolicySpec,
};
use crate::error::{Error, Result};
use crate::history::Branch;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct SarpConfig {
    pub c_x: f64,
    pub explore_dist: Vec<f64>,
    pub alg_sees_all_data: bool,
}

impl SarpConfig {
    pub fn uniform(num_arms: usize, c_x: f64) -> Self {
        Self {
            c_x,
            explore_dist: vec![1.0 / num_arms as f64; num_arms],
            alg_sees_all_data: false,
        }
    }

    pub fn explore_probability(&self, t: usize) -> f64 {
        (self.c_x * (t as f64).powf(-1.0 / 3.0)).min(1.0)
    }
}

pub struct Sarp {
    config: SarpConfig,
    alg: Box<dyn ExploitAlgorithm>,
}

impl Sarp {
    pub fn new(config: SarpConfig, alg: Box<dyn ExploitAlgorithm>) -> Self {
        Self { config, alg }
    }

    fn num_arms(&self) -> usize {
        self.config.explore_dist.len()
    }
}

impl Policy for Sarp {
    fn select(&mut self, t: usize, rng: &mut RngStream) -> ActionDecision {
        let k = self.num_arms();
        if t <= k {
            return ActionDecision {
                arm: t - 1,
                assign_prob: 1.0,
                branch: Branch::Warmup,
            };
        }
        let x = self.config.explore_probability(t);
        let peek = self.alg.deterministic_choice();
        let (arm, branch) = if rng.bernoulli(x) {
            (rng.categorical(&self.config.explore_dist), Branch::Explore)
        } else {
            (self.alg.choose(rng), Branch::Exploit)
        };
        ActionDecision {
            arm,
            assign_prob: mixture_probability(x, &self.config.explore_dist, arm, branch, peek),
            branch,
        }
    }

    fn observe(&mut self, decision: &ActionDecision, reward: f64) {
        let governs = matches!(decision.branch, Branch::Warmup | Branch::Exploit);
        if governs || self.config.alg_sees_all_data {
            self.alg.update(decision.arm, reward);
        }
    }
}

#[derive(Debug)]
struct SarpFactory {
    config: SarpConfig,
    alg: Arc<dyn AlgBuilder>,
    std_devs: Vec<f64>,
}

impl PolicyFactory for SarpFactory {
    fn kind(&self) -> &'static str {
        "sarp"
    }

    fn instantiate(&self) -> Box<dyn Policy> {
        Box::new(Sarp::new(
            self.config.clone(),
            self.alg.build(&self.std_devs),
        ))
    }

    fn exact_propensities(&self) -> bool {
        false
    }
}

pub(super) fn construct(spec: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>> {
    spec.reject_unused(&["c_x", "explore_dist", "alg", "alg_sees_all_data"])?;
    let k = ctx.instance.num_arms();
    let c_x = spec.c_x.unwrap_or(1.0);
    if !(c_x.is_finite() && c_x > 0.0) {
        return Err(Error::invalid(format!("c_x must be positive, got {c_x}")));
    }
    let mut config = SarpConfig::uniform(k, c_x);
    if let Some(p0) = &spec.explore_dist {
        validate_distribution(p0, k, "explore_dist")?;
        config.explore_dist = p0.clone();
    }
    config.alg_sees_all_data = spec.alg_sees_all_data.unwrap_or(false);
    Ok(Arc::new(SarpFactory {
        config,
        alg: ctx.algs.build(spec.alg.as_ref())?,
        std_devs: ctx.instance.std_devs().to_vec(),
    }))
}
