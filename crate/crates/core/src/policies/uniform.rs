use std::sync::Arc;

use super::{ActionDecision, Policy, PolicyContext, PolicyFactory, PolicySpec};
use crate::error::Result;
use crate::history::Branch;
use crate::rng::RngStream;

/// Each round picks an arm uniformly at random.
#[derive(Debug, Clone)]
pub struct Uniform {
    num_arms: usize,
}

impl Uniform {
    pub fn new(num_arms: usize) -> Self {
        Self { num_arms }
    }
}

impl Policy for Uniform {
    fn select(&mut self, _t: usize, rng: &mut RngStream) -> ActionDecision {
        ActionDecision {
            arm: rng.index(self.num_arms),
            assign_prob: 1.0 / self.num_arms as f64,
            branch: Branch::Explore,
        }
    }

    fn observe(&mut self, _decision: &ActionDecision, _reward: f64) {}
}

#[derive(Debug)]
struct UniformFactory {
    num_arms: usize,
}

impl PolicyFactory for UniformFactory {
    fn kind(&self) -> &'static str {
        "uniform"
    }

    fn instantiate(&self) -> Box<dyn Policy> {
        Box::new(Uniform::new(self.num_arms))
    }

    fn exact_propensities(&self) -> bool {
        true
    }
}

pub(super) fn construct(spec: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>> {
    spec.reject_unused(&[])?;
    Ok(Arc::new(UniformFactory {
        num_arms: ctx.instance.num_arms(),
    }))
}
