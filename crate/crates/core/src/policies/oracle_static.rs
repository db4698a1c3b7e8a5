use std::sync::Arc;

use super::{ActionDecision, Policy, PolicyContext, PolicyFactory, PolicySpec};
use crate::error::{Error, Result};
use crate::history::Branch;
use crate::oracle::{solve_oracle, JointProblem, DEFAULT_TOL};
use crate::rng::RngStream;

/// I.i.d. sampling from the oracle fixed allocation computed with the true
/// standard deviations and gaps.
#[derive(Debug, Clone)]
pub struct OracleStatic {
    allocation: Vec<f64>,
}

impl OracleStatic {
    pub fn new(allocation: Vec<f64>) -> Self {
        Self { allocation }
    }

    pub fn allocation(&self) -> &[f64] {
        &self.allocation
    }
}

impl Policy for OracleStatic {
    fn select(&mut self, _t: usize, rng: &mut RngStream) -> ActionDecision {
        let arm = if self.allocation.len() == 1 {
            0
        } else {
            rng.categorical(&self.allocation)
        };
        ActionDecision {
            arm,
            assign_prob: self.allocation[arm],
            branch: Branch::Explore,
        }
    }

    fn observe(&mut self, _decision: &ActionDecision, _reward: f64) {}
}

#[derive(Debug)]
struct OracleFactory {
    template: OracleStatic,
}

impl PolicyFactory for OracleFactory {
    fn kind(&self) -> &'static str {
        "oracle"
    }

    fn instantiate(&self) -> Box<dyn Policy> {
        Box::new(self.template.clone())
    }

    fn exact_propensities(&self) -> bool {
        true
    }
}

pub(super) fn construct(spec: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>> {
    spec.reject_unused(&[])?;
    let lambda = ctx
        .lambda
        .ok_or_else(|| Error::invalid("oracle requires `lambda`"))?;
    let allocation = if ctx.instance.num_arms() == 1 {
        vec![1.0]
    } else {
        let problem = JointProblem::from_instance(ctx.instance, lambda, ctx.horizon)?;
        solve_oracle(&problem, DEFAULT_TOL)?.p_star
    };
    Ok(Arc::new(OracleFactory {
        template: OracleStatic::new(allocation),
    }))
}
