//! Two-stage adaptive Neyman allocation: a balanced pilot of `N1` rounds
//! (arm 0's pulls first, then arm 1's, ...), after which arms are sampled
//! i.i.d. from the plug-in Neyman probabilities `sd_i / sum_j sd_j`.

use std::sync::Arc;

use super::{validate_distribution, ActionDecision, Policy, PolicyContext, PolicyFactory, PolicySpec};
use crate::error::{Error, Result};
use crate::estimators::floor_sds;
use crate::history::Branch;
use crate::rng::RngStream;
use crate::stats::RunningMoments;

#[derive(Debug, Clone, PartialEq)]
pub enum SecondStage {
    PlugInNeyman,
    /// Fixed probabilities, ignoring the pilot.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct TwoStageNeyman {
    num_arms: usize,
    per_arm: usize,
    second_stage: SecondStage,
    pilot: Vec<RunningMoments>,
    allocation: Option<Vec<f64>>,
    floor_events: usize,
}

impl TwoStageNeyman {
    pub fn new(num_arms: usize, pilot_total: usize, second_stage: SecondStage) -> Result<Self> {
        if num_arms == 0 || !pilot_total.is_multiple_of(num_arms) {
            return Err(Error::invalid(format!(
                "pilot size {pilot_total} is not a multiple of K = {num_arms}"
            )));
        }
        let per_arm = pilot_total / num_arms;
        if per_arm < 2 {
            return Err(Error::invalid(format!(
                "pilot needs at least 2 pulls per arm, got {per_arm}"
            )));
        }
        if let SecondStage::Fixed(p) = &second_stage {
            validate_distribution(p, num_arms, "second_stage")?;
        }
        Ok(Self {
            num_arms,
            per_arm,
            second_stage,
            pilot: vec![RunningMoments::default(); num_arms],
            allocation: None,
            floor_events: 0,
        })
    }

    pub fn pilot_total(&self) -> usize {
        self.per_arm * self.num_arms
    }

    /// Second-stage probabilities; `None` until the pilot is complete.
    pub fn allocation(&self) -> Option<&[f64]> {
        self.allocation.as_deref()
    }

    fn form_allocation(&mut self) -> Vec<f64> {
        match &self.second_stage {
            SecondStage::Fixed(p) => p.clone(),
            SecondStage::PlugInNeyman => {
                let sds: Vec<f64> = self.pilot.iter().map(RunningMoments::sd).collect();
                let (sds, raised) = floor_sds(&sds);
                self.floor_events += raised;
                let total: f64 = sds.iter().sum();
                sds.iter().map(|s| s / total).collect()
            }
        }
    }
}

impl Policy for TwoStageNeyman {
    fn select(&mut self, t: usize, rng: &mut RngStream) -> ActionDecision {
        if t <= self.pilot_total() {
            return ActionDecision {
                arm: (t - 1) / self.per_arm,
                assign_prob: 1.0 / self.num_arms as f64,
                branch: Branch::Pilot,
            };
        }
        if self.allocation.is_none() {
            self.allocation = Some(self.form_allocation());
        }
        let p = self.allocation.as_ref().expect("set above");
        let arm = rng.categorical(p);
        ActionDecision {
            arm,
            assign_prob: p[arm],
            branch: Branch::Explore,
        }
    }

    fn observe(&mut self, decision: &ActionDecision, reward: f64) {
        if decision.branch == Branch::Pilot {
            self.pilot[decision.arm].push(reward);
        }
    }

    fn sd_floor_events(&self) -> usize {
        self.floor_events
    }
}

#[derive(Debug)]
struct TwoStageFactory {
    template: TwoStageNeyman,
}

impl PolicyFactory for TwoStageFactory {
    fn kind(&self) -> &'static str {
        "two-stage-an"
    }

    fn instantiate(&self) -> Box<dyn Policy> {
        Box::new(self.template.clone())
    }

    fn exact_propensities(&self) -> bool {
        true
    }

    fn pilot_size(&self) -> Option<usize> {
        Some(self.template.pilot_total())
    }
}

pub(super) fn construct(spec: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Arc<dyn PolicyFactory>> {
    spec.reject_unused(&["pilot", "second_stage"])?;
    let pilot = spec
        .pilot
        .ok_or_else(|| Error::invalid("two-stage-an requires `pilot`"))?;
    if pilot > ctx.horizon {
        return Err(Error::invalid(format!(
            "pilot size {pilot} exceeds horizon {}",
            ctx.horizon
        )));
    }
    let second = match &spec.second_stage {
        Some(p) => SecondStage::Fixed(p.clone()),
        None => SecondStage::PlugInNeyman,
    };
    Ok(Arc::new(TwoStageFactory {
        template: TwoStageNeyman::new(ctx.instance.num_arms(), pilot, second)?,
    }))
}
