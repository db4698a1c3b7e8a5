//! Monte Carlo experiment engine.
//!
//! Replication `r` simulates with `RngStream::derive(base_seed, r)`: policy
//! randomness comes from its [`POLICY_SUBSTREAM`] and arm `i`'s rewards from
//! its [`arm_substream`]. Replications run in parallel on the current rayon
//! pool, and their outcomes are aggregated in replication order, so results
//! do not depend on the number of worker threads.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{neyman_total_mse, uniform_total_mse, VarianceProfile};
use crate::error::{Error, Result};
use crate::estimators::{
    ht_estimate, pcipw_estimate, pilot_summary, sample_means, EstimateVector, EstimatorKind,
};
use crate::history::RunHistory;
use crate::instance::BanditInstance;
use crate::policies::{Policy, PolicyFactory, PolicyRegistry, PolicySpec};
use crate::rng::{arm_substream, RngStream, POLICY_SUBSTREAM};
use crate::stats::{loglog_slope, CompensatedSum, Estimate};

/// Default replication count for pilot-size sweeps.
pub const DEFAULT_INFERENCE_REPS: usize = 2000;
/// Default replication count for policy comparisons.
pub const DEFAULT_JOINT_REPS: usize = 1000;

/// Runs `policy` for `horizon` rounds on the streams of replication `root`.
pub fn simulate(
    instance: &BanditInstance,
    policy: &mut dyn Policy,
    horizon: usize,
    root: &RngStream,
) -> RunHistory {
    let k = instance.num_arms();
    let mut policy_rng = root.substream(POLICY_SUBSTREAM);
    let mut arm_rngs: Vec<RngStream> = (0..k).map(|i| root.substream(arm_substream(i))).collect();
    let mut history = RunHistory::with_capacity(k, horizon);
    for t in 1..=horizon {
        let d = policy.select(t, &mut policy_rng);
        let reward = instance
            .draw_reward(d.arm, &mut arm_rngs[d.arm])
            .expect("policy chose an arm inside the instance");
        policy.observe(&d, reward);
        history.push(d.arm, reward, d.assign_prob, d.branch);
    }
    history
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub policy: PolicySpec,
    pub horizon: usize,
    pub reps: usize,
    pub base_seed: u64,
    /// Weight of the inference term; joint loss is reported only when set.
    pub lambda: Option<f64>,
    pub estimator: EstimatorKind,
}

/// Everything kept from one replication after its history is dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    pub estimates: Vec<f64>,
    pub sq_errors: Vec<f64>,
    pub counts: Vec<usize>,
    /// `sum_i gap_i T_i / N`, when the best arm is unique.
    pub avg_regret: Option<f64>,
    pub sd_floor_events: usize,
    pub unsampled_arms: usize,
}

impl RepOutcome {
    pub fn total_sq_error(&self) -> f64 {
        self.sq_errors.iter().sum()
    }
}

#[derive(Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    factory: Arc<dyn PolicyFactory>,
    gaps: Option<Vec<f64>>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, registry: &PolicyRegistry) -> Result<Self> {
        config.instance.validate()?;
        if config.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if config.horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        if let Some(l) = config.lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::invalid(format!("lambda must lie in [0, 1], got {l}")));
            }
        }
        let gaps = config.instance.gaps().ok();
        if config.lambda.is_some() && gaps.is_none() {
            return Err(Error::OptimalArmNotUnique);
        }
        let factory = registry.build(
            &config.policy,
            &config.instance,
            config.horizon,
            config.lambda,
        )?;
        match config.estimator {
            EstimatorKind::SampleMean => {}
            EstimatorKind::Ht if !factory.exact_propensities() => {
                return Err(Error::invalid(format!(
                    "estimator `ht` needs exact assignment probabilities; policy `{}` does not record them",
                    factory.kind()
                )));
            }
            EstimatorKind::Ht => {}
            EstimatorKind::Pcipw if factory.pilot_size().is_none() => {
                return Err(Error::invalid(format!(
                    "estimator `pcipw` needs a balanced pilot; policy `{}` has none",
                    factory.kind()
                )));
            }
            EstimatorKind::Pcipw => {}
        }
        Ok(Self {
            config,
            factory,
            gaps,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn factory(&self) -> &Arc<dyn PolicyFactory> {
        &self.factory
    }

    fn simulate_rep(&self, rep: u64) -> (RunHistory, usize) {
        let mut policy = self.factory.instantiate();
        let root = RngStream::derive(self.config.base_seed, rep);
        let h = simulate(&self.config.instance, policy.as_mut(), self.config.horizon, &root);
        (h, policy.sd_floor_events())
    }

    fn estimate(&self, history: &RunHistory) -> Result<(EstimateVector, usize)> {
        match self.config.estimator {
            EstimatorKind::SampleMean => {
                let (e, missing) = sample_means(history, 0.0);
                Ok((e, missing.len()))
            }
            EstimatorKind::Ht => Ok((ht_estimate(history)?, 0)),
            EstimatorKind::Pcipw => {
                let pilot = self.factory.pilot_size().expect("checked in new");
                let summary = pilot_summary(history, pilot)?;
                Ok((pcipw_estimate(history, &summary)?, 0))
            }
        }
    }

    /// One full horizon on the streams of replication `rep`.
    ///
    /// Arms never pulled get a sample-mean estimate of 0.
    pub fn run_replication(&self, rep: u64) -> Result<(RunHistory, EstimateVector)> {
        let (h, _) = self.simulate_rep(rep);
        let (e, _) = self.estimate(&h)?;
        Ok((h, e))
    }

    fn outcome(&self, rep: u64) -> Result<RepOutcome> {
        let (h, sd_floor_events) = self.simulate_rep(rep);
        let (e, unsampled_arms) = self.estimate(&h)?;
        let means = self.config.instance.means();
        let sq_errors = e
            .estimates
            .iter()
            .zip(means)
            .map(|(a, m)| (a - m) * (a - m))
            .collect();
        let avg_regret = self.gaps.as_ref().map(|g| {
            g.iter()
                .zip(h.counts())
                .map(|(d, &n)| d * n as f64)
                .sum::<f64>()
                / self.config.horizon as f64
        });
        Ok(RepOutcome {
            counts: h.counts().to_vec(),
            estimates: e.estimates,
            sq_errors,
            avg_regret,
            sd_floor_events,
            unsampled_arms,
        })
    }

    /// Outcomes of the given replication indices, in index order.
    pub fn replicate(&self, reps: Range<u64>) -> Result<Vec<RepOutcome>> {
        reps.into_par_iter().map(|r| self.outcome(r)).collect()
    }

    pub fn run(&self) -> Result<RunSummary> {
        let outcomes = self.replicate(0..self.config.reps as u64)?;
        let report = aggregate(self.config.lambda, &outcomes);
        Ok(RunSummary { report, outcomes })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub report: MetricsReport,
    pub outcomes: Vec<RepOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_arm_mse: Vec<Estimate>,
    pub total_mse: Estimate,
    /// `sum_i sqrt(MSE_i)`; the SE is a delta-method linearization.
    pub sum_rmse: Estimate,
    pub avg_regret: Option<Estimate>,
    pub joint_loss: Option<Estimate>,
    pub lambda: Option<f64>,
    pub mean_counts: Vec<f64>,
    pub reps_used: usize,
    pub sd_floor_events: usize,
    pub unsampled_arm_events: usize,
}

/// Reduces replication outcomes to Monte Carlo metrics. Accumulation is in
/// slice order with compensated sums.
pub fn aggregate(lambda: Option<f64>, outcomes: &[RepOutcome]) -> MetricsReport {
    assert!(!outcomes.is_empty(), "aggregate needs at least one replication");
    let reps = outcomes.len();
    let k = outcomes[0].sq_errors.len();

    let column = |f: &dyn Fn(&RepOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    let per_arm_mse: Vec<Estimate> = (0..k)
        .map(|i| Estimate::from_samples(&column(&|o| o.sq_errors[i])))
        .collect();
    let total_mse = Estimate::from_samples(&column(&|o| o.total_sq_error()));

    let rmse_value = per_arm_mse
        .iter()
        .map(|m| m.value.sqrt())
        .collect::<CompensatedSum>()
        .value();
    // d sqrt(m) = dm / (2 sqrt m)
    let rmse_weights: Vec<f64> = per_arm_mse
        .iter()
        .map(|m| if m.value > 0.0 { 0.5 / m.value.sqrt() } else { 0.0 })
        .collect();
    let rmse_linear = column(&|o| {
        o.sq_errors
            .iter()
            .zip(&rmse_weights)
            .map(|(e, w)| e * w)
            .sum()
    });
    let sum_rmse = Estimate {
        value: rmse_value,
        se: Estimate::from_samples(&rmse_linear).se,
    };

    let regrets: Option<Vec<f64>> = outcomes.iter().map(|o| o.avg_regret).collect();
    let avg_regret = regrets.as_deref().map(Estimate::from_samples);

    let joint_loss = match (lambda, &regrets, avg_regret) {
        (Some(l), Some(rs), Some(reg)) => {
            let linear: Vec<f64> = rmse_linear
                .iter()
                .zip(rs)
                .map(|(a, r)| l * a + (1.0 - l) * r)
                .collect();
            Some(Estimate {
                value: l * sum_rmse.value + (1.0 - l) * reg.value,
                se: Estimate::from_samples(&linear).se,
            })
        }
        _ => None,
    };

    let mean_counts = (0..k)
        .map(|i| {
            outcomes
                .iter()
                .map(|o| o.counts[i] as f64)
                .collect::<CompensatedSum>()
                .value()
                / reps as f64
        })
        .collect();

    MetricsReport {
        per_arm_mse,
        total_mse,
        sum_rmse,
        avg_regret,
        joint_loss,
        lambda,
        mean_counts,
        reps_used: reps,
        sd_floor_events: outcomes.iter().map(|o| o.sd_floor_events).sum(),
        unsampled_arm_events: outcomes.iter().map(|o| o.unsampled_arms).sum(),
    }
}

/// Shared settings of a sweep.
#[derive(Debug, Clone)]
pub struct SweepBase {
    pub instance: BanditInstance,
    pub horizon: usize,
    pub reps: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PilotRow {
    pub n1: usize,
    /// Total MSE of the two-stage design under PCIPW.
    pub adaptive: Estimate,
    /// `A - U` with the SE of per-replication paired differences.
    pub delta_u: Estimate,
    pub delta_u_unpaired_se: f64,
    /// `100 (U - A) / U`.
    pub gain_pct: f64,
    pub sd_floor_events: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PilotSweep {
    pub rows: Vec<PilotRow>,
    pub uniform: MetricsReport,
    pub uniform_closed_form: f64,
    pub neyman_closed_form: f64,
}

/// Two-stage design with PCIPW at every pilot size in `pilots`, against
/// uniform sampling with sample means on the same replication streams.
pub fn pilot_sweep(base: &SweepBase, pilots: &[usize], registry: &PolicyRegistry) -> Result<PilotSweep> {
    let k = base.instance.num_arms();
    for &n1 in pilots {
        if n1 % k != 0 || n1 >= base.horizon {
            return Err(Error::invalid(format!(
                "pilot size {n1} must be a multiple of K = {k} and below the horizon {}",
                base.horizon
            )));
        }
    }
    let profile = VarianceProfile::new(base.instance.std_devs().to_vec())?;
    let config = |policy: PolicySpec, estimator| ExperimentConfig {
        instance: base.instance.clone(),
        policy,
        horizon: base.horizon,
        reps: base.reps,
        base_seed: base.base_seed,
        lambda: None,
        estimator,
    };
    let uniform = Experiment::new(
        config(PolicySpec::new("uniform"), EstimatorKind::SampleMean),
        registry,
    )?
    .run()?;
    let u_totals: Vec<f64> = uniform.outcomes.iter().map(RepOutcome::total_sq_error).collect();
    let u = uniform.report.total_mse;

    let mut rows = Vec::with_capacity(pilots.len());
    for &n1 in pilots {
        let spec = PolicySpec {
            pilot: Some(n1),
            ..PolicySpec::new("two-stage-an")
        };
        let run = Experiment::new(config(spec, EstimatorKind::Pcipw), registry)?.run()?;
        let a = run.report.total_mse;
        let diffs: Vec<f64> = run
            .outcomes
            .iter()
            .zip(&u_totals)
            .map(|(o, u)| o.total_sq_error() - u)
            .collect();
        rows.push(PilotRow {
            n1,
            adaptive: a,
            delta_u: Estimate::from_samples(&diffs),
            delta_u_unpaired_se: (a.se * a.se + u.se * u.se).sqrt(),
            gain_pct: 100.0 * (u.value - a.value) / u.value,
            sd_floor_events: run.report.sd_floor_events,
        });
    }
    Ok(PilotSweep {
        rows,
        uniform: uniform.report,
        uniform_closed_form: uniform_total_mse(&profile, base.horizon)?,
        neyman_closed_form: neyman_total_mse(&profile, base.horizon)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonRow {
    pub policy: String,
    pub horizon: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicySlope {
    pub policy: String,
    pub joint_loss: f64,
    pub sum_rmse: f64,
    pub avg_regret: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonSweep {
    pub rows: Vec<HorizonRow>,
    pub slopes: Vec<PolicySlope>,
}

/// Every policy at every horizon in `horizons` (ascending), with log-log
/// slopes of each metric against the horizon.
pub fn horizon_sweep(
    instance: &BanditInstance,
    policies: &[PolicySpec],
    horizons: &[usize],
    reps: usize,
    base_seed: u64,
    lambda: f64,
    registry: &PolicyRegistry,
) -> Result<HorizonSweep> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("horizon grid must be non-empty and strictly ascending"));
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for spec in policies {
        let mut series = Vec::with_capacity(horizons.len());
        for &n in horizons {
            let report = Experiment::new(
                ExperimentConfig {
                    instance: instance.clone(),
                    policy: spec.clone(),
                    horizon: n,
                    reps,
                    base_seed,
                    lambda: Some(lambda),
                    estimator: EstimatorKind::SampleMean,
                },
                registry,
            )?
            .run()?
            .report;
            series.push(report.clone());
            rows.push(HorizonRow {
                policy: spec.label().to_owned(),
                horizon: n,
                report,
            });
        }
        if horizons.len() >= 2 {
            let xs: Vec<f64> = horizons.iter().map(|&n| n as f64).collect();
            let slope = |f: &dyn Fn(&MetricsReport) -> f64| {
                loglog_slope(&xs, &series.iter().map(f).collect::<Vec<_>>())
            };
            slopes.push(PolicySlope {
                policy: spec.label().to_owned(),
                joint_loss: slope(&|r| r.joint_loss.expect("lambda set").value),
                sum_rmse: slope(&|r| r.sum_rmse.value),
                avg_regret: slope(&|r| r.avg_regret.expect("lambda set").value),
            });
        }
    }
    Ok(HorizonSweep { rows, slopes })
}
