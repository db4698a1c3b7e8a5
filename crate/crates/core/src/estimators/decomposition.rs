//! Monte Carlo check of the per-arm MSE decompositions of the two-stage
//! design.
//!
//! For PCIPW the per-replication terms are
//! - pilot: `(N1/N)^2 (pilot_mean - mu)^2`,
//! - adaptive variance: `(N2/N^2) sigma^2 / p`,
//! - interaction penalty: `(N2/N^2) (mu - pilot_mean)^2 (1/p - 1)`,
//!
//! with `p` the second-stage probability of the arm. For HT the last two
//! are replaced by `(N2/N^2) ((mu^2 + sigma^2)/p - mu^2)`. Each term's mean
//! over replications estimates the corresponding expectation, and their sum
//! should match the directly simulated squared error.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{ht_estimate, pcipw_estimate, pilot_summary};
use crate::harness::simulate;
use crate::instance::BanditInstance;
use crate::policies::{SecondStage, TwoStageNeyman};
use crate::rng::RngStream;
use crate::stats::Estimate;

/// Minimum replications accepted by the decomposition routines.
pub const MIN_DECOMPOSITION_REPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageDesign {
    pub pilot: usize,
    pub horizon: usize,
    pub second_stage: SecondStage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmDecomposition {
    pub total_mse: Estimate,
    pub pilot: Estimate,
    pub adaptive_variance: Estimate,
    /// Zero for HT, whose adaptive term absorbs it.
    pub interaction: Estimate,
    /// `total - (pilot + adaptive + interaction)` per replication.
    pub identity_gap: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub per_arm: Vec<ArmDecomposition>,
    pub reps: usize,
}

impl DecompositionReport {
    pub fn total_mse(&self) -> f64 {
        self.per_arm.iter().map(|a| a.total_mse.value).sum()
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Pcipw,
    Ht,
}

pub fn mse_decomposition_pcipw(
    instance: &BanditInstance,
    design: &TwoStageDesign,
    mc_reps: usize,
    base_seed: u64,
) -> Result<DecompositionReport> {
    decompose(instance, design, mc_reps, base_seed, Kind::Pcipw)
}

pub fn mse_decomposition_ht(
    instance: &BanditInstance,
    design: &TwoStageDesign,
    mc_reps: usize,
    base_seed: u64,
) -> Result<DecompositionReport> {
    decompose(instance, design, mc_reps, base_seed, Kind::Ht)
}

fn decompose(
    instance: &BanditInstance,
    design: &TwoStageDesign,
    mc_reps: usize,
    base_seed: u64,
    kind: Kind,
) -> Result<DecompositionReport> {
    if mc_reps < MIN_DECOMPOSITION_REPS {
        return Err(Error::invalid(format!(
            "decomposition needs at least {MIN_DECOMPOSITION_REPS} replications, got {mc_reps}"
        )));
    }
    if design.pilot > design.horizon {
        return Err(Error::invalid("pilot exceeds horizon"));
    }
    let k = instance.num_arms();
    let template = TwoStageNeyman::new(k, design.pilot, design.second_stage.clone())?;
    let n = design.horizon as f64;
    let n1 = design.pilot as f64;
    let n2 = n - n1;

    // per rep, per arm: [total, pilot, adaptive, interaction]
    let per_rep: Vec<Vec<[f64; 4]>> = (0..mc_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<Vec<[f64; 4]>> {
            let mut policy = template.clone();
            let root = RngStream::derive(base_seed, rep);
            let h = simulate(instance, &mut policy, design.horizon, &root);
            let pilot = pilot_summary(&h, design.pilot)?;
            let est = match kind {
                Kind::Pcipw => pcipw_estimate(&h, &pilot)?,
                Kind::Ht => ht_estimate(&h)?,
            };
            Ok((0..k)
                .map(|i| {
                    let mu = instance.means()[i];
                    let var = instance.std_devs()[i].powi(2);
                    let pilot_err2 = (pilot.pilot_means[i] - mu).powi(2);
                    let total = (est.estimates[i] - mu).powi(2);
                    let first = (n1 / n).powi(2) * pilot_err2;
                    let (adaptive, interaction) = match policy.allocation() {
                        None => (0.0, 0.0),
                        Some(p) => match kind {
                            Kind::Pcipw => (
                                n2 / (n * n) * var / p[i],
                                n2 / (n * n) * pilot_err2 * (1.0 / p[i] - 1.0),
                            ),
                            Kind::Ht => (n2 / (n * n) * ((mu * mu + var) / p[i] - mu * mu), 0.0),
                        },
                    };
                    [total, first, adaptive, interaction]
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let per_arm = (0..k)
        .map(|i| {
            let col = |j: usize| -> Vec<f64> { per_rep.iter().map(|r| r[i][j]).collect() };
            let gap: Vec<f64> = per_rep
                .iter()
                .map(|r| r[i][0] - r[i][1] - r[i][2] - r[i][3])
                .collect();
            ArmDecomposition {
                total_mse: Estimate::from_samples(&col(0)),
                pilot: Estimate::from_samples(&col(1)),
                adaptive_variance: Estimate::from_samples(&col(2)),
                interaction: Estimate::from_samples(&col(3)),
                identity_gap: Estimate::from_samples(&gap),
            }
        })
        .collect();
    Ok(DecompositionReport {
        per_arm,
        reps: mc_reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_second_stage_has_only_pilot_term() {
        let inst = BanditInstance::new(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        let design = TwoStageDesign {
            pilot: 20,
            horizon: 20,
            second_stage: SecondStage::PlugInNeyman,
        };
        let r = mse_decomposition_pcipw(&inst, &design, 1000, 4).unwrap();
        for a in &r.per_arm {
            assert_eq!(a.adaptive_variance.value, 0.0);
            assert_eq!(a.interaction.value, 0.0);
            assert_eq!(a.total_mse.value, a.pilot.value);
        }
    }

    #[test]
    fn too_few_reps_rejected() {
        let inst = BanditInstance::new(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        let design = TwoStageDesign {
            pilot: 20,
            horizon: 40,
            second_stage: SecondStage::PlugInNeyman,
        };
        assert!(mse_decomposition_pcipw(&inst, &design, 999, 0).is_err());
    }
}
