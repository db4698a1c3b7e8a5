//! Arm-mean estimators over a [`RunHistory`]: sample mean, global
//! Horvitz-Thompson, and pilot-centered inverse-propensity weighting.

pub mod decomposition;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::RunHistory;
use crate::stats::RunningMoments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    SampleMean,
    Ht,
    Pcipw,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::SampleMean => "sample_mean",
            EstimatorKind::Ht => "ht",
            EstimatorKind::Pcipw => "pcipw",
        }
    }

    /// Whether the estimator reweights by recorded assignment probabilities.
    pub fn uses_propensities(self) -> bool {
        !matches!(self, EstimatorKind::SampleMean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateVector {
    pub estimates: Vec<f64>,
    pub kind: EstimatorKind,
}

/// Mean reward of `arm` over all rounds where it was pulled.
pub fn sample_mean(history: &RunHistory, arm: usize) -> Result<f64> {
    if arm >= history.num_arms() {
        return Err(Error::ArmOutOfRange {
            index: arm,
            arms: history.num_arms(),
        });
    }
    let n = history.counts()[arm];
    if n == 0 {
        return Err(Error::NoSamples(arm));
    }
    Ok(history.rewards_of(arm).sum::<f64>() / n as f64)
}

/// Sample means of every arm. Arms with no pulls get `fallback` and are
/// listed in the second return value.
pub fn sample_means(history: &RunHistory, fallback: f64) -> (EstimateVector, Vec<usize>) {
    let k = history.num_arms();
    let mut sums = vec![0.0; k];
    for r in history.records() {
        sums[r.arm] += r.reward;
    }
    let mut unsampled = Vec::new();
    let estimates = sums
        .iter()
        .zip(history.counts())
        .enumerate()
        .map(|(i, (&s, &n))| {
            if n == 0 {
                unsampled.push(i);
                fallback
            } else {
                s / n as f64
            }
        })
        .collect();
    (
        EstimateVector {
            estimates,
            kind: EstimatorKind::SampleMean,
        },
        unsampled,
    )
}

/// Per-arm statistics of a balanced pilot. Standard deviations use the
/// `n1 - 1` divisor: `(n1 - 1) sd^2 / sigma^2` is chi-square with `n1 - 1`
/// degrees of freedom, which the threshold calculation relies on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PilotSummary {
    pub pilot_means: Vec<f64>,
    pub pilot_sds: Vec<f64>,
    /// Pilot pulls per arm.
    pub n1: usize,
}

impl PilotSummary {
    /// Total pilot rounds `N1 = n1 * K`.
    pub fn total(&self) -> usize {
        self.n1 * self.pilot_means.len()
    }
}

/// Summarizes the first `pilot_total` rounds, which must pull every arm
/// exactly `pilot_total / K >= 2` times.
pub fn pilot_summary(history: &RunHistory, pilot_total: usize) -> Result<PilotSummary> {
    let k = history.num_arms();
    if !pilot_total.is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "pilot size {pilot_total} is not a multiple of K = {k}"
        )));
    }
    let n1 = pilot_total / k;
    if n1 < 2 {
        return Err(Error::invalid(format!(
            "pilot needs at least 2 pulls per arm, got {n1}"
        )));
    }
    if history.len() < pilot_total {
        return Err(Error::invalid(format!(
            "history has {} rounds, shorter than the pilot {pilot_total}",
            history.len()
        )));
    }
    let mut moments = vec![RunningMoments::default(); k];
    for r in &history.records()[..pilot_total] {
        moments[r.arm].push(r.reward);
    }
    if let Some(i) = moments.iter().position(|m| m.count() != n1) {
        return Err(Error::invalid(format!(
            "unbalanced pilot: arm {i} pulled {} times, expected {n1}",
            moments[i].count()
        )));
    }
    Ok(PilotSummary {
        pilot_means: moments.iter().map(RunningMoments::mean).collect(),
        pilot_sds: moments.iter().map(RunningMoments::sd).collect(),
        n1,
    })
}

/// Relative floor applied to plug-in standard deviations before they are
/// normalized into sampling probabilities.
pub const SD_FLOOR_REL: f64 = 1e-8;

/// Floors each entry at `SD_FLOOR_REL * max(sds)`; if every entry is zero
/// the result is all ones (equal weights). Returns the floored vector and
/// the number of entries raised.
pub fn floor_sds(sds: &[f64]) -> (Vec<f64>, usize) {
    let max = sds.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return (vec![1.0; sds.len()], sds.len());
    }
    let floor = SD_FLOOR_REL * max;
    let mut raised = 0;
    let out = sds
        .iter()
        .map(|&s| {
            if s < floor {
                raised += 1;
                floor
            } else {
                s
            }
        })
        .collect();
    (out, raised)
}

fn check_propensities(history: &RunHistory, from: usize) -> Result<()> {
    if let Some(r) = history.records()[from..]
        .iter()
        .find(|r| !(r.assign_prob > 0.0 && r.assign_prob <= 1.0))
    {
        return Err(Error::invalid(format!(
            "round {} has assignment probability {} outside (0, 1]",
            r.t, r.assign_prob
        )));
    }
    Ok(())
}

/// Horvitz-Thompson: `(1/N) sum_t 1{I_t = i} X_t / p_t`.
pub fn ht_estimate(history: &RunHistory) -> Result<EstimateVector> {
    if history.is_empty() {
        return Err(Error::invalid("empty history"));
    }
    check_propensities(history, 0)?;
    let mut est = vec![0.0; history.num_arms()];
    for r in history.records() {
        est[r.arm] += r.reward / r.assign_prob;
    }
    let n = history.len() as f64;
    est.iter_mut().for_each(|e| *e /= n);
    Ok(EstimateVector {
        estimates: est,
        kind: EstimatorKind::Ht,
    })
}

/// Pilot-centered IPW:
/// `mu_pilot + (1/N) sum_t 1{I_t = i} (X_t - mu_pilot) / p_t`.
///
/// Pilot rounds are skipped: under a balanced pilot with `p = 1/K` their
/// centered residuals sum to exactly zero.
pub fn pcipw_estimate(history: &RunHistory, pilot: &PilotSummary) -> Result<EstimateVector> {
    let k = history.num_arms();
    if pilot.pilot_means.len() != k {
        return Err(Error::invalid(format!(
            "pilot summary has {} arms, history has {k}",
            pilot.pilot_means.len()
        )));
    }
    let pilot_total = pilot.total();
    if history.len() < pilot_total {
        return Err(Error::invalid("history shorter than the pilot"));
    }
    check_propensities(history, pilot_total)?;
    let mut correction = vec![0.0; k];
    for r in &history.records()[pilot_total..] {
        correction[r.arm] += (r.reward - pilot.pilot_means[r.arm]) / r.assign_prob;
    }
    let n = history.len() as f64;
    Ok(EstimateVector {
        estimates: pilot
            .pilot_means
            .iter()
            .zip(&correction)
            .map(|(m, c)| m + c / n)
            .collect(),
        kind: EstimatorKind::Pcipw,
    })
}
