//! Closed-form design calculations for two-stage adaptive Neyman allocation:
//! benchmark total MSEs, the `E[sqrt F(nu, nu)]` moment, the exact and
//! sufficient conditions for beating uniform sampling, and the minimal pilot
//! size scan.

use serde::Serialize;

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Arm standard deviations with their sums `S = sum sigma` and `V = sum sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    sigmas: Vec<f64>,
}

impl VarianceProfile {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::invalid("variance profile needs at least one arm"));
        }
        if let Some(i) = sigmas.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid(format!(
                "sigma of arm {i} must be positive and finite"
            )));
        }
        Ok(Self { sigmas })
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn k(&self) -> usize {
        self.sigmas.len()
    }

    pub fn s(&self) -> f64 {
        self.sigmas.iter().sum()
    }

    pub fn v(&self) -> f64 {
        self.sigmas.iter().map(|s| s * s).sum()
    }

    /// `(K-1) V / (S^2 - V)`, the right-hand side before the pilot factor.
    pub fn heterogeneity_ratio(&self) -> Result<f64> {
        if self.k() < 2 {
            return Err(Error::invalid("K must be >= 2"));
        }
        let (s, v) = (self.s(), self.v());
        Ok((self.k() as f64 - 1.0) * v / (s * s - v))
    }

    fn check_budget(&self, n: usize) -> Result<()> {
        if n < self.k() {
            return Err(Error::invalid(format!(
                "horizon {n} is smaller than the number of arms {}",
                self.k()
            )));
        }
        Ok(())
    }
}

/// Total MSE of sample means under uniform allocation: `K V / N`.
pub fn uniform_total_mse(profile: &VarianceProfile, n: usize) -> Result<f64> {
    profile.check_budget(n)?;
    Ok(profile.k() as f64 * profile.v() / n as f64)
}

/// Total MSE of sample means under oracle Neyman allocation: `S^2 / N`.
pub fn neyman_total_mse(profile: &VarianceProfile, n: usize) -> Result<f64> {
    profile.check_budget(n)?;
    let s = profile.s();
    Ok(s * s / n as f64)
}

/// Percent reduction of oracle Neyman over uniform: `100 (1 - S^2 / (K V))`.
pub fn oracle_gain(profile: &VarianceProfile) -> Result<f64> {
    if profile.k() < 2 {
        return Err(Error::invalid("K must be >= 2"));
    }
    let s = profile.s();
    Ok(100.0 * (1.0 - s * s / (profile.k() as f64 * profile.v())))
}

/// `E[sqrt F]` for `F ~ F(nu, nu)`:
/// `G((nu+1)/2) G((nu-1)/2) / G(nu/2)^2`. Diverges for `nu <= 1`.
pub fn beta_nu(nu: i64) -> Result<f64> {
    if nu <= 1 {
        return Err(Error::DivergentMoment(nu));
    }
    let nu = nu as f64;
    Ok(
        (ln_gamma((nu + 1.0) / 2.0) + ln_gamma((nu - 1.0) / 2.0) - 2.0 * ln_gamma(nu / 2.0))
            .exp(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub n1: usize,
    pub nu: i64,
    /// `+inf` when `nu = 1`.
    pub beta: f64,
    pub rhs: f64,
    pub passes: bool,
}

fn per_arm_pilot(profile: &VarianceProfile, n1: usize) -> Result<usize> {
    let k = profile.k();
    if k < 2 {
        return Err(Error::invalid("K must be >= 2"));
    }
    if !n1.is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "pilot size {n1} is not a multiple of K = {k}"
        )));
    }
    Ok(n1 / k)
}

/// Exact finite-sample condition for the two-stage design to match or beat
/// uniform sampling:
/// `beta_nu <= (K-1) V / (S^2 - V) / (1 + K / N1)` with `nu = N1/K - 1`.
///
/// A pilot of two pulls per arm (`nu = 1`) is reported as failing with an
/// infinite moment; fewer than two pulls per arm is an error.
pub fn exact_condition(profile: &VarianceProfile, n1: usize) -> Result<ConditionCheck> {
    let per_arm = per_arm_pilot(profile, n1)?;
    if per_arm < 2 {
        return Err(Error::invalid(format!(
            "pilot needs at least 2 pulls per arm, got {per_arm}"
        )));
    }
    let nu = per_arm as i64 - 1;
    let rhs = profile.heterogeneity_ratio()? / (1.0 + profile.k() as f64 / n1 as f64);
    let beta = match beta_nu(nu) {
        Ok(b) => b,
        Err(Error::DivergentMoment(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(ConditionCheck {
        n1,
        nu,
        beta,
        rhs,
        passes: beta <= rhs,
    })
}

/// Jensen-relaxed sufficient condition:
/// `(1 + K/N1) sqrt((N1 - K) / (N1 - 3K)) <= (K-1) V / (S^2 - V)`.
pub fn sufficient_condition(profile: &VarianceProfile, n1: usize) -> Result<bool> {
    per_arm_pilot(profile, n1)?;
    let k = profile.k() as f64;
    let n1f = n1 as f64;
    if n1f <= 3.0 * k {
        return Err(Error::Domain(format!(
            "sufficient condition requires N1 > 3K, got N1 = {n1}, K = {}",
            profile.k()
        )));
    }
    let lhs = (1.0 + k / n1f) * ((n1f - k) / (n1f - 3.0 * k)).sqrt();
    Ok(lhs <= profile.heterogeneity_ratio()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// Smallest passing pilot size, `None` if nothing passes within the cap.
    pub n1_min: Option<usize>,
    pub oracle_gain_pct: f64,
    pub ratio_rhs: f64,
    pub per_candidate: Vec<ConditionCheck>,
}

/// Default cap on pilot pulls per arm for [`min_pilot_size`].
pub const DEFAULT_N1_CAP: usize = 500;

/// Scans `N1 = 3K, 4K, ..., cap*K` in ascending order and returns the first
/// pilot size satisfying [`exact_condition`]. Monotonicity is not assumed;
/// every scanned candidate is reported.
pub fn min_pilot_size(profile: &VarianceProfile, per_arm_cap: usize) -> Result<ThresholdReport> {
    if per_arm_cap < 3 {
        return Err(Error::invalid("pilot cap must be at least 3 pulls per arm"));
    }
    let ratio_rhs = profile.heterogeneity_ratio()?;
    let oracle_gain_pct = oracle_gain(profile)?;
    let k = profile.k();
    let mut per_candidate = Vec::new();
    let mut n1_min = None;
    for per_arm in 3..=per_arm_cap {
        let check = exact_condition(profile, per_arm * k)?;
        per_candidate.push(check);
        if check.passes {
            n1_min = Some(check.n1);
            break;
        }
    }
    Ok(ThresholdReport {
        n1_min,
        oracle_gain_pct,
        ratio_rhs,
        per_candidate,
    })
}
