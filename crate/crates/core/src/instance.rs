use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFamily {
    #[default]
    Gaussian,
}

/// Ground truth of a simulation: per-arm means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditInstance {
    means: Vec<f64>,
    std_devs: Vec<f64>,
    #[serde(default)]
    reward_family: RewardFamily,
}

impl BanditInstance {
    pub fn new(means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        let inst = Self {
            means,
            std_devs,
            reward_family: RewardFamily::Gaussian,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Checks the invariants; needed after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.means.is_empty() {
            return Err(Error::invalid("instance needs at least one arm"));
        }
        if self.means.len() != self.std_devs.len() {
            return Err(Error::invalid(format!(
                "means has {} entries but std_devs has {}",
                self.means.len(),
                self.std_devs.len()
            )));
        }
        if let Some(i) = self.means.iter().position(|m| !m.is_finite()) {
            return Err(Error::invalid(format!("mean of arm {i} is not finite")));
        }
        if let Some(i) = self
            .std_devs
            .iter()
            .position(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::invalid(format!(
                "std_dev of arm {i} must be positive and finite"
            )));
        }
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }

    pub fn reward_family(&self) -> RewardFamily {
        self.reward_family
    }

    /// Index of the unique best arm.
    pub fn optimal_arm(&self) -> Result<usize> {
        let best = self
            .means
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut winners = self.means.iter().enumerate().filter(|(_, &m)| m == best);
        let (i, _) = winners.next().expect("instance has at least one arm");
        if winners.next().is_some() {
            return Err(Error::OptimalArmNotUnique);
        }
        Ok(i)
    }

    /// Suboptimality gaps `mu_best - mu_i`; zero only at the best arm.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        let best = self.means[self.optimal_arm()?];
        Ok(self.means.iter().map(|m| best - m).collect())
    }

    /// One Gaussian reward from `arm`, advancing `rng` by one normal variate.
    pub fn draw_reward(&self, arm: usize, rng: &mut RngStream) -> Result<f64> {
        if arm >= self.num_arms() {
            return Err(Error::ArmOutOfRange {
                index: arm,
                arms: self.num_arms(),
            });
        }
        match self.reward_family {
            RewardFamily::Gaussian => Ok(rng.normal(self.means[arm], self.std_devs[arm])),
        }
    }
}
