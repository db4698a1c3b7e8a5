use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Warmup,
    Pilot,
    Forced,
    Explore,
    Exploit,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Warmup => "warmup",
            Branch::Pilot => "pilot",
            Branch::Forced => "forced",
            Branch::Explore => "explore",
            Branch::Exploit => "exploit",
        }
    }
}

/// One round: which arm, what reward, and the conditional probability with
/// which that arm was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub assign_prob: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    records: Vec<RoundRecord>,
    counts: Vec<usize>,
}

impl RunHistory {
    pub fn new(num_arms: usize) -> Self {
        Self::with_capacity(num_arms, 0)
    }

    pub fn with_capacity(num_arms: usize, horizon: usize) -> Self {
        Self {
            records: Vec::with_capacity(horizon),
            counts: vec![0; num_arms],
        }
    }

    /// Build a history from `(arm, reward, assign_prob, branch)` tuples;
    /// round indices are assigned in order.
    pub fn from_rounds(
        num_arms: usize,
        rounds: impl IntoIterator<Item = (usize, f64, f64, Branch)>,
    ) -> Self {
        let mut h = Self::new(num_arms);
        for (arm, reward, assign_prob, branch) in rounds {
            h.push(arm, reward, assign_prob, branch);
        }
        h
    }

    pub fn push(&mut self, arm: usize, reward: f64, assign_prob: f64, branch: Branch) {
        self.counts[arm] += 1;
        self.records.push(RoundRecord {
            t: self.records.len() + 1,
            arm,
            reward,
            assign_prob,
            branch,
        });
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rewards_of(&self, arm: usize) -> impl Iterator<Item = f64> + '_ {
        self.records
            .iter()
            .filter(move |r| r.arm == arm)
            .map(|r| r.reward)
    }
}
