//! Per-arm observation records and weight distributions over them.

use crate::error::{BanditError, Result};

/// One observed pull: the global round it happened in and the reward seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pull {
    pub round: u64,
    pub reward: f64,
}

/// Everything the learner has seen from one arm.
///
/// The `s`-th entry of [`ArmHistory::pulls`] is the arm's `s`-th process
/// value, so the arm-local clock is simply the number of entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmHistory {
    arm: usize,
    pulls: Vec<Pull>,
}

impl ArmHistory {
    pub fn new(arm: usize) -> Self {
        Self {
            arm,
            pulls: Vec::new(),
        }
    }

    /// Builds a history from rewards observed in rounds `1, 2, ...`.
    pub fn from_rewards(arm: usize, rewards: &[f64]) -> Self {
        let pulls = rewards
            .iter()
            .enumerate()
            .map(|(s, &reward)| Pull {
                round: s as u64 + 1,
                reward,
            })
            .collect();
        Self { arm, pulls }
    }

    pub fn arm(&self) -> usize {
        self.arm
    }

    pub fn pulls(&self) -> &[Pull] {
        &self.pulls
    }

    pub fn pull_count(&self) -> usize {
        self.pulls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulls.is_empty()
    }

    pub fn rewards(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.pulls.iter().map(|p| p.reward)
    }

    pub fn last_reward(&self) -> Option<f64> {
        self.pulls.last().map(|p| p.reward)
    }

    pub fn record(&mut self, round: u64, reward: f64) -> Result<()> {
        if let Some(last) = self.pulls.last() {
            if round <= last.round {
                return Err(BanditError::Contract(format!(
                    "arm {} pulled at round {} after round {}",
                    self.arm, round, last.round
                )));
            }
        }
        self.pulls.push(Pull { round, reward });
        Ok(())
    }
}

/// A probability distribution over an arm's past pulls.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    norm2: f64,
}

const DISTRIBUTION_TOL: f64 = 1e-9;

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(BanditError::Contract("empty weight vector".into()));
        }
        let mut sum = 0.0;
        let mut sq = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(BanditError::Contract(format!("invalid weight {w}")));
            }
            sum += w;
            sq += w * w;
        }
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(BanditError::Contract(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            weights,
            norm2: sq.sqrt(),
        })
    }

    /// Uniform mass over the 1-based pull indices yielded by `support`,
    /// zero on the remaining `len - |support|` pulls.
    pub(crate) fn uniform_over<I>(len: usize, support: I) -> Option<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut weights = vec![0.0; len];
        let mut atoms = 0usize;
        for s in support {
            debug_assert!(s >= 1 && s <= len);
            weights[s - 1] = 1.0;
            atoms += 1;
        }
        if atoms == 0 {
            return None;
        }
        let w = 1.0 / atoms as f64;
        for x in weights.iter_mut().filter(|x| **x > 0.0) {
            *x = w;
        }
        Some(Self {
            weights,
            norm2: (1.0 / atoms as f64).sqrt(),
        })
    }

    pub fn uniform(len: usize) -> Option<Self> {
        Self::uniform_over(len, 1..=len)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// `‖q‖² · n` where `n` is the number of pulls the vector spans; the
    /// quantity both regret guarantees need bounded by a constant.
    pub fn concentration(&self) -> f64 {
        self.norm2 * self.norm2 * self.weights.len() as f64
    }

    /// Number of pulls carrying positive mass.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// `Σ_s q(s) · values[s]`.
    pub fn dot(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(BanditError::Contract(format!(
                "weight vector has {} entries, values have {}",
                self.weights.len(),
                values.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(values)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w * v)
            .sum())
    }
}

/// Weighted point estimate `Σ_s q(s) X_s` of an arm's next reward.
pub fn weighted_mean(history: &ArmHistory, q: &WeightVector) -> Result<f64> {
    if history.is_empty() {
        return Err(BanditError::EmptyHistory { arm: history.arm() });
    }
    if q.len() != history.pull_count() {
        return Err(BanditError::Contract(format!(
            "weights span {} pulls but arm {} has {}",
            q.len(),
            history.arm(),
            history.pull_count()
        )));
    }
    Ok(q.weights()
        .iter()
        .zip(history.rewards())
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, x)| w * x)
        .sum())
}
