use rand::Rng;

use crate::error::{BanditError, Result};
use crate::rng::StreamRng;

/// Exponential weights with importance-weighted reward estimates, mixed
/// with uniform exploration.
///
/// Arm `i` is drawn with probability `(1 − γ) softmax(L)_i + γ / K`, and
/// the chosen arm's log-weight grows by `η x / p`. Log-weights are kept
/// shifted so their maximum is zero. Rewards are mapped affinely from
/// `reward_range` into `[0, 1]` before use and clipped if they fall outside.
#[derive(Debug, Clone)]
pub struct Exp3 {
    eta: f64,
    gamma: f64,
    lo: f64,
    hi: f64,
    log_weights: Vec<f64>,
    clipped: u64,
    rng: StreamRng,
}

/// `√(2 ln K / (T K))`.
pub fn default_learning_rate(arms: usize, horizon: u64) -> f64 {
    let k = arms.max(2) as f64;
    (2.0 * k.ln() / (horizon.max(1) as f64 * k)).sqrt()
}

/// `min(1, K η)`, the uniform share that keeps every probability at least
/// `η`, so a single update moves a log-weight by at most one.
pub fn default_exploration(arms: usize, eta: f64) -> f64 {
    (arms as f64 * eta).min(1.0)
}

impl Exp3 {
    pub fn new(
        arms: usize,
        eta: f64,
        gamma: f64,
        reward_range: (f64, f64),
        rng: StreamRng,
    ) -> Result<Self> {
        if arms == 0 {
            return Err(BanditError::Config("EXP3 needs at least one arm".into()));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(BanditError::Config(format!(
                "EXP3 learning rate must be positive, got {eta}"
            )));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(BanditError::Config(format!(
                "EXP3 exploration share must lie in [0, 1], got {gamma}"
            )));
        }
        let (lo, hi) = reward_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(BanditError::Config(format!(
                "EXP3 reward range [{lo}, {hi}] is empty"
            )));
        }
        Ok(Self {
            eta,
            gamma,
            lo,
            hi,
            log_weights: vec![0.0; arms],
            clipped: 0,
            rng,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let unnormalised: Vec<f64> = self.log_weights.iter().map(|l| l.exp()).collect();
        let total: f64 = unnormalised.iter().sum();
        let uniform = self.gamma / unnormalised.len() as f64;
        unnormalised
            .into_iter()
            .map(|w| (1.0 - self.gamma) * w / total + uniform)
            .collect()
    }

    pub fn select(&mut self) -> usize {
        let probs = self.probabilities();
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.log_weights.len() {
            return Err(BanditError::ArmOutOfRange {
                arm,
                arms: self.log_weights.len(),
            });
        }
        let mut x = (reward - self.lo) / (self.hi - self.lo);
        if !(0.0..=1.0).contains(&x) {
            self.clipped += 1;
            x = x.clamp(0.0, 1.0);
        }
        let p = self.probabilities()[arm];
        self.log_weights[arm] += self.eta * x / p;
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        for l in &mut self.log_weights {
            *l -= max;
        }
        Ok(())
    }
}
