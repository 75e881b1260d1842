//! Path-dependent regret accounting.
//!
//! Every round the engine hands the ledger the conditional mean of each
//! arm's *next* pull, snapshotted before the chosen arm advances. The
//! dynamic regret `δreg` accumulates the per-round gap to the best of those
//! means; the static path-dependent regret `reg` compares against the best
//! single arm's summed means. Since a sum of maxima dominates the maximum of
//! sums, `δreg ≥ reg` holds after every round.
//!
//! Both quantities are accumulated as running sums of per-round differences
//! `m_i(t) − m_chosen(t)`, added in the same order. Rounded subtraction and
//! addition are monotone, so the inequality survives floating point exactly,
//! and `δreg` never decreases because each charged gap is non-negative.

use crate::error::{ensure_finite, BanditError, Result};

/// Conditional-mean gap between the round's best arm and some arm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Gap(pub f64);

impl Gap {
    /// Gap of `arm` relative to the best entry of `means`.
    pub fn of(means: &[f64], arm: usize) -> Self {
        Gap(max_of(means) - means[arm])
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    arms: usize,
    round: u64,
    delta_reg: f64,
    /// Row-major: round `t` (0-based) occupies `[t * arms, (t + 1) * arms)`.
    mean_trace: Vec<f64>,
    chosen: Vec<usize>,
    chosen_means: Vec<f64>,
    /// `Σ_t (m_i(t) − m_chosen(t))` per arm.
    advantage_sums: Vec<f64>,
    cum_reward: f64,
}

impl RegretLedger {
    pub fn new(arms: usize) -> Self {
        Self::with_capacity(arms, 0)
    }

    pub fn with_capacity(arms: usize, rounds: usize) -> Self {
        Self {
            arms,
            round: 0,
            delta_reg: 0.0,
            mean_trace: Vec::with_capacity(arms * rounds),
            chosen: Vec::with_capacity(rounds),
            chosen_means: Vec::with_capacity(rounds),
            advantage_sums: vec![0.0; arms],
            cum_reward: 0.0,
        }
    }

    /// Records one round and returns the gap that was charged.
    ///
    /// Nothing is mutated when validation fails.
    pub fn record(&mut self, next_means: &[f64], chosen: usize, reward: f64) -> Result<Gap> {
        if next_means.len() != self.arms {
            return Err(BanditError::Contract(format!(
                "ledger tracks {} arms, got {} means",
                self.arms,
                next_means.len()
            )));
        }
        if chosen >= self.arms {
            return Err(BanditError::ArmOutOfRange {
                arm: chosen,
                arms: self.arms,
            });
        }
        for &m in next_means {
            ensure_finite("conditional mean", m)?;
        }
        ensure_finite("reward", reward)?;

        let gap = Gap::of(next_means, chosen);
        self.delta_reg += gap.0;
        self.mean_trace.extend_from_slice(next_means);
        let chosen_mean = next_means[chosen];
        for (sum, m) in self.advantage_sums.iter_mut().zip(next_means) {
            *sum += m - chosen_mean;
        }
        self.chosen.push(chosen);
        self.chosen_means.push(chosen_mean);
        self.cum_reward += reward;
        self.round += 1;
        Ok(gap)
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn delta_reg(&self) -> f64 {
        self.delta_reg
    }

    pub fn cum_reward(&self) -> f64 {
        self.cum_reward
    }

    /// Means snapshotted at round `t` (1-based).
    pub fn means_at(&self, t: u64) -> &[f64] {
        let start = (t as usize - 1) * self.arms;
        &self.mean_trace[start..start + self.arms]
    }

    /// Conditional next-pull mean of `arm` at every recorded round.
    pub fn mean_trace(&self, arm: usize) -> impl Iterator<Item = f64> + '_ {
        self.mean_trace.iter().skip(arm).step_by(self.arms).cloned()
    }

    pub fn chosen_arms(&self) -> &[usize] {
        &self.chosen
    }

    pub fn chosen_means(&self) -> &[f64] {
        &self.chosen_means
    }

    /// Path-dependent regret against the best single arm: may be negative.
    pub fn path_dependent_reg(&self) -> Result<f64> {
        if self.round == 0 {
            return Err(BanditError::Contract("regret of an empty ledger".into()));
        }
        Ok(max_of(&self.advantage_sums))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn direct_gaps() {
        let mut l = RegretLedger::new(2);
        assert_eq!(l.record(&[0.9, 0.4], 1, 0.0).unwrap(), Gap(0.5));
        assert_eq!(l.delta_reg(), 0.5);
        assert_eq!(l.path_dependent_reg().unwrap(), 0.5);

        let mut l = RegretLedger::new(2);
        l.record(&[0.9, 0.4], 0, 1.0).unwrap();
        assert_eq!(l.delta_reg(), 0.0);
        assert_eq!(l.path_dependent_reg().unwrap(), 0.0);
        assert_eq!(l.cum_reward(), 1.0);
        assert_eq!(l.round(), 1);
    }

    #[test]
    fn reg_can_go_negative() {
        // Arm 0 is best in round 1, arm 1 in round 2; the learner follows the
        // leader, beating every static arm.
        let mut l = RegretLedger::new(2);
        l.record(&[1.0, 0.0], 0, 0.0).unwrap();
        l.record(&[0.0, 1.0], 1, 0.0).unwrap();
        let reg = l.path_dependent_reg().unwrap();
        let brute = (0..2)
            .map(|i| l.mean_trace(i).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
            - l.chosen_means().iter().sum::<f64>();
        assert_eq!(reg, brute);
        assert_eq!(reg, -1.0);
        assert!(l.delta_reg() >= reg);
    }

    #[test]
    fn validation_errors_leave_ledger_untouched() {
        let mut l = RegretLedger::new(2);
        assert!(matches!(
            l.record(&[f64::NAN, 0.1], 0, 0.0),
            Err(BanditError::NonFinite { .. })
        ));
        assert!(l.record(&[0.1, 0.2, 0.3], 0, 0.0).is_err());
        assert!(l.record(&[0.1, 0.2], 2, 0.0).is_err());
        assert_eq!(l.round(), 0);
        assert!(l.path_dependent_reg().is_err());
    }

    #[test]
    fn trace_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut l = RegretLedger::new(3);
        let mut rows = Vec::new();
        for _ in 0..50 {
            let means: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let arm = rng.random_range(0..3);
            l.record(&means, arm, 0.0).unwrap();
            rows.push((means, arm));
        }
        let brute: f64 = rows
            .iter()
            .map(|(m, a)| m.iter().cloned().fold(f64::MIN, f64::max) - m[*a])
            .sum();
        assert!((l.delta_reg() - brute).abs() < 1e-10);
        let best_static = (0..3)
            .map(|i| rows.iter().map(|(m, _)| m[i]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let chosen: f64 = rows.iter().map(|(m, a)| m[*a]).sum();
        assert!((l.path_dependent_reg().unwrap() - (best_static - chosen)).abs() < 1e-10);
        for (t, (m, _)) in rows.iter().enumerate() {
            assert_eq!(l.means_at(t as u64 + 1), m.as_slice());
        }
    }

    proptest::proptest! {
        #[test]
        fn ordering_holds_exactly(
            rounds in proptest::collection::vec(
                (proptest::collection::vec(-3.0f64..3.0, 4), 0usize..4),
                1..200,
            )
        ) {
            let mut l = RegretLedger::new(4);
            let mut prev = 0.0;
            for (means, arm) in &rounds {
                l.record(means, *arm, 0.0).unwrap();
                proptest::prop_assert!(l.delta_reg() >= prev);
                proptest::prop_assert!(l.delta_reg() >= l.path_dependent_reg().unwrap());
                prev = l.delta_reg();
            }
        }
    }
}
