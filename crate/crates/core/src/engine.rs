//! Trial orchestration.
//!
//! Each round: snapshot every arm's next-pull conditional mean, let the
//! policy choose, pull, then charge the ledger with the snapshot. The
//! snapshot must precede the pull so the ledger's means are conditional on
//! the rewards seen *before* the round.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::env::{ArmProcess, ArmSpec, EnvSpec, Environment};
use crate::error::{BanditError, Result};
use crate::history::{weighted_mean, ArmHistory};
use crate::ledger::RegretLedger;
use crate::policy::{Policy, PolicySpec, WeightAudit};
use crate::rng::{derive_stream, Lane, TrialSeed};
use crate::weights::{weights_for, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRow {
    pub t: u64,
    pub arm: usize,
    pub reward: f64,
    pub cum_reward: f64,
    pub delta_reg: f64,
    pub reg: f64,
    pub avg_reward: f64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: u64,
    pub rows: Vec<RoundRow>,
    pub ledger: RegretLedger,
    pub audit: WeightAudit,
}

impl TrialResult {
    pub fn final_row(&self) -> &RoundRow {
        self.rows.last().expect("trials run at least one round")
    }
}

/// Runs one trial on an environment built from `env_spec` with `seed`.
pub fn run_trial(
    env_spec: &EnvSpec,
    policy: &PolicySpec,
    horizon: u64,
    seed: TrialSeed,
) -> Result<TrialResult> {
    let env = env_spec.build(seed)?;
    run_trial_on(env, policy, horizon, seed)
}

/// Runs one trial on an already constructed environment.
pub fn run_trial_on(
    mut env: Environment,
    policy_spec: &PolicySpec,
    horizon: u64,
    seed: TrialSeed,
) -> Result<TrialResult> {
    let k = env.num_arms();
    if horizon < k as u64 {
        return Err(BanditError::Config(format!(
            "horizon T = {horizon} is smaller than the number of arms K = {k}"
        )));
    }
    let mut policy = Policy::new(policy_spec, &env, horizon, seed)?;
    let mut histories: Vec<ArmHistory> = (0..k).map(ArmHistory::new).collect();
    let mut ledger = RegretLedger::with_capacity(k, horizon as usize);
    let mut rows = Vec::with_capacity(horizon as usize);
    let mut means = Vec::with_capacity(k);

    for t in 1..=horizon {
        env.next_means_into(&mut means);
        let arm = policy.select(t, &histories)?;
        let reward = env.pull(arm)?;
        histories[arm].record(t, reward)?;
        policy.observe(arm, reward, &histories, &env)?;
        ledger.record(&means, arm, reward)?;
        let cum_reward = ledger.cum_reward();
        rows.push(RoundRow {
            t,
            arm,
            reward,
            cum_reward,
            delta_reg: ledger.delta_reg(),
            reg: ledger.path_dependent_reg()?,
            avg_reward: cum_reward / t as f64,
        });
    }

    Ok(TrialResult {
        trial: seed.trial,
        rows,
        ledger,
        audit: policy.audit(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub env: EnvSpec,
    pub policy: PolicySpec,
    pub horizon: u64,
    pub trials: u64,
    pub root_seed: u64,
}

/// Per-round statistics across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub trials: usize,
    pub mean_avg_reward: Vec<f64>,
    /// Sample standard deviation; zero for a single trial.
    pub std_avg_reward: Vec<f64>,
    pub mean_delta_reg: Vec<f64>,
}

impl AggregateResult {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let n = trials.len();
        let rounds = trials.first().map_or(0, |t| t.rows.len());
        let mut mean_avg_reward = Vec::with_capacity(rounds);
        let mut std_avg_reward = Vec::with_capacity(rounds);
        let mut mean_delta_reg = Vec::with_capacity(rounds);
        for r in 0..rounds {
            let mean = trials.iter().map(|t| t.rows[r].avg_reward).sum::<f64>() / n as f64;
            let var = if n > 1 {
                trials
                    .iter()
                    .map(|t| (t.rows[r].avg_reward - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64
            } else {
                0.0
            };
            mean_avg_reward.push(mean);
            std_avg_reward.push(var.sqrt());
            mean_delta_reg.push(trials.iter().map(|t| t.rows[r].delta_reg).sum::<f64>() / n as f64);
        }
        Self {
            trials: n,
            mean_avg_reward,
            std_avg_reward,
            mean_delta_reg,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub trials: Vec<TrialResult>,
    pub aggregate: AggregateResult,
}

fn run_one(spec: &ExperimentSpec, trial: u64) -> Result<TrialResult> {
    run_trial(
        &spec.env,
        &spec.policy,
        spec.horizon,
        TrialSeed::new(spec.root_seed, trial),
    )
    .map_err(|e| BanditError::Trial {
        trial,
        source: Box::new(e),
    })
}

/// Runs every trial and aggregates. Trial `i` always uses seed
/// `(root_seed, i)`, so the result does not depend on `mode`.
pub fn run_experiment(spec: &ExperimentSpec, mode: ExecMode) -> Result<Experiment> {
    if spec.trials == 0 {
        return Err(BanditError::Config("trials must be >= 1".into()));
    }
    let trials = map_trials(spec.trials, mode, |i| run_one(spec, i))?;
    let aggregate = AggregateResult::from_trials(&trials);
    Ok(Experiment { trials, aggregate })
}

/// Maps `f` over `0..n` in order, in parallel when enabled.
pub fn map_trials<T, F>(n: u64, mode: ExecMode, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    match mode {
        ExecMode::Serial => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => (0..n).map(f).collect(),
    }
}

/// Empirical frequencies with which each side of the weighted concentration
/// bound failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationReport {
    pub delta: f64,
    pub replicates: u64,
    /// `E[X_{t+1} | past] − Σ q X_s − D > ‖q‖ √(ln(1/δ) / 2)`.
    pub upper_rate: f64,
    /// `Σ q X_s − E[X_{t+1} | past] + D > ‖q‖ √(ln(1/δ) / 2)`.
    pub lower_rate: f64,
}

impl ConcentrationReport {
    pub fn violation_rate(&self) -> f64 {
        self.upper_rate.max(self.lower_rate)
    }
}

/// Monte-Carlo check of the weighted concentration bound after `pulls`
/// pulls of a fresh `arm`, one independent stream per replicate.
pub fn concentration_check(
    arm: &ArmSpec,
    scheme: &WeightScheme,
    pulls: usize,
    delta: f64,
    replicates: u64,
    seed: u64,
) -> Result<ConcentrationReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BanditError::Config(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if replicates == 0 || pulls == 0 {
        return Err(BanditError::Config(
            "concentration check needs at least one replicate and one pull".into(),
        ));
    }
    arm.validate()?;
    scheme.validate()?;
    let z = ((1.0 / delta).ln() / 2.0).sqrt();
    let mut upper = 0u64;
    let mut lower = 0u64;
    for r in 0..replicates {
        let mut process = ArmProcess::new(arm.clone(), derive_stream(seed, r, 0, Lane::Replicate))?;
        let mut history = ArmHistory::new(0);
        for s in 1..=pulls {
            history.record(s as u64, process.pull())?;
        }
        let q = weights_for(scheme, &history)?.q;
        let estimate = weighted_mean(&history, &q)?;
        let next = process.next_mean();
        let d = process.discrepancy(&q)?;
        let width = q.norm2() * z;
        if next - estimate - d > width {
            upper += 1;
        }
        if estimate - next + d > width {
            lower += 1;
        }
    }
    Ok(ConcentrationReport {
        delta,
        replicates,
        upper_rate: upper as f64 / replicates as f64,
        lower_rate: lower as f64 / replicates as f64,
    })
}

/// Mean `δreg` across trials at each checkpoint round.
pub fn mean_regret_at(
    env: &EnvSpec,
    policy: &PolicySpec,
    checkpoints: &[u64],
    trials: u64,
    root_seed: u64,
    mode: ExecMode,
) -> Result<Vec<f64>> {
    let horizon = checkpoints.iter().copied().max().unwrap_or(0);
    let per_trial = map_trials(trials, mode, |i| {
        let r = run_trial(env, policy, horizon, TrialSeed::new(root_seed, i))?;
        Ok(checkpoints
            .iter()
            .map(|&c| r.rows[c as usize - 1].delta_reg)
            .collect::<Vec<f64>>())
    })?;
    Ok((0..checkpoints.len())
        .map(|j| per_trial.iter().map(|v| v[j]).sum::<f64>() / trials as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Family, Noise};
    use crate::policy::PolicyKind;

    fn spec(family: Family, k: usize, horizon: u64, policy: PolicySpec) -> ExperimentSpec {
        ExperimentSpec {
            env: EnvSpec::new(family, k, horizon),
            policy,
            horizon,
            trials: 4,
            root_seed: 17,
        }
    }

    #[test]
    fn single_arm_has_no_regret() {
        for policy in [PolicySpec::weighted_ucb(0.0), PolicySpec::exp3()] {
            let r = run_trial(
                &EnvSpec::new(Family::default_rotting(), 1, 50),
                &policy,
                50,
                TrialSeed::new(1, 0),
            )
            .unwrap();
            assert_eq!(r.ledger.delta_reg(), 0.0);
        }
    }

    #[test]
    fn equal_means_have_no_regret() {
        let env = crate::env::make_mixed(
            vec![
                ArmSpec::Iid {
                    mean: 0.4,
                    noise: Noise::Bernoulli
                };
                5
            ],
            TrialSeed::new(2, 0),
        )
        .unwrap();
        let r = run_trial_on(env, &PolicySpec::exp3(), 300, TrialSeed::new(2, 0)).unwrap();
        assert_eq!(r.ledger.delta_reg(), 0.0);
    }

    #[test]
    fn rows_are_consistent() {
        let r = run_trial(
            &EnvSpec::new(Family::Iid, 3, 50),
            &PolicySpec::weighted_ucb(0.0),
            50,
            TrialSeed::new(3, 0),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 50);
        assert_eq!(
            r.rows[..3].iter().map(|x| x.arm).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        let mut prev = 0.0;
        for row in &r.rows {
            assert!((row.avg_reward - row.cum_reward / row.t as f64).abs() < 1e-12);
            assert!(row.delta_reg >= prev);
            assert!(row.delta_reg >= row.reg);
            prev = row.delta_reg;
        }
    }

    #[test]
    fn horizon_shorter_than_arms_is_rejected() {
        let err = run_trial(
            &EnvSpec::new(Family::Iid, 5, 3),
            &PolicySpec::weighted_ucb(0.0),
            3,
            TrialSeed::new(0, 0),
        )
        .unwrap_err();
        assert!(matches!(err, BanditError::Config(_)));
    }

    #[test]
    fn repeated_trials_are_identical() {
        let policy = PolicySpec::exp3();
        let a = run_trial(
            &EnvSpec::new(Family::Iid, 3, 50),
            &policy,
            50,
            TrialSeed::new(4, 1),
        )
        .unwrap();
        let b = run_trial(
            &EnvSpec::new(Family::Iid, 3, 50),
            &policy,
            50,
            TrialSeed::new(4, 1),
        )
        .unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn serial_and_parallel_agree() {
        for policy in [
            PolicySpec::weighted_ucb(0.0),
            PolicySpec::exp3(),
            PolicySpec::new(PolicyKind::DiscUcb),
        ] {
            let s = spec(Family::Drifting, 6, 200, policy);
            let a = run_experiment(&s, ExecMode::Serial).unwrap();
            let b = run_experiment(&s, ExecMode::Parallel).unwrap();
            assert_eq!(a.aggregate, b.aggregate);
            for (x, y) in a.trials.iter().zip(&b.trials) {
                assert_eq!(x.rows, y.rows);
            }
        }
    }

    #[test]
    fn single_trial_aggregate() {
        let mut s = spec(Family::Iid, 4, 100, PolicySpec::weighted_ucb(0.0));
        s.trials = 1;
        let e = run_experiment(&s, ExecMode::Serial).unwrap();
        assert!(e.aggregate.std_avg_reward.iter().all(|x| *x == 0.0));
        let rows = &e.trials[0].rows;
        for (r, m) in rows.iter().zip(&e.aggregate.mean_avg_reward) {
            assert_eq!(r.avg_reward, *m);
        }
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let mut s = spec(Family::Iid, 4, 100, PolicySpec::weighted_ucb(0.0));
        s.trials = 0;
        assert!(run_experiment(&s, ExecMode::Serial).is_err());
    }

    #[test]
    fn trial_errors_carry_the_index() {
        let mut s = spec(Family::Iid, 4, 100, PolicySpec::weighted_ucb(-1.0));
        s.trials = 2;
        match run_experiment(&s, ExecMode::Serial).unwrap_err() {
            BanditError::Trial { trial, source } => {
                assert_eq!(trial, 0);
                assert!(matches!(*source, BanditError::Config(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn concentration_on_constant_arm_never_fails() {
        let arm = ArmSpec::Iid {
            mean: 0.3,
            noise: Noise::Gaussian { sigma: 0.0 },
        };
        let r = concentration_check(&arm, &WeightScheme::Uniform, 20, 0.05, 2000, 1).unwrap();
        assert_eq!(r.violation_rate(), 0.0);
    }

    #[test]
    fn concentration_rates_monotone_in_delta() {
        let arm = ArmSpec::Iid {
            mean: 0.5,
            noise: Noise::Bernoulli,
        };
        let loose = concentration_check(&arm, &WeightScheme::Uniform, 100, 0.5, 20_000, 3).unwrap();
        let tight =
            concentration_check(&arm, &WeightScheme::Uniform, 100, 0.05, 20_000, 3).unwrap();
        assert!(loose.violation_rate() <= 0.5);
        assert!(tight.violation_rate() <= 0.05);
        assert!(loose.upper_rate >= tight.upper_rate);
        assert!(loose.lower_rate >= tight.lower_rate);
        assert!(concentration_check(&arm, &WeightScheme::Uniform, 100, 1.0, 10, 3).is_err());
    }
}
