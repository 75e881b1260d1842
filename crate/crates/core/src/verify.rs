//! Statistical self-checks run by the `verify` subcommand.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::engine::{concentration_check, map_trials, run_trial, ExecMode};
use crate::env::{ArmProcess, ArmSpec, EnvSpec, Family, Noise};
use crate::error::{BanditError, Result};
use crate::history::ArmHistory;
use crate::policy::{PolicySpec, DEFAULT_DRIFT_GAMMA};
use crate::rng::{derive_stream, Lane, TrialSeed};
use crate::weights::{weights_for, WeightScheme};

/// Upper bound on `δreg(2T) / δreg(T)`. Logarithmic growth predicts about
/// 1.1 at these horizons; the rest is burn-in slack.
pub const LOG_GROWTH_THRESHOLD: f64 = 1.6;
pub const LOG_GROWTH_ARMS: usize = 10;
pub const LOG_GROWTH_HORIZONS: [u64; 3] = [1000, 2000, 4000];
pub const LOG_GROWTH_TRIALS: u64 = 100;

pub const CONCENTRATION_DELTAS: [f64; 3] = [0.5, 0.05, 0.01];
pub const CONCENTRATION_PULLS: usize = 100;
pub const CONCENTRATION_REPLICATES: u64 = 100_000;

pub const ZERO_TOLERANCE: f64 = 1e-12;
pub const ZERO_HISTORIES: u64 = 100;
pub const ZERO_MAX_PULLS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Concentration,
    LogGrowth,
    DiscrepancyZero,
}

impl Suite {
    pub const ALL: [Suite; 3] = [
        Suite::Concentration,
        Suite::LogGrowth,
        Suite::DiscrepancyZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Concentration => "concentration",
            Suite::LogGrowth => "log-growth",
            Suite::DiscrepancyZero => "discrepancy-zero",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                BanditError::Config(format!(
                    "unknown suite {s:?}; expected concentration, log-growth or discrepancy-zero"
                ))
            })
    }
}

/// Measured statistics, one printable line each, and the overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub lines: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            lines: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

pub fn run_suite(suite: Suite, seed: u64, mode: ExecMode) -> Result<SuiteReport> {
    match suite {
        Suite::Concentration => concentration_suite(seed),
        Suite::LogGrowth => log_growth_suite(seed, mode),
        Suite::DiscrepancyZero => discrepancy_zero_suite(seed),
    }
}

/// Bernoulli(0.5) arm, uniform weights after 100 pulls.
pub fn concentration_suite(seed: u64) -> Result<SuiteReport> {
    let arm = ArmSpec::Iid {
        mean: 0.5,
        noise: Noise::Bernoulli,
    };
    let mut report = SuiteReport::new(Suite::Concentration);
    for delta in CONCENTRATION_DELTAS {
        let r = concentration_check(
            &arm,
            &WeightScheme::Uniform,
            CONCENTRATION_PULLS,
            delta,
            CONCENTRATION_REPLICATES,
            seed,
        )?;
        report.check(
            r.upper_rate <= delta && r.lower_rate <= delta,
            format!(
                "delta={delta}: upper violation rate {:.5}, lower {:.5}",
                r.upper_rate, r.lower_rate
            ),
        );
    }
    Ok(report)
}

/// Families whose matched weights give zero or bounded discrepancy.
pub fn log_growth_families() -> Vec<Family> {
    vec![
        Family::Iid,
        Family::default_rotting(),
        Family::default_periodic(),
        Family::default_rarely_changing(),
        Family::default_trend(),
        Family::Markov { states: 3 },
    ]
}

/// Mean final `δreg` of a game of each given length. Every horizon is a
/// separate game, with the environment and policy built for that length.
pub fn horizon_regret(
    family: &Family,
    arms: usize,
    policy: &PolicySpec,
    horizons: &[u64],
    trials: u64,
    root_seed: u64,
    mode: ExecMode,
) -> Result<Vec<f64>> {
    horizons
        .iter()
        .map(|&h| {
            let env = EnvSpec::new(family.clone(), arms, h);
            let per_trial = map_trials(trials, mode, |i| {
                Ok(run_trial(&env, policy, h, TrialSeed::new(root_seed, i))?
                    .ledger
                    .delta_reg())
            })?;
            Ok(per_trial.iter().sum::<f64>() / trials as f64)
        })
        .collect()
}

pub fn log_growth_suite(seed: u64, mode: ExecMode) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::LogGrowth);
    let wucb = PolicySpec::weighted_ucb(0.0);
    let h = LOG_GROWTH_HORIZONS;
    for family in log_growth_families() {
        let r = horizon_regret(
            &family,
            LOG_GROWTH_ARMS,
            &wucb,
            &h,
            LOG_GROWTH_TRIALS,
            seed,
            mode,
        )?;
        for j in 0..2 {
            let ratio = r[j + 1] / r[j];
            report.check(
                ratio <= LOG_GROWTH_THRESHOLD,
                format!(
                    "{}: dreg({})/dreg({}) = {:.3} / {:.3} = {ratio:.3} (threshold {LOG_GROWTH_THRESHOLD})",
                    family.name(),
                    h[j + 1],
                    h[j],
                    r[j + 1],
                    r[j]
                ),
            );
        }
    }
    let span = [h[0], h[2]];
    let w = horizon_regret(
        &Family::Iid,
        LOG_GROWTH_ARMS,
        &wucb,
        &span,
        LOG_GROWTH_TRIALS,
        seed,
        mode,
    )?;
    let e = horizon_regret(
        &Family::Iid,
        LOG_GROWTH_ARMS,
        &PolicySpec::exp3(),
        &span,
        LOG_GROWTH_TRIALS,
        seed,
        mode,
    )?;
    let (rw, re) = (w[1] / w[0], e[1] / e[0]);
    report.check(
        re > rw,
        format!(
            "iid: exp3 dreg({})/dreg({}) = {re:.3} vs weighted_ucb {rw:.3}",
            span[1], span[0]
        ),
    );
    Ok(report)
}

/// A family paired with the weights that should cancel its discrepancy.
#[derive(Debug, Clone)]
pub struct ZeroPairing {
    pub name: &'static str,
    pub family: Family,
}

pub fn zero_pairings() -> Vec<ZeroPairing> {
    vec![
        ZeroPairing {
            name: "iid/uniform",
            family: Family::Iid,
        },
        ZeroPairing {
            name: "markov/state_matched",
            family: Family::Markov { states: 3 },
        },
        ZeroPairing {
            name: "rarely_changing/since_change",
            family: Family::default_rarely_changing(),
        },
        ZeroPairing {
            name: "periodic/phase_matched",
            family: Family::default_periodic(),
        },
        ZeroPairing {
            name: "known_trend/trend_matched",
            family: Family::default_trend(),
        },
    ]
}

/// A random arm of `family` pulled a random number of times, extended
/// until its matched scheme has support. Returns the arm, its history and
/// the scheme.
pub fn random_matched_history(
    family: &Family,
    seed: u64,
    index: u64,
) -> Result<(ArmProcess, ArmHistory, WeightScheme)> {
    let mut pick = derive_stream(seed, index, 0, Lane::Replicate);
    let arms = 150;
    let arm = pick.random_range(0..arms);
    let env = EnvSpec::new(family.clone(), arms, ZERO_MAX_PULLS);
    let mut process = env.build_arm(arm, TrialSeed::new(seed, index))?;
    let scheme = WeightScheme::matched_for(process.spec(), DEFAULT_DRIFT_GAMMA);
    // Leaves room for the few extra pulls a scheme may need for support.
    let target = pick.random_range(1..=ZERO_MAX_PULLS - 10);
    let mut history = ArmHistory::new(arm);
    loop {
        let t = history.pull_count() as u64 + 1;
        history.record(t, process.pull())?;
        if t >= target && !weights_for(&scheme, &history)?.fell_back {
            return Ok((process, history, scheme));
        }
    }
}

pub fn discrepancy_zero_suite(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::DiscrepancyZero);
    for pairing in zero_pairings() {
        let mut worst = 0.0f64;
        for i in 0..ZERO_HISTORIES {
            let (process, history, scheme) = random_matched_history(&pairing.family, seed, i)?;
            let q = weights_for(&scheme, &history)?.q;
            worst = worst.max(process.discrepancy(&q)?.abs());
        }
        report.check(
            worst <= ZERO_TOLERANCE,
            format!(
                "{}: max |D| over {ZERO_HISTORIES} histories = {worst:.3e}",
                pairing.name
            ),
        );
    }
    Ok(report)
}
