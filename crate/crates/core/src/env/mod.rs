//! Rested stochastic reward processes.
//!
//! An arm's process advances only when that arm is pulled. Each arm owns an
//! independent random stream, records the conditional mean that generated
//! every reward it emitted, and can report the conditional mean of its next
//! pull without advancing. Those two together make the weighted discrepancy
//! exact for every family, path-dependent ones included.

mod generators;

pub use generators::{
    make_drifting, make_iid, make_known_trend, make_known_trend_panel, make_markov,
    make_markov_panel, make_mixed, make_periodic, make_periodic_panel, make_rarely_changing,
    make_rotting, make_rotting_jumps, rarely_changing_segments, EnvSpec, Family,
    PERIODIC_PANEL_GRIDS, TREND_PANEL_TABLE,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{BanditError, Result};
use crate::history::WeightVector;
use crate::rng::{Lane, StreamRng, TrialSeed};

/// Observation noise around a conditional mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    /// Binomial with one trial. Means outside `[0, 1]` are clamped, and the
    /// clamped value is what the mean oracle reports.
    Bernoulli,
    Gaussian {
        sigma: f64,
    },
}

impl Noise {
    fn effective_mean(self, mean: f64) -> f64 {
        match self {
            Noise::Bernoulli => mean.clamp(0.0, 1.0),
            Noise::Gaussian { .. } => mean,
        }
    }

    fn sample(self, mean: f64, rng: &mut StreamRng) -> f64 {
        match self {
            Noise::Bernoulli => {
                let p = mean.clamp(0.0, 1.0);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Noise::Gaussian { sigma } => {
                if sigma == 0.0 {
                    mean
                } else {
                    // sigma validated positive at construction
                    Normal::new(mean, sigma).unwrap().sample(rng)
                }
            }
        }
    }

    /// Interval that holds all but a negligible fraction of samples.
    fn span(self, lo_mean: f64, hi_mean: f64) -> (f64, f64) {
        match self {
            Noise::Bernoulli => (0.0, 1.0),
            Noise::Gaussian { sigma } => (lo_mean - 3.0 * sigma, hi_mean + 3.0 * sigma),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Noise::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                BanditError::Config(format!("noise sigma must be finite and >= 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

/// A stretch of pulls sharing one base mean, starting at 1-based pull `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: u64,
    pub mean: f64,
}

/// Whether a known trend is matched against the upcoming pull or the last one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrendIndexing {
    #[default]
    NextPull,
    CurrentPull,
}

/// Immutable description of one arm's reward process.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmSpec {
    Iid {
        mean: f64,
        noise: Noise,
    },
    /// The first draw repeats forever.
    CompleteDependence {
        mean: f64,
        noise: Noise,
    },
    /// Pull `s` has mean `baseline + s^(-theta)`.
    Rotting {
        theta: f64,
        baseline: f64,
        noise: Noise,
    },
    /// Pull `s` in the segment starting at `c` has mean `mu + (s - c + 1)^(-theta)`.
    RottingJumps {
        segments: Vec<Segment>,
        theta: f64,
        noise: Noise,
    },
    /// Each pull moves the chain one step and emits the reward of the state
    /// reached. State rewards must be distinct so the last reward identifies
    /// the state.
    Markov {
        transitions: Vec<Vec<f64>>,
        state_rewards: Vec<f64>,
        initial_state: usize,
    },
    RarelyChanging {
        segments: Vec<Segment>,
        noise: Noise,
    },
    /// Pull `s` uses `means[((s - 1) / block_len) % means.len()]`.
    Periodic {
        block_len: u64,
        means: Vec<f64>,
        noise: Noise,
    },
    /// Pull `s` emits `X' * trend[s % trend.len()]` with `X'` centred on `base_mean`.
    KnownTrend {
        base_mean: f64,
        trend: Vec<f64>,
        noise: Noise,
    },
    /// Bernoulli rewards whose mean takes a `±step` random step after every
    /// pull, clipped to `[0, 1]`.
    Drifting {
        initial_mean: f64,
        step: f64,
    },
}

fn validate_segments(segments: &[Segment], what: &str) -> Result<()> {
    if segments.is_empty() {
        return Err(BanditError::Config(format!("{what}: no segments")));
    }
    if segments[0].start != 1 {
        return Err(BanditError::Config(format!(
            "{what}: first change point must be 1, got {}",
            segments[0].start
        )));
    }
    for pair in segments.windows(2) {
        if pair[1].start <= pair[0].start {
            return Err(BanditError::Config(format!(
                "{what}: change points not strictly increasing ({} then {})",
                pair[0].start, pair[1].start
            )));
        }
    }
    if let Some(s) = segments.iter().find(|s| !s.mean.is_finite()) {
        return Err(BanditError::Config(format!(
            "{what}: non-finite mean {}",
            s.mean
        )));
    }
    Ok(())
}

fn segment_at(segments: &[Segment], pull: u64) -> &Segment {
    let idx = segments.partition_point(|s| s.start <= pull);
    &segments[idx.saturating_sub(1)]
}

fn finite(what: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(BanditError::Config(format!(
            "{what} must be finite, got {x}"
        )))
    }
}

impl ArmSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ArmSpec::Iid { mean, noise } | ArmSpec::CompleteDependence { mean, noise } => {
                finite("mean", *mean)?;
                noise.validate()
            }
            ArmSpec::Rotting {
                theta,
                baseline,
                noise,
            } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(BanditError::Config(format!(
                        "rotting exponent must be positive, got {theta}"
                    )));
                }
                finite("baseline", *baseline)?;
                noise.validate()
            }
            ArmSpec::RottingJumps {
                segments,
                theta,
                noise,
            } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(BanditError::Config(format!(
                        "rotting exponent must be positive, got {theta}"
                    )));
                }
                validate_segments(segments, "rotting with jumps")?;
                noise.validate()
            }
            ArmSpec::Markov {
                transitions,
                state_rewards,
                initial_state,
            } => {
                let n = state_rewards.len();
                if n == 0 {
                    return Err(BanditError::Config("markov chain has no states".into()));
                }
                if transitions.len() != n {
                    return Err(BanditError::Config(format!(
                        "markov chain has {n} states but {} transition rows",
                        transitions.len()
                    )));
                }
                for (r, row) in transitions.iter().enumerate() {
                    if row.len() != n {
                        return Err(BanditError::Config(format!(
                            "transition row {r} has {} entries, expected {n}",
                            row.len()
                        )));
                    }
                    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                        return Err(BanditError::Config(format!(
                            "transition row {r} has a negative or non-finite entry"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-12 {
                        return Err(BanditError::Config(format!(
                            "transition row {r} sums to {sum}, not 1"
                        )));
                    }
                }
                for (a, ra) in state_rewards.iter().enumerate() {
                    finite("state reward", *ra)?;
                    if state_rewards[..a].contains(ra) {
                        return Err(BanditError::Config(format!(
                            "state reward {ra} is not unique; states are identified by reward"
                        )));
                    }
                }
                if *initial_state >= n {
                    return Err(BanditError::Config(format!(
                        "initial state {initial_state} out of range for {n} states"
                    )));
                }
                Ok(())
            }
            ArmSpec::RarelyChanging { segments, noise } => {
                validate_segments(segments, "rarely changing means")?;
                noise.validate()
            }
            ArmSpec::Periodic {
                block_len,
                means,
                noise,
            } => {
                if *block_len == 0 {
                    return Err(BanditError::Config("period length must be >= 1".into()));
                }
                if means.is_empty() {
                    return Err(BanditError::Config(
                        "periodic arm has no period means".into(),
                    ));
                }
                for m in means {
                    finite("period mean", *m)?;
                }
                noise.validate()
            }
            ArmSpec::KnownTrend {
                base_mean,
                trend,
                noise,
            } => {
                if trend.is_empty() {
                    return Err(BanditError::Config("trend table is empty".into()));
                }
                finite("base mean", *base_mean)?;
                for r in trend {
                    finite("trend value", *r)?;
                }
                noise.validate()
            }
            ArmSpec::Drifting { initial_mean, step } => {
                finite("initial mean", *initial_mean)?;
                if !(*step >= 0.0 && step.is_finite()) {
                    return Err(BanditError::Config(format!(
                        "drift step must be finite and >= 0, got {step}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ArmSpec::Iid { .. } => "iid",
            ArmSpec::CompleteDependence { .. } => "complete_dependence",
            ArmSpec::Rotting { .. } => "rotting",
            ArmSpec::RottingJumps { .. } => "rotting_jumps",
            ArmSpec::Markov { .. } => "markov",
            ArmSpec::RarelyChanging { .. } => "rarely_changing",
            ArmSpec::Periodic { .. } => "periodic",
            ArmSpec::KnownTrend { .. } => "known_trend",
            ArmSpec::Drifting { .. } => "drifting",
        }
    }

    /// Mean of pull `pull` for families whose means follow a fixed schedule.
    pub fn scheduled_mean(&self, pull: u64) -> Option<f64> {
        let m = match self {
            ArmSpec::Iid { mean, noise } => noise.effective_mean(*mean),
            ArmSpec::Rotting {
                theta,
                baseline,
                noise,
            } => noise.effective_mean(baseline + (pull as f64).powf(-theta)),
            ArmSpec::RottingJumps {
                segments,
                theta,
                noise,
            } => {
                let seg = segment_at(segments, pull);
                noise.effective_mean(seg.mean + ((pull - seg.start + 1) as f64).powf(-theta))
            }
            ArmSpec::RarelyChanging { segments, noise } => {
                noise.effective_mean(segment_at(segments, pull).mean)
            }
            ArmSpec::Periodic {
                block_len,
                means,
                noise,
            } => {
                let phase = ((pull - 1) / block_len) as usize % means.len();
                noise.effective_mean(means[phase])
            }
            ArmSpec::KnownTrend {
                base_mean,
                trend,
                noise,
            } => noise.effective_mean(*base_mean) * trend_value(trend, pull),
            ArmSpec::CompleteDependence { .. }
            | ArmSpec::Markov { .. }
            | ArmSpec::Drifting { .. } => return None,
        };
        Some(m)
    }

    /// Bounds on the rewards this arm can plausibly emit.
    pub fn reward_span(&self) -> (f64, f64) {
        fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
            xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            })
        }
        match self {
            ArmSpec::Iid { mean, noise } | ArmSpec::CompleteDependence { mean, noise } => {
                noise.span(*mean, *mean)
            }
            ArmSpec::Rotting {
                baseline, noise, ..
            } => noise.span(*baseline, baseline + 1.0),
            ArmSpec::RottingJumps {
                segments, noise, ..
            } => {
                let (lo, hi) = bounds(segments.iter().map(|s| s.mean));
                noise.span(lo, hi + 1.0)
            }
            ArmSpec::Markov { state_rewards, .. } => bounds(state_rewards.iter().cloned()),
            ArmSpec::RarelyChanging { segments, noise } => {
                let (lo, hi) = bounds(segments.iter().map(|s| s.mean));
                noise.span(lo, hi)
            }
            ArmSpec::Periodic { means, noise, .. } => {
                let (lo, hi) = bounds(means.iter().cloned());
                noise.span(lo, hi)
            }
            ArmSpec::KnownTrend {
                base_mean,
                trend,
                noise,
            } => {
                let (xlo, xhi) = noise.span(*base_mean, *base_mean);
                bounds(trend.iter().flat_map(|r| [xlo * r, xhi * r]))
            }
            ArmSpec::Drifting { .. } => (0.0, 1.0),
        }
    }
}

/// Trend multiplier for 1-based pull index `pull`.
pub fn trend_value(trend: &[f64], pull: u64) -> f64 {
    trend[(pull % trend.len() as u64) as usize]
}

#[derive(Debug, Clone, PartialEq)]
enum ArmState {
    Scheduled,
    Frozen(Option<f64>),
    Markov(usize),
    Drift(f64),
}

/// A live arm: its spec, random stream and everything it has emitted.
#[derive(Debug, Clone)]
pub struct ArmProcess {
    spec: ArmSpec,
    rng: StreamRng,
    state: ArmState,
    pulls: u64,
    /// Conditional mean in force just before each pull.
    recorded_means: Vec<f64>,
    last_reward: Option<f64>,
}

impl ArmProcess {
    pub fn new(spec: ArmSpec, rng: StreamRng) -> Result<Self> {
        spec.validate()?;
        let state = match &spec {
            ArmSpec::CompleteDependence { .. } => ArmState::Frozen(None),
            ArmSpec::Markov { initial_state, .. } => ArmState::Markov(*initial_state),
            ArmSpec::Drifting { initial_mean, .. } => ArmState::Drift(initial_mean.clamp(0.0, 1.0)),
            _ => ArmState::Scheduled,
        };
        Ok(Self {
            spec,
            rng,
            state,
            pulls: 0,
            recorded_means: Vec::new(),
            last_reward: None,
        })
    }

    pub fn spec(&self) -> &ArmSpec {
        &self.spec
    }

    pub fn pull_count(&self) -> u64 {
        self.pulls
    }

    pub fn recorded_means(&self) -> &[f64] {
        &self.recorded_means
    }

    pub fn last_reward(&self) -> Option<f64> {
        self.last_reward
    }

    /// Current Markov state, when the arm is a chain.
    pub fn markov_state(&self) -> Option<usize> {
        match self.state {
            ArmState::Markov(s) => Some(s),
            _ => None,
        }
    }

    /// Conditional mean of the next pull given everything emitted so far.
    pub fn next_mean(&self) -> f64 {
        let next = self.pulls + 1;
        match (&self.spec, &self.state) {
            (ArmSpec::CompleteDependence { mean, noise }, ArmState::Frozen(v)) => {
                v.unwrap_or_else(|| noise.effective_mean(*mean))
            }
            (
                ArmSpec::Markov {
                    transitions,
                    state_rewards,
                    ..
                },
                ArmState::Markov(s),
            ) => transitions[*s]
                .iter()
                .zip(state_rewards)
                .map(|(p, r)| p * r)
                .sum(),
            (ArmSpec::Drifting { .. }, ArmState::Drift(m)) => *m,
            (spec, _) => spec
                .scheduled_mean(next)
                .expect("scheduled family without a schedule"),
        }
    }

    /// Emits the next process value and advances this arm only.
    pub fn pull(&mut self) -> f64 {
        let mean = self.next_mean();
        let next = self.pulls + 1;
        let reward = match (&self.spec, &mut self.state) {
            (ArmSpec::CompleteDependence { mean: base, noise }, ArmState::Frozen(v)) => {
                *v.get_or_insert_with(|| noise.sample(*base, &mut self.rng))
            }
            (
                ArmSpec::Markov {
                    transitions,
                    state_rewards,
                    ..
                },
                ArmState::Markov(s),
            ) => {
                let row = &transitions[*s];
                let u: f64 = self.rng.random();
                let mut acc = 0.0;
                let mut to = row.len() - 1;
                for (j, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        to = j;
                        break;
                    }
                }
                *s = to;
                state_rewards[to]
            }
            (ArmSpec::Drifting { step, .. }, ArmState::Drift(m)) => {
                let reward = Noise::Bernoulli.sample(*m, &mut self.rng);
                let up: bool = self.rng.random();
                let moved = if up { *m + step } else { *m - step };
                *m = moved.clamp(0.0, 1.0);
                reward
            }
            (
                ArmSpec::KnownTrend {
                    base_mean,
                    trend,
                    noise,
                },
                _,
            ) => noise.sample(*base_mean, &mut self.rng) * trend_value(trend, next),
            (
                ArmSpec::Iid { noise, .. }
                | ArmSpec::Rotting { noise, .. }
                | ArmSpec::RottingJumps { noise, .. }
                | ArmSpec::RarelyChanging { noise, .. }
                | ArmSpec::Periodic { noise, .. },
                _,
            ) => noise.sample(mean, &mut self.rng),
            (spec, state) => unreachable!("{} arm in state {state:?}", spec.family_name()),
        };
        self.recorded_means.push(mean);
        self.pulls = next;
        self.last_reward = Some(reward);
        reward
    }

    /// `D(q) = next_mean − Σ_s q(s) m(s)` over this arm's past pulls.
    pub fn discrepancy(&self, q: &WeightVector) -> Result<f64> {
        Ok(self.next_mean() - q.dot(&self.recorded_means)?)
    }
}

/// `K` mutually independent rested arms.
#[derive(Debug, Clone)]
pub struct Environment {
    arms: Vec<ArmProcess>,
}

impl Environment {
    /// Builds the arms, giving arm `i` the reward stream `(seed, i)`.
    pub fn new(specs: Vec<ArmSpec>, seed: TrialSeed) -> Result<Self> {
        if specs.is_empty() {
            return Err(BanditError::Config(
                "environment needs at least one arm".into(),
            ));
        }
        let arms = specs
            .into_iter()
            .enumerate()
            .map(|(i, spec)| ArmProcess::new(spec, seed.stream(i as u64, Lane::Rewards)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { arms })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arm(&self, arm: usize) -> &ArmProcess {
        &self.arms[arm]
    }

    pub fn arms(&self) -> &[ArmProcess] {
        &self.arms
    }

    fn check(&self, arm: usize) -> Result<()> {
        if arm < self.arms.len() {
            Ok(())
        } else {
            Err(BanditError::ArmOutOfRange {
                arm,
                arms: self.arms.len(),
            })
        }
    }

    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        self.check(arm)?;
        Ok(self.arms[arm].pull())
    }

    pub fn next_means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmProcess::next_mean).collect()
    }

    pub fn next_means_into(&self, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.arms.iter().map(ArmProcess::next_mean));
    }

    pub fn discrepancy(&self, arm: usize, q: &WeightVector) -> Result<f64> {
        self.check(arm)?;
        let process = &self.arms[arm];
        if process.pull_count() == 0 {
            return Err(BanditError::EmptyHistory { arm });
        }
        process.discrepancy(q)
    }

    /// Union of the arms' reward spans.
    pub fn reward_range(&self) -> (f64, f64) {
        self.arms
            .iter()
            .map(|a| a.spec().reward_span())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, h)| {
                (lo.min(l), hi.max(h))
            })
    }
}

#[cfg(test)]
mod tests;
