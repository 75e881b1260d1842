//! Weight distributions over an arm's past pulls, one construction per
//! process family.
//!
//! All pull indices here are arm-local and 1-based; the weights are being
//! built to predict pull `k + 1` of an arm that has been pulled `k` times.

use crate::env::{trend_value, ArmSpec, TrendIndexing};
use crate::error::{BanditError, Result};
use crate::history::{ArmHistory, WeightVector};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    Uniform,
    /// Uniform over pulls since the last known change point.
    SinceChange {
        change_points: Vec<u64>,
    },
    /// Uniform over pulls whose preceding reward equals the latest reward.
    StateMatched,
    /// Uniform over pulls in the same phase as the next pull, where pull `n`
    /// is in phase `((n - 1) / block_len) % period`.
    PhaseMatched {
        period: u64,
        block_len: u64,
    },
    /// Uniform over pulls whose trend value matches the reference pull's.
    TrendMatched {
        trend: Vec<f64>,
        indexing: TrendIndexing,
    },
    /// Uniform over the last `⌊k^(2γ/3)⌋` pulls.
    RecentWindow {
        gamma: f64,
    },
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::SinceChange { .. } => "since_change",
            WeightScheme::StateMatched => "state_matched",
            WeightScheme::PhaseMatched { .. } => "phase_matched",
            WeightScheme::TrendMatched { .. } => "trend_matched",
            WeightScheme::RecentWindow { .. } => "recent_window",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightScheme::PhaseMatched { period, block_len } if *period == 0 || *block_len == 0 => {
                Err(BanditError::Config(format!(
                    "phase weights need period >= 1 and block length >= 1, got {period} and {block_len}"
                )))
            }
            WeightScheme::TrendMatched { trend, .. } if trend.is_empty() => {
                Err(BanditError::Config("trend table is empty".into()))
            }
            WeightScheme::RecentWindow { gamma } if !(*gamma > 0.0 && gamma.is_finite()) => Err(
                BanditError::Config(format!("window exponent must be positive, got {gamma}")),
            ),
            WeightScheme::SinceChange { change_points } => {
                if change_points.first() != Some(&1) {
                    return Err(BanditError::Config(
                        "change points must start at pull 1".into(),
                    ));
                }
                if change_points.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(BanditError::Config(
                        "change points must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The scheme that matches a process family, using the family metadata
    /// the learner is assumed to know.
    pub fn matched_for(spec: &ArmSpec, drift_gamma: f64) -> Self {
        match spec {
            ArmSpec::Iid { .. } | ArmSpec::CompleteDependence { .. } | ArmSpec::Rotting { .. } => {
                WeightScheme::Uniform
            }
            ArmSpec::RottingJumps { segments, .. } | ArmSpec::RarelyChanging { segments, .. } => {
                WeightScheme::SinceChange {
                    change_points: segments.iter().map(|s| s.start).collect(),
                }
            }
            ArmSpec::Markov { .. } => WeightScheme::StateMatched,
            ArmSpec::Periodic {
                block_len, means, ..
            } => WeightScheme::PhaseMatched {
                period: means.len() as u64,
                block_len: *block_len,
            },
            ArmSpec::KnownTrend { trend, .. } => WeightScheme::TrendMatched {
                trend: trend.clone(),
                indexing: TrendIndexing::NextPull,
            },
            ArmSpec::Drifting { .. } => WeightScheme::RecentWindow { gamma: drift_gamma },
        }
    }
}

fn pulls_of(history: &ArmHistory) -> Result<usize> {
    match history.pull_count() {
        0 => Err(BanditError::EmptyHistory { arm: history.arm() }),
        k => Ok(k),
    }
}

fn no_support(scheme: &'static str, history: &ArmHistory) -> BanditError {
    BanditError::NoSupport {
        scheme,
        arm: history.arm(),
    }
}

pub fn uniform_weights(history: &ArmHistory) -> Result<WeightVector> {
    let k = pulls_of(history)?;
    Ok(WeightVector::uniform(k).expect("k >= 1"))
}

/// Change points after pull `k + 1` are ignored. A change point at exactly
/// `k + 1` means no past pull shares the next pull's segment.
pub fn since_change_weights(history: &ArmHistory, change_points: &[u64]) -> Result<WeightVector> {
    let k = pulls_of(history)? as u64;
    let last = change_points
        .iter()
        .copied()
        .filter(|&c| c <= k + 1)
        .max()
        .unwrap_or(1)
        .max(1);
    WeightVector::uniform_over(k as usize, last as usize..=k as usize)
        .ok_or_else(|| no_support("since_change", history))
}

/// Pull 1 has no observed predecessor and never matches.
pub fn state_matched_weights(history: &ArmHistory, current_state: f64) -> Result<WeightVector> {
    let k = pulls_of(history)?;
    let rewards: Vec<f64> = history.rewards().collect();
    let support = (2..=k).filter(|&s| rewards[s - 2] == current_state);
    WeightVector::uniform_over(k, support).ok_or_else(|| no_support("state_matched", history))
}

pub fn phase_matched_weights(history: &ArmHistory, period: u64) -> Result<WeightVector> {
    blocked_phase_weights(history, period, 1)
}

pub fn blocked_phase_weights(
    history: &ArmHistory,
    period: u64,
    block_len: u64,
) -> Result<WeightVector> {
    let k = pulls_of(history)?;
    if period == 0 || block_len == 0 {
        return Err(BanditError::Contract(
            "phase weights need period >= 1 and block length >= 1".into(),
        ));
    }
    let phase = |n: u64| ((n - 1) / block_len) % period;
    let target = phase(k as u64 + 1);
    let support = (1..=k).filter(|&s| phase(s as u64) == target);
    WeightVector::uniform_over(k, support).ok_or_else(|| no_support("phase_matched", history))
}

pub fn trend_matched_weights(
    history: &ArmHistory,
    trend: &[f64],
    indexing: TrendIndexing,
) -> Result<WeightVector> {
    let k = pulls_of(history)?;
    if trend.is_empty() {
        return Err(BanditError::Contract("trend table is empty".into()));
    }
    let reference = match indexing {
        TrendIndexing::NextPull => k as u64 + 1,
        TrendIndexing::CurrentPull => k as u64,
    };
    let target = trend_value(trend, reference);
    let support = (1..=k).filter(|&s| trend_value(trend, s as u64) == target);
    WeightVector::uniform_over(k, support).ok_or_else(|| no_support("trend_matched", history))
}

/// Window length `max(1, ⌊k^(2γ/3)⌋)`, capped at `k`.
pub fn recent_window_len(pulls: usize, gamma: f64) -> usize {
    // The nudge keeps exact powers such as 64^(1/2) from flooring down.
    let raw = (pulls as f64).powf(2.0 * gamma / 3.0) * (1.0 + 1e-12);
    (raw.floor() as usize).clamp(1, pulls)
}

pub fn recent_window_weights(history: &ArmHistory, gamma: f64) -> Result<WeightVector> {
    let k = pulls_of(history)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(BanditError::Contract(format!(
            "window exponent must be positive, got {gamma}"
        )));
    }
    let n = recent_window_len(k, gamma);
    Ok(WeightVector::uniform_over(k, k - n + 1..=k).expect("window is non-empty"))
}

/// A constructed weight vector, noting whether the scheme had to fall back.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub q: WeightVector,
    pub fell_back: bool,
}

/// Builds `scheme`'s weights, falling back to uniform when the scheme finds
/// no supporting pull.
pub fn weights_for(scheme: &WeightScheme, history: &ArmHistory) -> Result<Weights> {
    let built = match scheme {
        WeightScheme::Uniform => uniform_weights(history),
        WeightScheme::SinceChange { change_points } => since_change_weights(history, change_points),
        WeightScheme::StateMatched => match history.last_reward() {
            Some(state) => state_matched_weights(history, state),
            None => Err(BanditError::EmptyHistory { arm: history.arm() }),
        },
        WeightScheme::PhaseMatched { period, block_len } => {
            blocked_phase_weights(history, *period, *block_len)
        }
        WeightScheme::TrendMatched { trend, indexing } => {
            trend_matched_weights(history, trend, *indexing)
        }
        WeightScheme::RecentWindow { gamma } => recent_window_weights(history, *gamma),
    };
    match built {
        Ok(q) => Ok(Weights {
            q,
            fell_back: false,
        }),
        Err(BanditError::NoSupport { scheme, arm }) => {
            log::debug!("{scheme} weights have no support on arm {arm}; using uniform");
            Ok(Weights {
                q: uniform_weights(history)?,
                fell_back: true,
            })
        }
        Err(e) => Err(e),
    }
}
