//! Environment constructors, including the randomised benchmark generators.

use rand::Rng;

use super::{ArmProcess, ArmSpec, Environment, Noise, Segment};
use crate::error::{BanditError, Result};
use crate::rng::{Lane, StreamRng, TrialSeed};

/// Period means of the benchmark periodic arms: `(low, high)` per phase,
/// spread linearly across arms.
pub const PERIODIC_PANEL_GRIDS: [(f64, f64); 3] = [(10.0, 20.0), (5.0, 9.0), (1.0, 4.0)];

/// Benchmark trend multipliers, indexed by pull count mod 3.
pub const TREND_PANEL_TABLE: [f64; 3] = [0.1, 1.0, 3.0];

const RARELY_CHANGING_SIGMA: f64 = 0.1;
const PANEL_SIGMA: f64 = 0.3;

fn check_arms(k: usize) -> Result<()> {
    if k == 0 {
        Err(BanditError::Config("number of arms must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// `lo + (hi - lo) i / (k - 1)`; a single arm sits at `lo`.
fn linear_grid(lo: f64, hi: f64, i: usize, k: usize) -> f64 {
    if k == 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (k - 1) as f64
    }
}

/// Bernoulli arms with means `1/K, 2/K, ..., 1`.
pub fn make_iid(k: usize, seed: TrialSeed) -> Result<Environment> {
    check_arms(k)?;
    Environment::new((0..k).map(|i| iid_arm(i, k)).collect(), seed)
}

fn iid_arm(i: usize, k: usize) -> ArmSpec {
    ArmSpec::Iid {
        mean: (i + 1) as f64 / k as f64,
        noise: Noise::Bernoulli,
    }
}

/// Segments starting at pulls `1 + ⌊jT/N⌋`, `j = 0..N`.
pub fn rarely_changing_segments(horizon: u64, means: &[f64]) -> Vec<Segment> {
    let n = means.len() as u64;
    let mut segments: Vec<Segment> = Vec::with_capacity(means.len());
    for (j, &mean) in means.iter().enumerate() {
        let start = 1 + (j as u64 * horizon) / n;
        match segments.last_mut() {
            Some(last) if last.start == start => last.mean = mean,
            _ => segments.push(Segment { start, mean }),
        }
    }
    segments
}

fn rarely_changing_arm(horizon: u64, max_changes: u32, sigma: f64, rng: &mut StreamRng) -> ArmSpec {
    let n = rng.random_range(1..=max_changes.max(1));
    let means: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    ArmSpec::RarelyChanging {
        segments: rarely_changing_segments(horizon, &means),
        noise: Noise::Gaussian { sigma },
    }
}

/// Each arm draws `N_i ~ U{1..10}` segments evenly spaced over the horizon,
/// with `U(0, 1)` segment means and `N(μ, 0.1)` rewards.
pub fn make_rarely_changing(k: usize, horizon: u64, seed: TrialSeed) -> Result<Environment> {
    EnvSpec::new(
        Family::RarelyChanging {
            max_changes: 10,
            sigma: RARELY_CHANGING_SIGMA,
        },
        k,
        horizon,
    )
    .build(seed)
}

fn rotting_arm(i: usize, k: usize, theta_min: f64, theta_span: f64) -> ArmSpec {
    ArmSpec::Rotting {
        theta: theta_min + theta_span * i as f64 / k as f64,
        baseline: 0.0,
        noise: Noise::Bernoulli,
    }
}

/// Bernoulli arms with mean `s^(-θ_i)` at pull `s`, `θ_i = 0.1 + 10 i / K`.
pub fn make_rotting(k: usize, seed: TrialSeed) -> Result<Environment> {
    EnvSpec::new(Family::default_rotting(), k, 1).build(seed)
}

/// `K` identical rotting-with-jumps arms.
pub fn make_rotting_jumps(
    k: usize,
    segment_means: &[f64],
    change_points: &[u64],
    theta: f64,
    noise: Noise,
    seed: TrialSeed,
) -> Result<Environment> {
    check_arms(k)?;
    if segment_means.len() != change_points.len() {
        return Err(BanditError::Config(format!(
            "{} segment means for {} change points",
            segment_means.len(),
            change_points.len()
        )));
    }
    let segments: Vec<Segment> = change_points
        .iter()
        .zip(segment_means)
        .map(|(&start, &mean)| Segment { start, mean })
        .collect();
    let spec = ArmSpec::RottingJumps {
        segments,
        theta,
        noise,
    };
    Environment::new(vec![spec; k], seed)
}

/// One chain per arm; all arms share the state rewards. Chains start in state 0.
pub fn make_markov(
    transition_matrices: Vec<Vec<Vec<f64>>>,
    state_rewards: &[f64],
    seed: TrialSeed,
) -> Result<Environment> {
    check_arms(transition_matrices.len())?;
    let specs = transition_matrices
        .into_iter()
        .map(|transitions| ArmSpec::Markov {
            transitions,
            state_rewards: state_rewards.to_vec(),
            initial_state: 0,
        })
        .collect();
    Environment::new(specs, seed)
}

fn markov_arm(states: usize, rng: &mut StreamRng) -> ArmSpec {
    // Rows drawn uniformly from the simplex via normalised exponentials.
    let transitions = (0..states)
        .map(|_| {
            let raw: Vec<f64> = (0..states)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let head: f64 = row[..states - 1].iter().sum();
            row[states - 1] = 1.0 - head;
            row
        })
        .collect();
    let state_rewards = (0..states)
        .map(|j| {
            if states == 1 {
                0.5
            } else {
                j as f64 / (states - 1) as f64
            }
        })
        .collect();
    ArmSpec::Markov {
        transitions,
        state_rewards,
        initial_state: 0,
    }
}

/// Random chains on `states` states with rewards evenly spaced in `[0, 1]`.
pub fn make_markov_panel(k: usize, states: usize, seed: TrialSeed) -> Result<Environment> {
    EnvSpec::new(Family::Markov { states }, k, 1).build(seed)
}

/// Periodic arms with explicit per-arm period means and `N(μ, σ)` rewards.
pub fn make_periodic(
    period_length: u64,
    period_means: Vec<Vec<f64>>,
    sigma: f64,
    seed: TrialSeed,
) -> Result<Environment> {
    check_arms(period_means.len())?;
    let specs = period_means
        .into_iter()
        .map(|means| ArmSpec::Periodic {
            block_len: period_length,
            means,
            noise: Noise::Gaussian { sigma },
        })
        .collect();
    Environment::new(specs, seed)
}

fn periodic_panel_arm(i: usize, k: usize, period_length: u64, sigma: f64) -> ArmSpec {
    ArmSpec::Periodic {
        block_len: period_length,
        means: PERIODIC_PANEL_GRIDS
            .iter()
            .map(|&(lo, hi)| linear_grid(lo, hi, i, k))
            .collect(),
        noise: Noise::Gaussian { sigma },
    }
}

/// Three repeating periods with the benchmark mean grids.
pub fn make_periodic_panel(k: usize, period_length: u64, seed: TrialSeed) -> Result<Environment> {
    EnvSpec::new(
        Family::Periodic {
            period_length,
            sigma: PANEL_SIGMA,
        },
        k,
        1,
    )
    .build(seed)
}

/// Rewards `X' · R(s)` with `X' ~ N(μ_i, σ)`.
pub fn make_known_trend(
    base_means: &[f64],
    trend: &[f64],
    sigma: f64,
    seed: TrialSeed,
) -> Result<Environment> {
    check_arms(base_means.len())?;
    let specs = base_means
        .iter()
        .map(|&base_mean| ArmSpec::KnownTrend {
            base_mean,
            trend: trend.to_vec(),
            noise: Noise::Gaussian { sigma },
        })
        .collect();
    Environment::new(specs, seed)
}

fn trend_panel_arm(i: usize, k: usize, trend: &[f64], sigma: f64) -> ArmSpec {
    ArmSpec::KnownTrend {
        base_mean: 0.1 + 6.0 * i as f64 / k as f64,
        trend: trend.to_vec(),
        noise: Noise::Gaussian { sigma },
    }
}

/// `μ_i = 0.1 + 6 i / K` and the benchmark trend table.
pub fn make_known_trend_panel(k: usize, seed: TrialSeed) -> Result<Environment> {
    EnvSpec::new(Family::default_trend(), k, 1).build(seed)
}

fn drifting_arm(horizon: u64, rng: &mut StreamRng) -> ArmSpec {
    let t = horizon as f64;
    let half = 1.0 / t.sqrt();
    ArmSpec::Drifting {
        initial_mean: rng.random_range(1.0 - half..1.0 + half),
        step: t.powf(-2.0 / 3.0),
    }
}

/// Drifting Bernoulli arms: initial mean `U(1 − 1/√T, 1 + 1/√T)`, step `T^(-2/3)`.
pub fn make_drifting(k: usize, horizon: u64, seed: TrialSeed) -> Result<Environment> {
    EnvSpec::new(Family::Drifting, k, horizon).build(seed)
}

/// Heterogeneous arms, one spec per arm.
pub fn make_mixed(arm_specs: Vec<ArmSpec>, seed: TrialSeed) -> Result<Environment> {
    check_arms(arm_specs.len())?;
    Environment::new(arm_specs, seed)
}

/// A process family plus the parameters its generator needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Iid,
    RarelyChanging {
        max_changes: u32,
        sigma: f64,
    },
    Rotting {
        theta_min: f64,
        theta_span: f64,
    },
    Drifting,
    KnownTrend {
        trend: Vec<f64>,
        sigma: f64,
    },
    Periodic {
        period_length: u64,
        sigma: f64,
    },
    Markov {
        states: usize,
    },
    /// Arm `i` follows `families[i % families.len()]`.
    Mixed(Vec<Family>),
}

impl Family {
    pub fn default_rotting() -> Self {
        Family::Rotting {
            theta_min: 0.1,
            theta_span: 10.0,
        }
    }

    pub fn default_trend() -> Self {
        Family::KnownTrend {
            trend: TREND_PANEL_TABLE.to_vec(),
            sigma: PANEL_SIGMA,
        }
    }

    pub fn default_rarely_changing() -> Self {
        Family::RarelyChanging {
            max_changes: 10,
            sigma: RARELY_CHANGING_SIGMA,
        }
    }

    pub fn default_periodic() -> Self {
        Family::Periodic {
            period_length: 50,
            sigma: PANEL_SIGMA,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Iid => "iid",
            Family::RarelyChanging { .. } => "rarely_changing",
            Family::Rotting { .. } => "rotting",
            Family::Drifting => "drifting",
            Family::KnownTrend { .. } => "known_trend",
            Family::Periodic { .. } => "periodic",
            Family::Markov { .. } => "markov",
            Family::Mixed(_) => "mixed",
        }
    }

    fn arm(&self, i: usize, k: usize, horizon: u64, rng: &mut StreamRng) -> Result<ArmSpec> {
        let spec = match self {
            Family::Iid => iid_arm(i, k),
            Family::RarelyChanging { max_changes, sigma } => {
                rarely_changing_arm(horizon, *max_changes, *sigma, rng)
            }
            Family::Rotting {
                theta_min,
                theta_span,
            } => rotting_arm(i, k, *theta_min, *theta_span),
            Family::Drifting => drifting_arm(horizon, rng),
            Family::KnownTrend { trend, sigma } => trend_panel_arm(i, k, trend, *sigma),
            Family::Periodic {
                period_length,
                sigma,
            } => periodic_panel_arm(i, k, *period_length, *sigma),
            Family::Markov { states } => {
                if *states == 0 {
                    return Err(BanditError::Config("markov chain needs >= 1 state".into()));
                }
                markov_arm(*states, rng)
            }
            Family::Mixed(families) => {
                if families.is_empty() {
                    return Err(BanditError::Config("mixed family list is empty".into()));
                }
                families[i % families.len()].arm(i, k, horizon, rng)?
            }
        };
        Ok(spec)
    }
}

/// Declarative environment: family, arm count and the horizon some
/// generators scale with.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub family: Family,
    pub arms: usize,
    pub horizon: u64,
}

impl EnvSpec {
    pub fn new(family: Family, arms: usize, horizon: u64) -> Self {
        Self {
            family,
            arms,
            horizon,
        }
    }

    /// Draws the per-arm specs; arm `i` uses generation stream `(seed, i)`.
    pub fn arm_specs(&self, seed: TrialSeed) -> Result<Vec<ArmSpec>> {
        check_arms(self.arms)?;
        if self.horizon == 0 {
            return Err(BanditError::Config("horizon must be >= 1".into()));
        }
        (0..self.arms)
            .map(|i| {
                let mut rng = seed.stream(i as u64, Lane::Generate);
                let spec = self.family.arm(i, self.arms, self.horizon, &mut rng)?;
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }

    pub fn build(&self, seed: TrialSeed) -> Result<Environment> {
        Environment::new(self.arm_specs(seed)?, seed)
    }

    /// A single fresh arm, as arm `arm` of this environment would be built.
    pub fn build_arm(&self, arm: usize, seed: TrialSeed) -> Result<ArmProcess> {
        let mut rng = seed.stream(arm as u64, Lane::Generate);
        let spec = self.family.arm(arm, self.arms, self.horizon, &mut rng)?;
        ArmProcess::new(spec, seed.stream(arm as u64, Lane::Rewards))
    }
}
