//! Arm-selection rules.
//!
//! The UCB-family rules need every arm pulled once, so rounds `1..=K` pull
//! the arms in order. From round `K + 1` on, an index is computed per arm
//! and the lowest-indexed maximiser wins.

mod exp3;

pub use exp3::{default_exploration, default_learning_rate, Exp3};

use crate::env::Environment;
use crate::error::{BanditError, Result};
use crate::history::{weighted_mean, ArmHistory};
use crate::rng::{Lane, TrialSeed};
use crate::weights::{weights_for, WeightScheme};

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// Weighted mean plus `(C + 1)‖q‖√(2 ln t)`.
    WeightedUcb {
        c: f64,
    },
    /// Weighted mean plus the oracle discrepancy plus `‖q‖√(2 ln t)`.
    DiscUcb,
    /// `None` picks [`default_learning_rate`], [`default_exploration`] and
    /// the environment's reward span respectively.
    Exp3 {
        eta: Option<f64>,
        gamma: Option<f64>,
        reward_range: Option<(f64, f64)>,
    },
    Ucb1,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::WeightedUcb { .. } => "weighted_ucb",
            PolicyKind::DiscUcb => "disc_ucb",
            PolicyKind::Exp3 { .. } => "exp3",
            PolicyKind::Ucb1 => "ucb1",
        }
    }
}

/// Which weights each arm uses.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeChoice {
    /// The scheme matched to each arm's family.
    Auto,
    Fixed(WeightScheme),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub scheme: SchemeChoice,
    /// Window exponent used when `Auto` meets a drifting arm.
    pub drift_gamma: f64,
}

pub const DEFAULT_DRIFT_GAMMA: f64 = 1.5;

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            scheme: SchemeChoice::Auto,
            drift_gamma: DEFAULT_DRIFT_GAMMA,
        }
    }

    pub fn weighted_ucb(c: f64) -> Self {
        Self::new(PolicyKind::WeightedUcb { c })
    }

    pub fn exp3() -> Self {
        Self::new(PolicyKind::Exp3 {
            eta: None,
            gamma: None,
            reward_range: None,
        })
    }

    pub fn with_scheme(mut self, scheme: WeightScheme) -> Self {
        self.scheme = SchemeChoice::Fixed(scheme);
        self
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn schemes_for(&self, env: &Environment) -> Vec<WeightScheme> {
        env.arms()
            .iter()
            .map(|a| match &self.scheme {
                SchemeChoice::Auto => WeightScheme::matched_for(a.spec(), self.drift_gamma),
                SchemeChoice::Fixed(s) => s.clone(),
            })
            .collect()
    }
}

/// Ingredients of one arm's confidence index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmEstimate {
    pub mean: f64,
    pub norm2: f64,
    pub discrepancy: f64,
}

/// Round-robin initialisation: round `t ≤ K` pulls arm `t − 1`.
pub fn round_robin(t: u64, arms: usize) -> Option<usize> {
    (t >= 1 && t <= arms as u64).then(|| t as usize - 1)
}

fn confidence_width(t: u64) -> f64 {
    (2.0 * (t as f64).ln()).sqrt()
}

pub fn weighted_ucb_index(est: &ArmEstimate, c: f64, t: u64) -> f64 {
    est.mean + (c + 1.0) * est.norm2 * confidence_width(t)
}

pub fn disc_ucb_index(est: &ArmEstimate, t: u64) -> f64 {
    est.mean + est.discrepancy + est.norm2 * confidence_width(t)
}

/// First index attaining the maximum.
pub fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

fn require_pulled(histories: &[ArmHistory]) -> Result<()> {
    match histories.iter().find(|h| h.is_empty()) {
        Some(h) => Err(BanditError::Contract(format!(
            "arm {} reached index selection without a pull",
            h.arm()
        ))),
        None => Ok(()),
    }
}

/// Estimate for one arm; the discrepancy is filled from `env` when given.
pub fn estimate_arm(
    history: &ArmHistory,
    scheme: &WeightScheme,
    env: Option<&Environment>,
) -> Result<(ArmEstimate, crate::weights::Weights)> {
    let w = weights_for(scheme, history)?;
    let mean = weighted_mean(history, &w.q)?;
    let discrepancy = match env {
        Some(env) => env.discrepancy(history.arm(), &w.q)?,
        None => 0.0,
    };
    Ok((
        ArmEstimate {
            mean,
            norm2: w.q.norm2(),
            discrepancy,
        },
        w,
    ))
}

/// WeightedUCB choice at round `t`, computed from scratch.
pub fn weighted_ucb_select(
    c: f64,
    t: u64,
    histories: &[ArmHistory],
    schemes: &[WeightScheme],
) -> Result<usize> {
    require_pulled(histories)?;
    let indices = histories
        .iter()
        .zip(schemes)
        .map(|(h, s)| Ok(weighted_ucb_index(&estimate_arm(h, s, None)?.0, c, t)))
        .collect::<Result<Vec<f64>>>()?;
    argmax_lowest(indices).ok_or_else(|| BanditError::Contract("no arms".into()))
}

/// Disc-UCB choice at round `t`, with discrepancies from the environment oracle.
pub fn disc_ucb_select(
    t: u64,
    histories: &[ArmHistory],
    schemes: &[WeightScheme],
    env: &Environment,
) -> Result<usize> {
    require_pulled(histories)?;
    let indices = histories
        .iter()
        .zip(schemes)
        .map(|(h, s)| Ok(disc_ucb_index(&estimate_arm(h, s, Some(env))?.0, t)))
        .collect::<Result<Vec<f64>>>()?;
    argmax_lowest(indices).ok_or_else(|| BanditError::Contract("no arms".into()))
}

/// Classical UCB1: empirical mean plus `√(2 ln t / n)`.
pub fn ucb1_select(t: u64, histories: &[ArmHistory]) -> Result<usize> {
    require_pulled(histories)?;
    let lt = (t as f64).ln();
    argmax_lowest(histories.iter().map(|h| {
        let n = h.pull_count() as f64;
        h.rewards().sum::<f64>() / n + (2.0 * lt / n).sqrt()
    }))
    .ok_or_else(|| BanditError::Contract("no arms".into()))
}

/// Diagnostics gathered while a policy runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightAudit {
    /// Largest `‖q‖² T_i` seen in any constructed weight vector.
    pub max_concentration: f64,
    pub fallbacks: u64,
    pub exp3_clipped: u64,
}

#[derive(Debug, Clone)]
enum Engine {
    Index {
        schemes: Vec<WeightScheme>,
        estimates: Vec<Option<ArmEstimate>>,
    },
    Ucb1,
    Exp3(Box<Exp3>),
}

/// A running policy for one trial.
///
/// Index policies cache each arm's estimate and refresh only the arm that
/// was just pulled: every scheme and every discrepancy depends on that arm's
/// own history alone.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    arms: usize,
    engine: Engine,
    audit: WeightAudit,
}

impl Policy {
    pub fn new(
        spec: &PolicySpec,
        env: &Environment,
        horizon: u64,
        seed: TrialSeed,
    ) -> Result<Self> {
        let arms = env.num_arms();
        let engine = match &spec.kind {
            PolicyKind::WeightedUcb { c } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(BanditError::Config(format!(
                        "WeightedUCB constant C must be >= 0, got {c}"
                    )));
                }
                Self::index_engine(spec, env)?
            }
            PolicyKind::DiscUcb => Self::index_engine(spec, env)?,
            PolicyKind::Ucb1 => Engine::Ucb1,
            PolicyKind::Exp3 {
                eta,
                gamma,
                reward_range,
            } => {
                let eta = eta.unwrap_or_else(|| default_learning_rate(arms, horizon));
                let gamma = gamma.unwrap_or_else(|| default_exploration(arms, eta));
                let range = reward_range.unwrap_or_else(|| env.reward_range());
                let rng = seed.stream(0, Lane::Policy);
                Engine::Exp3(Box::new(Exp3::new(arms, eta, gamma, range, rng)?))
            }
        };
        Ok(Self {
            kind: spec.kind.clone(),
            arms,
            engine,
            audit: WeightAudit::default(),
        })
    }

    fn index_engine(spec: &PolicySpec, env: &Environment) -> Result<Engine> {
        let schemes = spec.schemes_for(env);
        for s in &schemes {
            s.validate()?;
        }
        Ok(Engine::Index {
            estimates: vec![None; schemes.len()],
            schemes,
        })
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn audit(&self) -> WeightAudit {
        let mut a = self.audit;
        if let Engine::Exp3(e) = &self.engine {
            a.exp3_clipped = e.clipped();
        }
        a
    }

    pub fn exp3(&self) -> Option<&Exp3> {
        match &self.engine {
            Engine::Exp3(e) => Some(e),
            _ => None,
        }
    }

    /// Chooses the arm for round `t` (1-based).
    pub fn select(&mut self, t: u64, histories: &[ArmHistory]) -> Result<usize> {
        if let Engine::Exp3(e) = &mut self.engine {
            return Ok(e.select());
        }
        if let Some(arm) = round_robin(t, self.arms) {
            return Ok(arm);
        }
        match &self.engine {
            Engine::Ucb1 => ucb1_select(t, histories),
            Engine::Index { estimates, .. } => {
                let indices = estimates
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let e = e.as_ref().ok_or_else(|| {
                            BanditError::Contract(format!(
                                "arm {i} reached index selection without a pull"
                            ))
                        })?;
                        Ok(match self.kind {
                            PolicyKind::WeightedUcb { c } => weighted_ucb_index(e, c, t),
                            _ => disc_ucb_index(e, t),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                argmax_lowest(indices).ok_or_else(|| BanditError::Contract("no arms".into()))
            }
            Engine::Exp3(_) => unreachable!(),
        }
    }

    /// Feeds back the reward of `arm`, whose history already includes it.
    pub fn observe(
        &mut self,
        arm: usize,
        reward: f64,
        histories: &[ArmHistory],
        env: &Environment,
    ) -> Result<()> {
        match &mut self.engine {
            Engine::Exp3(e) => e.update(arm, reward),
            Engine::Ucb1 => Ok(()),
            Engine::Index { schemes, estimates } => {
                let oracle = matches!(self.kind, PolicyKind::DiscUcb).then_some(env);
                let (est, w) = estimate_arm(&histories[arm], &schemes[arm], oracle)?;
                estimates[arm] = Some(est);
                self.audit.max_concentration =
                    self.audit.max_concentration.max(w.q.concentration());
                if w.fell_back {
                    self.audit.fallbacks += 1;
                }
                Ok(())
            }
        }
    }
}
