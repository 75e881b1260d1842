//! The six benchmark panels: 150 arms, 5,000 rounds, 10 trials, each run
//! with WeightedUCB and EXP3.

use std::fmt;
use std::str::FromStr;

use crate::engine::{run_experiment, ExecMode, Experiment, ExperimentSpec};
use crate::env::{EnvSpec, Family};
use crate::error::{BanditError, Result};
use crate::policy::PolicySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Panel {
    Iid,
    RarelyChanging,
    Rotting,
    Drifting,
    KnownTrend,
    Periodic,
}

impl Panel {
    pub const ALL: [Panel; 6] = [
        Panel::Iid,
        Panel::RarelyChanging,
        Panel::Rotting,
        Panel::Drifting,
        Panel::KnownTrend,
        Panel::Periodic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Panel::Iid => "iid",
            Panel::RarelyChanging => "rarely_changing",
            Panel::Rotting => "rotting",
            Panel::Drifting => "drifting",
            Panel::KnownTrend => "known_trend",
            Panel::Periodic => "periodic",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Panel::Iid => Family::Iid,
            Panel::RarelyChanging => Family::default_rarely_changing(),
            Panel::Rotting => Family::default_rotting(),
            Panel::Drifting => Family::Drifting,
            Panel::KnownTrend => Family::default_trend(),
            Panel::Periodic => Family::default_periodic(),
        }
    }

    /// `"all"` expands to every panel.
    pub fn parse_selection(name: &str) -> Result<Vec<Panel>> {
        if name == "all" {
            Ok(Panel::ALL.to_vec())
        } else {
            Ok(vec![name.parse()?])
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Panel {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        Panel::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                BanditError::Config(format!(
                    "unknown panel {s:?}; expected one of iid, rarely_changing, rotting, drifting, known_trend, periodic, all"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelOptions {
    pub arms: usize,
    pub horizon: u64,
    pub trials: u64,
    pub root_seed: u64,
    pub mode: ExecMode,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self {
            arms: 150,
            horizon: 5000,
            trials: 10,
            root_seed: 0,
            mode: ExecMode::Parallel,
        }
    }
}

/// WeightedUCB with `C = 0` and matched weights, then EXP3 with defaults.
pub fn panel_policies() -> [PolicySpec; 2] {
    [PolicySpec::weighted_ucb(0.0), PolicySpec::exp3()]
}

pub fn panel_spec(panel: Panel, policy: PolicySpec, opts: &PanelOptions) -> ExperimentSpec {
    ExperimentSpec {
        env: EnvSpec::new(panel.family(), opts.arms, opts.horizon),
        policy,
        horizon: opts.horizon,
        trials: opts.trials,
        root_seed: opts.root_seed,
    }
}

#[derive(Debug, Clone)]
pub struct PanelRun {
    pub panel: Panel,
    pub policy: &'static str,
    pub experiment: Experiment,
}

/// Runs one panel under both policies. Both share the root seed, so they
/// face the same environments and reward streams.
pub fn run_panel(panel: Panel, opts: &PanelOptions) -> Result<Vec<PanelRun>> {
    panel_policies()
        .into_iter()
        .map(|policy| {
            let name = policy.name();
            let experiment = run_experiment(&panel_spec(panel, policy, opts), opts.mode)?;
            Ok(PanelRun {
                panel,
                policy: name,
                experiment,
            })
        })
        .collect()
}

/// Pooled standard deviation of two per-trial samples with `n` trials each.
pub fn pooled_std(std_a: f64, std_b: f64) -> f64 {
    ((std_a * std_a + std_b * std_b) / 2.0).sqrt()
}
