//! Line-oriented experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! family = periodic
//! K = 150
//! T = 5000
//! trials = 10
//! policy = weighted_ucb
//! seed = 7
//!
//! [periodic]
//! period_length = 50
//! ```
//!
//! Global keys: `family`, `K`, `T`, `trials` (default 1), `policy`, `seed`
//! (default 0), `scheme` (default `auto`), `C`, `eta`, `exploration`,
//! `reward_lo`, `reward_hi`, `gamma`, `output`. `gamma` is the window
//! exponent for drifting arms; `exploration` is EXP3's uniform share.
//! Each family may have a section of the same name with its generator
//! parameters; `[mixed]` lists the component families in
//! `families = a, b, ...`.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::engine::ExperimentSpec;
use crate::env::{EnvSpec, Family, TREND_PANEL_TABLE};
use crate::policy::{PolicyKind, PolicySpec, DEFAULT_DRIFT_GAMMA};
use crate::rng::TrialSeed;
use crate::weights::WeightScheme;

/// A problem found in a config, with the 1-based line it refers to. Line 0
/// marks problems with the file as a whole, such as a missing key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            0 => write!(f, "config: {}", self.message),
            n => write!(f, "line {n}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every error found in one config, in line order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub policy: PolicySpec,
    pub trials: u64,
    pub root_seed: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn horizon(&self) -> u64 {
        self.env.horizon
    }

    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            env: self.env.clone(),
            policy: self.policy.clone(),
            horizon: self.env.horizon,
            trials: self.trials,
            root_seed: self.root_seed,
        }
    }

    /// Weight scheme each arm of trial 0 would use.
    pub fn resolved_schemes(&self) -> crate::Result<Vec<WeightScheme>> {
        let env = self.env.build(TrialSeed::new(self.root_seed, 0))?;
        Ok(self.policy.schemes_for(&env))
    }
}

const GLOBAL_KEYS: [&str; 14] = [
    "family",
    "K",
    "T",
    "trials",
    "policy",
    "seed",
    "scheme",
    "C",
    "eta",
    "exploration",
    "reward_lo",
    "reward_hi",
    "gamma",
    "output",
];

const FAMILIES: [&str; 8] = [
    "iid",
    "rarely_changing",
    "rotting",
    "drifting",
    "known_trend",
    "periodic",
    "markov",
    "mixed",
];

fn section_keys(section: &str) -> &'static [&'static str] {
    match section {
        "rarely_changing" => &["max_changes", "sigma"],
        "rotting" => &["theta_min", "theta_span"],
        "known_trend" => &["trend", "sigma"],
        "periodic" => &["period_length", "sigma"],
        "markov" => &["states"],
        "mixed" => &["families"],
        _ => &[],
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug, Default)]
struct Table {
    /// Line of the section header; 0 for the global table.
    header: usize,
    entries: HashMap<String, Entry>,
}

struct Parser {
    errors: Vec<ConfigError>,
}

impl Parser {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn parse<T: std::str::FromStr>(&mut self, table: &Table, key: &str, what: &str) -> Option<T> {
        let e = table.entries.get(key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(e.line, format!("{key} = {:?} is not {what}", e.value));
                None
            }
        }
    }

    fn real(&mut self, table: &Table, key: &str) -> Option<f64> {
        let v: f64 = self.parse(table, key, "a number")?;
        if v.is_finite() {
            Some(v)
        } else {
            self.err(table.entries[key].line, format!("{key} must be finite"));
            None
        }
    }

    fn list(&mut self, table: &Table, key: &str) -> Option<Vec<f64>> {
        let e = table.entries.get(key)?;
        let parsed: Result<Vec<f64>, _> = e.value.split(',').map(|s| s.trim().parse()).collect();
        match parsed {
            Ok(v) if !v.is_empty() && v.iter().all(|x: &f64| x.is_finite()) => Some(v),
            _ => {
                self.err(
                    e.line,
                    format!("{key} = {:?} is not a list of numbers", e.value),
                );
                None
            }
        }
    }
}

fn split_tables(text: &str, p: &mut Parser) -> (Table, Vec<(String, Table)>) {
    let mut global = Table::default();
    let mut sections: Vec<(String, Table)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                p.err(line, format!("malformed section header {content:?}"));
                continue;
            };
            let name = name.trim().to_string();
            if !FAMILIES.contains(&name.as_str()) {
                p.err(line, format!("unknown section [{name}]"));
            } else if sections.iter().any(|(n, _)| *n == name) {
                p.err(line, format!("duplicate section [{name}]"));
            }
            sections.push((
                name,
                Table {
                    header: line,
                    entries: HashMap::new(),
                },
            ));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            p.err(line, format!("expected key = value, got {content:?}"));
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let (allowed, table): (&[&str], &mut Table) = match sections.last_mut() {
            Some((name, t)) => (section_keys(name), t),
            None => (&GLOBAL_KEYS, &mut global),
        };
        if !allowed.contains(&key.as_str()) {
            p.err(line, format!("unknown key {key:?}"));
            continue;
        }
        if let Some(prev) = table.entries.get(&key) {
            p.err(
                line,
                format!("duplicate key {key:?} (first set on line {})", prev.line),
            );
            continue;
        }
        table.entries.insert(key, Entry { line, value });
    }
    (global, sections)
}

fn build_family(
    name: &str,
    line: usize,
    sections: &[(String, Table)],
    p: &mut Parser,
    nested: bool,
) -> Option<Family> {
    let empty = Table {
        header: line,
        entries: HashMap::new(),
    };
    let table = sections
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, t)| t)
        .unwrap_or(&empty);
    let positive = |p: &mut Parser, key: &str, v: Option<f64>, default: f64| match v {
        Some(x) if x > 0.0 => Some(x),
        Some(_) => {
            p.err(table.entries[key].line, format!("{key} must be > 0"));
            None
        }
        None => Some(default),
    };
    let family = match name {
        "iid" => Family::Iid,
        "drifting" => Family::Drifting,
        "rarely_changing" => {
            let d = Family::default_rarely_changing();
            let Family::RarelyChanging { max_changes, sigma } = d else {
                unreachable!()
            };
            let changes = p.parse(table, "max_changes", "a non-negative integer");
            let s = p.real(table, "sigma");
            let sigma = match s {
                Some(x) if x < 0.0 => {
                    p.err(table.entries["sigma"].line, "sigma must be >= 0");
                    return None;
                }
                Some(x) => x,
                None => sigma,
            };
            Family::RarelyChanging {
                max_changes: changes.unwrap_or(max_changes),
                sigma,
            }
        }
        "rotting" => {
            let theta_min = p.real(table, "theta_min");
            let theta_span = p.real(table, "theta_span");
            let theta_min = positive(p, "theta_min", theta_min, 0.1)?;
            let theta_span = match theta_span {
                Some(x) if x < 0.0 => {
                    p.err(table.entries["theta_span"].line, "theta_span must be >= 0");
                    return None;
                }
                Some(x) => x,
                None => 10.0,
            };
            Family::Rotting {
                theta_min,
                theta_span,
            }
        }
        "known_trend" => {
            let trend = p.list(table, "trend");
            let sigma = p.real(table, "sigma");
            Family::KnownTrend {
                trend: trend.unwrap_or_else(|| TREND_PANEL_TABLE.to_vec()),
                sigma: positive(p, "sigma", sigma, 0.3)?,
            }
        }
        "periodic" => {
            let sigma = p.real(table, "sigma");
            let sigma = positive(p, "sigma", sigma, 0.3)?;
            let Some(period_length) = p.parse::<u64>(table, "period_length", "a positive integer")
            else {
                if !table.entries.contains_key("period_length") {
                    p.err(table.header, "family periodic requires period_length");
                }
                return None;
            };
            if period_length == 0 {
                p.err(
                    table.entries["period_length"].line,
                    "period_length must be >= 1",
                );
                return None;
            }
            Family::Periodic {
                period_length,
                sigma,
            }
        }
        "markov" => {
            let states = p
                .parse::<usize>(table, "states", "a positive integer")
                .unwrap_or(3);
            if states == 0 {
                p.err(table.entries["states"].line, "states must be >= 1");
                return None;
            }
            Family::Markov { states }
        }
        "mixed" => {
            if nested {
                p.err(line, "mixed cannot contain mixed");
                return None;
            }
            let Some(e) = table.entries.get("families") else {
                p.err(table.header, "family mixed requires families");
                return None;
            };
            let names: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
            let mut out = Vec::new();
            for n in &names {
                if !FAMILIES.contains(&n.as_str()) {
                    p.err(e.line, format!("unknown family {n:?}"));
                    continue;
                }
                out.push(build_family(n, e.line, sections, p, true)?);
            }
            if out.len() != names.len() {
                return None;
            }
            Family::Mixed(out)
        }
        other => {
            p.err(line, format!("unknown family {other:?}"));
            return None;
        }
    };
    Some(family)
}

fn uses_family(family: &Family, name: &str) -> bool {
    match family {
        Family::Mixed(fs) => name == "mixed" || fs.iter().any(|f| f.name() == name),
        f => f.name() == name,
    }
}

/// Parses and validates a config, collecting every error it can find.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut p = Parser { errors: Vec::new() };
    let (global, sections) = split_tables(text, &mut p);
    let line_of = |key: &str| global.entries.get(key).map_or(0, |e| e.line);

    let required = |key: &str, p: &mut Parser| {
        if !global.entries.contains_key(key) {
            p.err(0, format!("missing required key {key:?}"));
        }
    };
    for key in ["family", "K", "T", "policy"] {
        required(key, &mut p);
    }

    let arms: Option<usize> = p.parse(&global, "K", "a positive integer");
    let horizon: Option<u64> = p.parse(&global, "T", "a positive integer");
    let trials: u64 = p
        .parse(&global, "trials", "a positive integer")
        .unwrap_or(1);
    let root_seed: u64 = p
        .parse(&global, "seed", "a non-negative integer")
        .unwrap_or(0);
    if arms == Some(0) {
        p.err(line_of("K"), "K must be >= 1");
    }
    if trials == 0 {
        p.err(line_of("trials"), "trials must be >= 1");
    }
    if let (Some(k), Some(t)) = (arms, horizon) {
        if t < k as u64 {
            p.err(line_of("T"), format!("T = {t} must be at least K = {k}"));
        }
    }

    let family = global
        .entries
        .get("family")
        .and_then(|e| build_family(&e.value, e.line, &sections, &mut p, false));
    if let Some(f) = &family {
        for (name, t) in &sections {
            if FAMILIES.contains(&name.as_str()) && !uses_family(f, name) {
                p.err(
                    t.header,
                    format!("section [{name}] does not apply to family {}", f.name()),
                );
            }
        }
    }

    let c = p.real(&global, "C");
    let eta = p.real(&global, "eta");
    let exploration = p.real(&global, "exploration");
    let lo = p.real(&global, "reward_lo");
    let hi = p.real(&global, "reward_hi");
    let gamma = p.real(&global, "gamma");
    let policy_name = global.entries.get("policy").map(|e| e.value.clone());
    let kind = match policy_name.as_deref() {
        Some("weighted_ucb") => {
            let c = c.unwrap_or(0.0);
            if c < 0.0 {
                p.err(line_of("C"), format!("C must be >= 0, got {c}"));
            }
            Some(PolicyKind::WeightedUcb { c })
        }
        Some("disc_ucb") => Some(PolicyKind::DiscUcb),
        Some("ucb1") => Some(PolicyKind::Ucb1),
        Some("exp3") => {
            if let Some(e) = eta.filter(|e| *e <= 0.0) {
                p.err(line_of("eta"), format!("eta must be > 0, got {e}"));
            }
            let reward_range = match (lo, hi) {
                (Some(lo), Some(hi)) if lo < hi => Some((lo, hi)),
                (Some(lo), Some(hi)) => {
                    p.err(
                        line_of("reward_hi"),
                        format!("reward_lo = {lo} must be below reward_hi = {hi}"),
                    );
                    None
                }
                (None, None) => None,
                _ => {
                    let line = line_of("reward_lo").max(line_of("reward_hi"));
                    p.err(line, "reward_lo and reward_hi must be given together");
                    None
                }
            };
            if let Some(g) = exploration.filter(|g| !(0.0..=1.0).contains(g)) {
                p.err(
                    line_of("exploration"),
                    format!("exploration must lie in [0, 1], got {g}"),
                );
            }
            Some(PolicyKind::Exp3 {
                eta,
                gamma: exploration,
                reward_range,
            })
        }
        Some(other) => {
            p.err(
                line_of("policy"),
                format!("unknown policy {other:?}; expected weighted_ucb, disc_ucb, exp3 or ucb1"),
            );
            None
        }
        None => None,
    };
    if let Some(k) = &kind {
        let misplaced: &[&str] = match k {
            PolicyKind::WeightedUcb { .. } => &["eta", "exploration", "reward_lo", "reward_hi"],
            PolicyKind::Exp3 { .. } => &["C", "gamma", "scheme"],
            PolicyKind::DiscUcb => &["C", "eta", "exploration", "reward_lo", "reward_hi"],
            PolicyKind::Ucb1 => &[
                "C",
                "eta",
                "exploration",
                "reward_lo",
                "reward_hi",
                "gamma",
                "scheme",
            ],
        };
        for key in misplaced {
            if global.entries.contains_key(*key) {
                p.err(
                    line_of(key),
                    format!("{key} does not apply to policy {}", k.name()),
                );
            }
        }
    }

    let drift_gamma = match gamma {
        Some(g) if g <= 0.0 => {
            p.err(line_of("gamma"), format!("gamma must be > 0, got {g}"));
            DEFAULT_DRIFT_GAMMA
        }
        Some(g) => g,
        None => DEFAULT_DRIFT_GAMMA,
    };
    let scheme = match global.entries.get("scheme").map(|e| e.value.as_str()) {
        None | Some("auto") => None,
        Some("uniform") => Some(WeightScheme::Uniform),
        Some("recent_window") => Some(WeightScheme::RecentWindow { gamma: drift_gamma }),
        Some(s @ ("since_change" | "state_matched" | "phase_matched" | "trend_matched")) => {
            // Family-specific schemes carry per-arm metadata, so they are only
            // accepted where they coincide with the automatic choice.
            let fits = matches!(
                (s, family.as_ref()),
                ("since_change", Some(Family::RarelyChanging { .. }))
                    | ("state_matched", Some(Family::Markov { .. }))
                    | ("phase_matched", Some(Family::Periodic { .. }))
                    | ("trend_matched", Some(Family::KnownTrend { .. }))
            );
            if !fits && family.is_some() {
                p.err(
                    line_of("scheme"),
                    format!(
                        "scheme {s} does not fit family {}",
                        family.as_ref().map_or("?", |f| f.name())
                    ),
                );
            }
            None
        }
        Some(other) => {
            p.err(line_of("scheme"), format!("unknown scheme {other:?}"));
            None
        }
    };

    let output = global
        .entries
        .get("output")
        .map(|e| PathBuf::from(&e.value));

    if !p.errors.is_empty() {
        p.errors.sort_by_key(|e| e.line);
        return Err(ConfigErrors(p.errors));
    }
    let (Some(family), Some(arms), Some(horizon), Some(kind)) = (family, arms, horizon, kind)
    else {
        unreachable!("missing values were reported as errors")
    };
    let mut policy = PolicySpec::new(kind);
    policy.drift_gamma = drift_gamma;
    if let Some(s) = scheme {
        policy = policy.with_scheme(s);
    }
    Ok(ExperimentConfig {
        env: EnvSpec::new(family, arms, horizon),
        policy,
        trials,
        root_seed,
        output,
    })
}
