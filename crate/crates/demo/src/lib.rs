//! Browser bindings: each export runs a small simulation and returns JSON
//! for the page in `www/` to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rested_bandits::engine::{concentration_check, ExecMode};
use rested_bandits::env::{ArmProcess, ArmSpec, Noise};
use rested_bandits::history::WeightVector;
use rested_bandits::panel::{run_panel, Panel, PanelOptions};
use rested_bandits::rng::{derive_stream, Lane};
use rested_bandits::weights::WeightScheme;

const MAX_POINTS: usize = 250;

#[derive(Serialize)]
struct Curve {
    label: String,
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize)]
struct PanelCurves {
    panel: String,
    t: Vec<u64>,
    curves: Vec<Curve>,
}

#[derive(Serialize)]
struct Series {
    label: String,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn to_js(err: impl std::fmt::Display) -> JsError {
    JsError::new(&err.to_string())
}

/// Rounds kept when thinning a curve of `n` points to at most `MAX_POINTS`.
fn sample_rounds(n: usize) -> Vec<usize> {
    let step = n.div_ceil(MAX_POINTS).max(1);
    let mut idx: Vec<usize> = (step - 1..n).step_by(step).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

/// Average reward per round for WeightedUCB and EXP3 on one panel.
pub fn panel_curves_json(
    panel: &str,
    arms: usize,
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Result<String, String> {
    let panel: Panel = panel.parse().map_err(|e| format!("{e}"))?;
    let opts = PanelOptions {
        arms,
        horizon,
        trials,
        root_seed: seed,
        mode: ExecMode::Serial,
    };
    let runs = run_panel(panel, &opts).map_err(|e| e.to_string())?;
    let idx = sample_rounds(horizon as usize);
    let curves = runs
        .iter()
        .map(|r| {
            let a = &r.experiment.aggregate;
            Curve {
                label: r.policy.to_string(),
                mean: idx.iter().map(|&i| a.mean_avg_reward[i]).collect(),
                std: idx.iter().map(|&i| a.std_avg_reward[i]).collect(),
            }
        })
        .collect();
    let out = PanelCurves {
        panel: panel.name().to_string(),
        t: idx.iter().map(|&i| i as u64 + 1).collect(),
        curves,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Discrepancy of uniform weights on a rotting arm after `k = 1..=pulls`
/// pulls, one series per decay exponent.
pub fn rotting_discrepancy_json(thetas: &[f64], pulls: u64) -> Result<String, String> {
    let series = thetas
        .iter()
        .map(|&theta| {
            let spec = ArmSpec::Rotting {
                theta,
                baseline: 0.0,
                noise: Noise::Bernoulli,
            };
            let mut arm = ArmProcess::new(spec, derive_stream(0, 0, 0, Lane::Rewards))
                .map_err(|e| e.to_string())?;
            let mut y = Vec::with_capacity(pulls as usize);
            for k in 1..=pulls as usize {
                arm.pull();
                let q = WeightVector::uniform(k).expect("k >= 1");
                y.push(arm.discrepancy(&q).map_err(|e| e.to_string())?);
            }
            Ok(Series {
                label: format!("theta = {theta}"),
                x: (1..=pulls).map(|k| k as f64).collect(),
                y,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&series).map_err(|e| e.to_string())
}

/// Empirical violation rate of the weighted concentration bound against
/// `δ`, for a Bernoulli(0.5) arm with uniform weights.
pub fn concentration_json(pulls: usize, replicates: u64, seed: u64) -> Result<String, String> {
    let arm = ArmSpec::Iid {
        mean: 0.5,
        noise: Noise::Bernoulli,
    };
    let deltas = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &d in &deltas {
        let r = concentration_check(&arm, &WeightScheme::Uniform, pulls, d, replicates, seed)
            .map_err(|e| e.to_string())?;
        upper.push(r.upper_rate);
        lower.push(r.lower_rate);
    }
    let x = deltas.to_vec();
    let series = vec![
        Series {
            label: "bound: rate = delta".into(),
            x: x.clone(),
            y: x.clone(),
        },
        Series {
            label: "upper side".into(),
            x: x.clone(),
            y: upper,
        },
        Series {
            label: "lower side".into(),
            x,
            y: lower,
        },
    ];
    serde_json::to_string(&series).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn panel_curves(
    panel: &str,
    arms: usize,
    horizon: u32,
    trials: u32,
    seed: u32,
) -> Result<String, JsError> {
    panel_curves_json(panel, arms, horizon.into(), trials.into(), seed.into()).map_err(to_js)
}

#[wasm_bindgen]
pub fn rotting_discrepancy(thetas: Vec<f64>, pulls: u32) -> Result<String, JsError> {
    rotting_discrepancy_json(&thetas, pulls.into()).map_err(to_js)
}

#[wasm_bindgen]
pub fn concentration(pulls: u32, replicates: u32, seed: u32) -> Result<String, JsError> {
    concentration_json(pulls as usize, replicates.into(), seed.into()).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_last_round() {
        assert_eq!(sample_rounds(5), vec![0, 1, 2, 3, 4]);
        let idx = sample_rounds(5000);
        assert!(idx.len() <= MAX_POINTS + 1);
        assert_eq!(idx.last(), Some(&4999));
    }

    #[test]
    fn panel_json_shape() {
        let json = panel_curves_json("iid", 5, 40, 2, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["curves"].as_array().unwrap().len(), 2);
        assert_eq!(v["t"].as_array().unwrap().len(), 40);
        assert!(panel_curves_json("nope", 5, 40, 2, 1).is_err());
        assert!(panel_curves_json("iid", 5, 3, 2, 1).is_err());
    }

    #[test]
    fn rotting_series_start_at_spot_value() {
        let json = rotting_discrepancy_json(&[1.0], 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let d2 = v[0]["y"][1].as_f64().unwrap();
        assert!((d2 + 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn concentration_rates_within_bound() {
        let json = concentration_json(50, 2000, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        for side in 1..3 {
            for (d, r) in v[0]["y"]
                .as_array()
                .unwrap()
                .iter()
                .zip(v[side]["y"].as_array().unwrap())
            {
                assert!(r.as_f64().unwrap() <= d.as_f64().unwrap() + 0.02);
            }
        }
    }
}
