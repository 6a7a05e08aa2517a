//! Browser bindings. Every export takes plain numbers and returns JSON text.

use ehf_core::mdp::{evaluate_policy, greedy_policy, rvia_solve, Mdp};
use ehf_core::tradeoff::{tradeoff_rows, TradeoffRow};
use ehf_core::SystemConfig;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type ApiResult<T> = std::result::Result<T, String>;

fn config(params: &[(&str, f64)]) -> ApiResult<SystemConfig> {
    let mut cfg = SystemConfig::default();
    for &(name, value) in params {
        cfg.set_param(name, value).map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn json<T: Serialize>(value: &T) -> ApiResult<String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct Curve {
    pub snr_db: f64,
    pub rows: Vec<TradeoffRow>,
}

pub fn tradeoff_curve(distance: f64, max_attempts: u32) -> ApiResult<Curve> {
    let model = config(&[("d", distance), ("r", max_attempts as f64)])?
        .resolve()
        .map_err(|e| e.to_string())?;
    Ok(Curve {
        snr_db: 10.0 * model.snr().log10(),
        rows: tradeoff_rows(&model).map_err(|e| e.to_string())?,
    })
}

#[derive(Serialize)]
pub struct Solution {
    pub gain: f64,
    pub greedy_gain: f64,
    pub iterations: usize,
    pub capacity: u32,
    pub max_attempts: u32,
    /// `actions[x][q - 1][b]`
    pub actions: Vec<Vec<Vec<u32>>>,
}

pub fn solve_policy(
    distance: f64,
    battery_norm: f64,
    income_norm: f64,
    max_attempts: u32,
) -> ApiResult<Solution> {
    let model = config(&[
        ("d", distance),
        ("b_norm", battery_norm),
        ("mu_norm", income_norm),
        ("r", max_attempts as f64),
    ])?
    .resolve()
    .map_err(|e| e.to_string())?;
    let mdp = Mdp::build(&model).map_err(|e| e.to_string())?;
    let res = rvia_solve(&mdp, &Default::default()).map_err(|e| e.to_string())?;
    let greedy = evaluate_policy(&mdp, &greedy_policy(&model)).map_err(|e| e.to_string())?;
    let cap = model.battery_capacity();
    let r = model.max_attempts;
    let mut actions = vec![vec![vec![0; cap as usize + 1]; r as usize]; 2];
    for s in mdp.space().iter() {
        actions[s.x as usize][s.q as usize - 1][s.b as usize] = res.policy.action(s);
    }
    Ok(Solution {
        gain: res.gain,
        greedy_gain: greedy.gain,
        iterations: res.iterations,
        capacity: cap,
        max_attempts: r,
        actions,
    })
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub distance: f64,
    /// Optimal gain for `r = 1..=max_attempts`.
    pub optimal: Vec<f64>,
    pub greedy: f64,
}

pub fn sweep_distance(
    battery_norm: f64,
    income_norm: f64,
    max_attempts: u32,
    from: f64,
    to: f64,
    steps: u32,
) -> ApiResult<Vec<SweepPoint>> {
    if steps < 2 || !(from > 0.0 && to > from) {
        return Err("need 0 < from < to and at least two steps".into());
    }
    if max_attempts == 0 {
        return Err("max_attempts must be at least 1".into());
    }
    (0..steps)
        .map(|i| {
            let d = from + (to - from) * i as f64 / (steps - 1) as f64;
            let mut optimal = Vec::new();
            let mut greedy = 0.0;
            for r in 1..=max_attempts {
                let sol = solve_policy(d, battery_norm, income_norm, r)?;
                optimal.push(sol.gain);
                if r == max_attempts {
                    greedy = sol.greedy_gain;
                }
            }
            Ok(SweepPoint {
                distance: d,
                optimal,
                greedy,
            })
        })
        .collect()
}

/// Distortion/energy table for every `(q, k)` at the given distance.
#[wasm_bindgen]
pub fn tradeoff(distance: f64, max_attempts: u32) -> Result<String, JsError> {
    tradeoff_curve(distance, max_attempts)
        .and_then(|c| json(&c))
        .map_err(|e| JsError::new(&e))
}

/// Optimal policy and its gain, plus the greedy baseline.
#[wasm_bindgen]
pub fn solve(
    distance: f64,
    battery_norm: f64,
    income_norm: f64,
    max_attempts: u32,
) -> Result<String, JsError> {
    solve_policy(distance, battery_norm, income_norm, max_attempts)
        .and_then(|s| json(&s))
        .map_err(|e| JsError::new(&e))
}

/// Optimal gain per attempt limit, and greedy, over a distance grid.
#[wasm_bindgen]
pub fn sweep(
    battery_norm: f64,
    income_norm: f64,
    max_attempts: u32,
    from: f64,
    to: f64,
    steps: u32,
) -> Result<String, JsError> {
    sweep_distance(battery_norm, income_norm, max_attempts, from, to, steps)
        .and_then(|s| json(&s))
        .map_err(|e| JsError::new(&e))
}
