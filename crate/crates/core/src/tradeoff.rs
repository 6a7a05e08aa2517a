//! Choice of the compression level `k` for a given backlog and energy budget,
//! plus numerical checks of when combining retransmissions pays off.
//!
//! Every search here is exhaustive over the integer levels `0..=m/q`.
//! Ties in expected distortion go to the smaller `k`, which is both the
//! stronger channel code and (for `1 <= k < m`) the cheaper compression.

use serde::Serialize;

use crate::channel::outage_probability;
use crate::error::{check_range, Error, Result};
use crate::model::SystemModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub k_star: u32,
    /// Unconstrained distortion minimizer for this backlog.
    pub k_rate: u32,
    /// Largest affordable level, `None` when even idling is over budget.
    pub k_energy: Option<u32>,
    pub expected_distortion: f64,
    /// Quanta the operating point draws; never above the budget.
    pub energy_cost: u32,
    pub forced_idle: bool,
}

fn expected(model: &SystemModel, q: u32, k: u32) -> f64 {
    model
        .distortion
        .expected_receiver_distortion(model.snr(), q, k)
        .expect("level within 0..=m/q")
}

fn slot_cost(model: &SystemModel, q: u32, k: u32) -> u32 {
    model.energy.slot_energy(q, k).expect("level within 0..=m/q")
}

/// `k*_{q,R}`: minimizer of the expected receiver distortion ignoring energy.
pub fn optimal_k_rate(model: &SystemModel, q: u32) -> u32 {
    let q = q.max(1);
    let mut best = (0, expected(model, q, 0));
    for k in 1..=model.distortion.max_level(q) {
        let v = expected(model, q, k);
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// `k*_{q,E}(u)`: largest level whose slot cost fits in `u`.
///
/// The affordable set need not be an interval (raw blocks skip processing),
/// so every level is checked.
pub fn max_k_energy(model: &SystemModel, q: u32, u: u32) -> Option<u32> {
    let q = q.max(1);
    (0..=model.distortion.max_level(q))
        .rev()
        .find(|&k| slot_cost(model, q, k) <= u)
}

pub fn min_energy_for_k(model: &SystemModel, q: u32, k: u32) -> Result<u32> {
    model.energy.slot_energy(q, k)
}

/// Energy the greedy baseline caps itself at: the cost of `k*_{q,R}`.
pub fn greedy_budget(model: &SystemModel, q: u32) -> u32 {
    slot_cost(model, q, optimal_k_rate(model, q))
}

/// Best operating point for backlog `q` under budget `u`.
pub fn choose_k(model: &SystemModel, q: u32, u: u32) -> OperatingPoint {
    let q = q.max(1);
    let levels = model.distortion.max_level(q);
    let values: Vec<f64> = (0..=levels).map(|k| expected(model, q, k)).collect();
    let costs: Vec<u32> = (0..=levels).map(|k| slot_cost(model, q, k)).collect();
    select(q, u, &values, &costs, model.d_floor())
}

fn select(q: u32, u: u32, values: &[f64], costs: &[u32], d_floor: f64) -> OperatingPoint {
    let mut k_rate = 0;
    for k in 1..values.len() {
        if values[k] < values[k_rate] {
            k_rate = k;
        }
    }
    let k_energy = (0..costs.len()).rev().find(|&k| costs[k] <= u);
    let Some(k_energy) = k_energy else {
        return OperatingPoint {
            k_star: 0,
            k_rate: k_rate as u32,
            k_energy: None,
            expected_distortion: q as f64 * d_floor,
            energy_cost: u,
            forced_idle: true,
        };
    };
    let mut best: Option<usize> = None;
    for k in 0..values.len() {
        if costs[k] > u {
            continue;
        }
        match best {
            Some(b) if values[k] >= values[b] => {}
            _ => best = Some(k),
        }
    }
    let k_star = best.expect("k_energy is affordable");
    OperatingPoint {
        k_star: k_star as u32,
        k_rate: k_rate as u32,
        k_energy: Some(k_energy as u32),
        expected_distortion: values[k_star],
        energy_cost: costs[k_star],
        forced_idle: false,
    }
}

/// Operating points for every `(q, u)` with `q <= r` and `u <= B`, built once.
#[derive(Debug, Clone)]
pub struct OperatingTable {
    capacity: u32,
    max_attempts: u32,
    points: Vec<OperatingPoint>,
}

impl OperatingTable {
    pub fn build(model: &SystemModel) -> Self {
        let capacity = model.battery_capacity();
        let r = model.max_attempts;
        let mut points = Vec::with_capacity((r * (capacity + 1)) as usize);
        for q in 1..=r {
            let levels = model.distortion.max_level(q);
            let values: Vec<f64> = (0..=levels).map(|k| expected(model, q, k)).collect();
            let costs: Vec<u32> = (0..=levels).map(|k| slot_cost(model, q, k)).collect();
            for u in 0..=capacity {
                points.push(select(q, u, &values, &costs, model.d_floor()));
            }
        }
        Self {
            capacity,
            max_attempts: r,
            points,
        }
    }

    pub fn get(&self, q: u32, u: u32) -> &OperatingPoint {
        debug_assert!(q >= 1 && q <= self.max_attempts && u <= self.capacity);
        &self.points[((q - 1) * (self.capacity + 1) + u) as usize]
    }
}

/// Number of local minima of `E[Delta_q(k)]` over `k in 1..=m/q`.
pub fn local_minima(model: &SystemModel, q: u32) -> usize {
    let levels = model.distortion.max_level(q);
    if levels == 0 {
        return 0;
    }
    let v: Vec<f64> = (1..=levels).map(|k| expected(model, q, k)).collect();
    let mut count = 0;
    let mut i = 0;
    while i < v.len() {
        // collapse plateaus
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let left_higher = i == 0 || v[i - 1] > v[i];
        let right_higher = j + 1 == v.len() || v[j + 1] > v[j];
        if left_higher && right_higher {
            count += 1;
        }
        i = j + 1;
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombiningReport {
    pub r: u32,
    pub k_single: u32,
    pub k_combined: u32,
    /// `r * k*_r >= k*_1`.
    pub k_ratio_ok: bool,
    /// `r D(k*_r) <= (r-1) D_fl + D(k*_1)`.
    pub distortion_gain_ok: bool,
    pub combined_distortion: f64,
    pub single_distortion: f64,
}

/// Checks, with energy ignored, that combining up to `r` attempts never
/// loses to single transmissions.
pub fn verify_combining_gain(model: &SystemModel, r: u32) -> Result<CombiningReport> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "retransmission check needs r >= 2, got {r}"
        )));
    }
    let k1 = optimal_k_rate(model, 1);
    let kr = optimal_k_rate(model, r);
    if kr == 0 {
        return Err(Error::DegenerateConfig(format!(
            "k*_{{{r},R}} = 0: every combined packet is discarded"
        )));
    }
    let d = &model.distortion;
    let combined = r as f64 * d.source_distortion(kr)?;
    let single = (r as f64 - 1.0) * d.d_floor + d.source_distortion(k1)?;
    Ok(CombiningReport {
        r,
        k_single: k1,
        k_combined: kr,
        k_ratio_ok: r * kr >= k1,
        distortion_gain_ok: combined <= single,
        combined_distortion: combined,
        single_distortion: single,
    })
}

/// Real-valued level `k_V` where `D(k_V)` equals the per-block distortion of
/// the `r - 1` case after `r - 1` failures and one success.
pub fn k_threshold(model: &SystemModel, r: u32) -> Result<f64> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!("k_V needs r >= 2, got {r}")));
    }
    let k_prev = optimal_k_rate(model, r - 1);
    if k_prev == 0 {
        return Err(Error::DegenerateConfig(format!(
            "k*_{{{},R}} = 0, threshold undefined",
            r - 1
        )));
    }
    let d = &model.distortion;
    let weight = (r as f64 - 1.0) / r as f64;
    Ok(threshold_level(d.a, d.b, d.m, d.d_floor, k_prev as f64, weight))
}

pub(crate) fn threshold_level(a: f64, b: f64, m: u32, d_floor: f64, k_prev: f64, weight: f64) -> f64 {
    let inner = weight * k_prev.powf(-a) + (1.0 - weight) * (b + d_floor) / (b * (m as f64).powf(a));
    inner.powf(-1.0 / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preference {
    /// Allowing `r` attempts is better.
    ABetter,
    /// Stopping at `r - 1` attempts is better.
    BBetter,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RComparison {
    pub r: u32,
    pub k_r: u32,
    pub k_prev: u32,
    pub d_a: f64,
    pub d_b: f64,
    pub preference: Preference,
}

/// Compares `r` against `r - 1` attempts over the one outcome where they
/// differ: a success after `r - 1` failures.
pub fn compare_r_levels(model: &SystemModel, r: u32) -> Result<RComparison> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "comparison needs r >= 2, got {r}"
        )));
    }
    let d = &model.distortion;
    let k_r = optimal_k_rate(model, r);
    let k_prev = optimal_k_rate(model, r - 1);
    let d_a = r as f64 * d.source_distortion(k_r)?;
    let d_b = (r as f64 - 1.0) * d.source_distortion(k_prev)? + d.d_floor;
    let tol = 1e-12 * d_a.abs().max(d_b.abs());
    let preference = if (d_a - d_b).abs() <= tol {
        Preference::Equal
    } else if d_a < d_b {
        Preference::ABetter
    } else {
        Preference::BBetter
    };
    Ok(RComparison {
        r,
        k_r,
        k_prev,
        d_a,
        d_b,
        preference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub q: u32,
    pub k: u32,
    pub expected_distortion: f64,
    pub outage_prob: f64,
    pub source_distortion: f64,
    pub energy_cost: u32,
}

/// Every `(q, k)` pair for `q <= r`, in `q`-major order.
pub fn tradeoff_rows(model: &SystemModel) -> Result<Vec<TradeoffRow>> {
    let d = &model.distortion;
    let mut rows = Vec::new();
    for q in 1..=model.max_attempts {
        for k in 0..=d.max_level(q) {
            let outage = if k == 0 {
                1.0
            } else {
                outage_probability(d.coding_rate(q, k), model.snr())?
            };
            rows.push(TradeoffRow {
                q,
                k,
                expected_distortion: d.expected_receiver_distortion(model.snr(), q, k)?,
                outage_prob: outage,
                source_distortion: d.source_distortion(k)?,
                energy_cost: model.energy.slot_energy(q, k)?,
            });
        }
    }
    check_range("rows", rows.len() as i64, 1, i64::MAX)?;
    Ok(rows)
}
