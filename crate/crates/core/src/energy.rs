//! Quantized energy accounting, the battery recursion and the two-state
//! harvesting source.
//!
//! All costs are integers in energy quanta. Physical costs are rounded up to
//! the next quantum so that a quantized budget never under-reports what the
//! hardware draws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Costs expressed directly in quanta.
///
/// Processing for `1 <= k <= m-1` costs `round(proc_scale * (proc_base + proc_slope * k / m))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibratedCosts {
    pub transmission: u32,
    /// Sensing + synchronization, paid every slot.
    pub circuitry_idle: u32,
    /// Extra circuitry drain while the radio is on.
    pub circuitry_active: u32,
    pub proc_scale: f64,
    pub proc_base: f64,
    pub proc_slope: f64,
}

impl Default for CalibratedCosts {
    fn default() -> Self {
        Self {
            transmission: 10,
            circuitry_idle: 2,
            circuitry_active: 2,
            proc_scale: 10.0,
            proc_base: 0.2,
            proc_slope: 0.8,
        }
    }
}

/// Datasheet-style costs in joules, watts and seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalCosts {
    /// Joules per CPU cycle.
    pub cpu_energy_per_cycle: f64,
    /// Cycles per input bit, slope in `k/m`.
    pub cycles_slope: f64,
    /// Cycles per input bit, offset.
    pub cycles_offset: f64,
    pub amp_efficiency: f64,
    pub slot_duration: f64,
    pub tx_power: f64,
    pub sense_energy: f64,
    pub sync_energy: f64,
    /// Circuit power while transmitting, W.
    pub circuit_power: f64,
    /// Joules per quantum.
    pub quantum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EnergyCosts {
    Calibrated(CalibratedCosts),
    Physical(PhysicalCosts),
}

impl Default for EnergyCosts {
    fn default() -> Self {
        EnergyCosts::Calibrated(CalibratedCosts::default())
    }
}

fn to_quanta(joules: f64, quantum: f64) -> u32 {
    // slack absorbs representation error on exact multiples
    (joules / quantum - 1e-9).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub costs: EnergyCosts,
    pub m: u32,
    pub block_bits: u32,
    /// Battery size `B` in quanta.
    pub battery_capacity: u32,
}

impl EnergyModel {
    pub fn new(costs: EnergyCosts, m: u32, block_bits: u32, battery_capacity: u32) -> Result<Self> {
        let model = Self {
            costs,
            m,
            block_bits,
            battery_capacity,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self.costs {
            EnergyCosts::Calibrated(c) => {
                for (name, v) in [
                    ("proc_scale", c.proc_scale),
                    ("proc_base", c.proc_base),
                    ("proc_slope", c.proc_slope),
                ] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "{name} must be nonnegative, got {v}"
                        )));
                    }
                }
            }
            EnergyCosts::Physical(p) => {
                for (name, v) in [
                    ("cpu_energy_per_cycle", p.cpu_energy_per_cycle),
                    ("cycles_slope", p.cycles_slope),
                    ("cycles_offset", p.cycles_offset),
                    ("slot_duration", p.slot_duration),
                    ("tx_power", p.tx_power),
                    ("sense_energy", p.sense_energy),
                    ("sync_energy", p.sync_energy),
                    ("circuit_power", p.circuit_power),
                ] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "{name} must be nonnegative, got {v}"
                        )));
                    }
                }
                if !(p.amp_efficiency > 0.0 && p.amp_efficiency <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "amp_efficiency must lie in (0, 1], got {}",
                        p.amp_efficiency
                    )));
                }
                if !(p.quantum > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "energy quantum must be positive, got {}",
                        p.quantum
                    )));
                }
            }
        }
        if self.m < 2 {
            return Err(Error::InvalidParameter("m must be at least 2".into()));
        }
        Ok(())
    }

    /// Compression cost; zero when discarding (`k = 0`) or sending raw (`k = m`).
    pub fn processing_energy(&self, k: u32) -> Result<u32> {
        check_range("compression level", k as i64, 0, self.m as i64)?;
        if k == 0 || k == self.m {
            return Ok(0);
        }
        let ratio = k as f64 / self.m as f64;
        Ok(match self.costs {
            EnergyCosts::Calibrated(c) => {
                (c.proc_scale * (c.proc_base + c.proc_slope * ratio)).round() as u32
            }
            EnergyCosts::Physical(p) => {
                let cycles_per_bit = p.cycles_slope * ratio + p.cycles_offset;
                to_quanta(
                    p.cpu_energy_per_cycle * self.block_bits as f64 * cycles_per_bit,
                    p.quantum,
                )
            }
        })
    }

    /// Radio energy for one slot in joules (physical profile only).
    pub fn transmission_energy_joules(&self) -> Option<f64> {
        match self.costs {
            EnergyCosts::Physical(p) => Some(p.slot_duration * p.tx_power / p.amp_efficiency),
            EnergyCosts::Calibrated(_) => None,
        }
    }

    pub fn transmission_energy(&self) -> u32 {
        match self.costs {
            EnergyCosts::Calibrated(c) => c.transmission,
            EnergyCosts::Physical(p) => to_quanta(p.slot_duration * p.tx_power / p.amp_efficiency, p.quantum),
        }
    }

    pub fn circuitry_energy(&self, k: u32) -> Result<u32> {
        check_range("compression level", k as i64, 0, self.m as i64)?;
        Ok(match self.costs {
            EnergyCosts::Calibrated(c) => c.circuitry_idle + if k > 0 { c.circuitry_active } else { 0 },
            EnergyCosts::Physical(p) => {
                let idle = to_quanta(p.sense_energy + p.sync_energy, p.quantum);
                let active = if k > 0 {
                    to_quanta(p.circuit_power * p.slot_duration, p.quantum)
                } else {
                    0
                };
                idle + active
            }
        })
    }

    /// Energy to compress `q` blocks at level `k` and send them in one slot.
    pub fn slot_energy(&self, q: u32, k: u32) -> Result<u32> {
        check_range("backlog", q as i64, 1, i64::from(u32::MAX))?;
        check_range("compression level", k as i64, 0, (self.m / q) as i64)?;
        let tx = if k > 0 { self.transmission_energy() } else { 0 };
        Ok(q * self.processing_energy(k)? + tx + self.circuitry_energy(k)?)
    }

    /// Largest single-block slot cost, `e_max`.
    pub fn max_slot_energy(&self) -> u32 {
        (0..=self.m)
            .map(|k| self.slot_energy(1, k).expect("k within range"))
            .max()
            .unwrap_or(0)
    }
}

/// `min(b + e - u, B)`; fails if `u > b`.
pub fn battery_step(b: u32, e: u32, u: u32, capacity: u32) -> Result<u32> {
    if u > b {
        return Err(Error::CausalityViolation { spend: u, battery: b });
    }
    Ok((b - u).saturating_add(e).min(capacity))
}

/// Two-state harvesting source. State 0 yields nothing; state 1 yields a
/// discretized normal income truncated to `1..=max_income`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestModel {
    pub p_bad_to_good: f64,
    pub p_good_to_bad: f64,
    pub mean_income: f64,
    pub income_variance: f64,
    pub max_income: u32,
}

impl HarvestModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_bad_to_good", self.p_bad_to_good),
            ("p_good_to_bad", self.p_good_to_bad),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a probability, got {p}"
                )));
            }
        }
        if !(self.income_variance > 0.0) || !self.mean_income.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "income needs finite mean and positive variance, got ({}, {})",
                self.mean_income, self.income_variance
            )));
        }
        if self.max_income < 1 {
            return Err(Error::InvalidParameter("max_income must be >= 1".into()));
        }
        Ok(())
    }

    pub fn transition(&self, x: usize) -> [f64; 2] {
        match x {
            0 => [1.0 - self.p_bad_to_good, self.p_bad_to_good],
            _ => [self.p_good_to_bad, 1.0 - self.p_good_to_bad],
        }
    }

    /// Long-run fraction of time in the good state.
    pub fn good_fraction(&self) -> f64 {
        let s = self.p_bad_to_good + self.p_good_to_bad;
        if s == 0.0 {
            return 0.5;
        }
        self.p_bad_to_good / s
    }

    pub fn sampler(&self) -> Result<HarvestSampler> {
        let cdf = |pmf: Vec<f64>| {
            let mut acc = 0.0;
            pmf.into_iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect::<Vec<_>>()
        };
        Ok(HarvestSampler {
            transition: [self.transition(0), self.transition(1)],
            income_cdf: [cdf(harvest_pmf(self, 0)?), cdf(harvest_pmf(self, 1)?)],
        })
    }
}

/// Income distribution over `0..=max_income` in source state `x`.
pub fn harvest_pmf(model: &HarvestModel, x: usize) -> Result<Vec<f64>> {
    model.validate()?;
    let mut pmf = vec![0.0; model.max_income as usize + 1];
    match x {
        0 => pmf[0] = 1.0,
        1 => {
            let w = |e: usize| {
                let z = e as f64 - model.mean_income;
                (-z * z / (2.0 * model.income_variance)).exp()
            };
            let mut total = 0.0;
            for (e, p) in pmf.iter_mut().enumerate().skip(1) {
                *p = w(e);
                total += *p;
            }
            if total == 0.0 {
                // mean far outside the support: all mass on the nearest end
                let edge = if model.mean_income > 1.0 {
                    model.max_income as usize
                } else {
                    1
                };
                pmf[edge] = 1.0;
            } else {
                pmf.iter_mut().for_each(|p| *p /= total);
            }
        }
        _ => {
            return Err(Error::OutOfRange {
                what: "source state",
                value: x as i64,
                range: "[0, 1]".into(),
            })
        }
    }
    Ok(pmf)
}

/// Precomputed CDFs for fast per-slot sampling.
#[derive(Debug, Clone)]
pub struct HarvestSampler {
    transition: [[f64; 2]; 2],
    income_cdf: [Vec<f64>; 2],
}

impl HarvestSampler {
    /// Income is drawn from the current state's PMF, then the state moves.
    pub fn step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> (usize, u32) {
        let cdf = &self.income_cdf[x];
        let u: f64 = rng.random();
        let e = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let stay: f64 = rng.random();
        let next = if stay < self.transition[x][1] { 1 } else { 0 };
        (next, e as u32)
    }
}

pub fn harvest_step<R: Rng + ?Sized>(model: &HarvestModel, x: usize, rng: &mut R) -> Result<(usize, u32)> {
    check_range("source state", x as i64, 0, 1)?;
    Ok(model.sampler()?.step(x, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn calibrated(b: u32) -> EnergyModel {
        EnergyModel::new(EnergyCosts::default(), 30, 500, b).unwrap()
    }

    fn harvest(mean: f64, e_max: u32) -> HarvestModel {
        HarvestModel {
            p_bad_to_good: 0.3,
            p_good_to_bad: 0.1,
            mean_income: mean,
            income_variance: 10.0,
            max_income: e_max,
        }
    }

    #[test]
    fn calibrated_costs() {
        let e = calibrated(24);
        assert_eq!(e.processing_energy(0).unwrap(), 0);
        assert_eq!(e.processing_energy(30).unwrap(), 0);
        assert_eq!(e.processing_energy(29).unwrap(), 10);
        assert_eq!(e.processing_energy(10).unwrap(), 5);
        assert_eq!(e.transmission_energy(), 10);
        assert_eq!(e.circuitry_energy(0).unwrap(), 2);
        assert_eq!(e.circuitry_energy(5).unwrap(), 4);
        assert_eq!(e.slot_energy(1, 0).unwrap(), 2);
        assert_eq!(e.slot_energy(1, 30).unwrap(), 14);
        assert_eq!(e.slot_energy(2, 10).unwrap(), 24);
        assert_eq!(e.max_slot_energy(), 24);
        assert!(e.slot_energy(2, 16).is_err());
        assert!(e.processing_energy(31).is_err());
        let mid: Vec<u32> = (1..30).map(|k| e.processing_energy(k).unwrap()).collect();
        assert!(mid.windows(2).all(|w| w[0] <= w[1]));
    }

    fn physical(amp: f64, circuit_power: f64) -> EnergyModel {
        let p = PhysicalCosts {
            cpu_energy_per_cycle: 1e-3,
            cycles_slope: 0.8,
            cycles_offset: 0.2,
            amp_efficiency: amp,
            slot_duration: 0.4,
            tx_power: 0.025,
            sense_energy: 1e-3,
            sync_energy: 1e-3,
            circuit_power,
            quantum: 1e-3,
        };
        EnergyModel::new(EnergyCosts::Physical(p), 30, 500, 10).unwrap()
    }

    #[test]
    fn physical_costs() {
        let e = physical(1.0, 0.005);
        // 0.4 s * 25 mW = 10 mJ = 10 quanta
        assert_eq!(e.transmission_energy(), 10);
        let half = physical(0.5, 0.005);
        let (j1, j2) = (
            e.transmission_energy_joules().unwrap(),
            half.transmission_energy_joules().unwrap(),
        );
        assert!((j2 - 2.0 * j1).abs() < 1e-15);
        assert_eq!(half.transmission_energy(), 20);
        assert_eq!(e.circuitry_energy(0).unwrap(), 2);
        assert_eq!(e.circuitry_energy(1).unwrap(), 4);
        // 1e-3 J * 500 bits * (0.8/3 + 0.2) = 0.2333 J -> 234 quanta (ceil)
        assert_eq!(e.processing_energy(10).unwrap(), 234);
        let flat = physical(1.0, 0.0);
        assert_eq!(
            flat.circuitry_energy(0).unwrap(),
            flat.circuitry_energy(7).unwrap()
        );
    }

    #[test]
    fn battery_examples() {
        assert_eq!(battery_step(5, 3, 2, 6).unwrap(), 6);
        assert_eq!(battery_step(5, 0, 5, 6).unwrap(), 0);
        assert_eq!(
            battery_step(3, 0, 4, 6),
            Err(Error::CausalityViolation { spend: 4, battery: 3 })
        );
    }

    #[test]
    fn bad_state_harvests_nothing() {
        let pmf = harvest_pmf(&harvest(5.0, 10), 0).unwrap();
        assert_eq!(pmf[0], 1.0);
        assert!(pmf[1..].iter().all(|&p| p == 0.0));
        assert!(harvest_pmf(&harvest(5.0, 10), 2).is_err());
    }

    #[test]
    fn symmetric_when_centered() {
        let pmf = harvest_pmf(&harvest(5.0, 9), 1).unwrap();
        assert_eq!(pmf[0], 0.0);
        for d in 1..=4 {
            assert!((pmf[5 - d] - pmf[5 + d]).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_mean_matches_direct_summation() {
        let model = harvest(7.3, 12);
        let pmf = harvest_pmf(&model, 1).unwrap();
        let mean: f64 = pmf.iter().enumerate().map(|(e, p)| e as f64 * p).sum();
        // brute force: unnormalized weights evaluated independently
        let (mut num, mut den) = (0.0, 0.0);
        for e in 1..=12 {
            let w = (-(e as f64 - 7.3).powi(2) / 20.0).exp();
            num += e as f64 * w;
            den += w;
        }
        assert!((mean - num / den).abs() < 1e-12);
        assert!((mean - 7.3).abs() < 0.5);
    }

    #[test]
    fn stationary_good_fraction() {
        let model = harvest(5.0, 10);
        let sampler = model.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mut x = 0;
        let mut good = 0usize;
        for _ in 0..n {
            good += x;
            x = sampler.step(x, &mut rng).0;
        }
        let frac = good as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.005, "{frac}");
        assert!((model.good_fraction() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn always_switching_and_reproducible() {
        let mut m = harvest(5.0, 10);
        m.p_bad_to_good = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(harvest_step(&m, 0, &mut rng).unwrap(), (1, 0));
        }
        let trace = |seed| {
            let s = harvest(5.0, 10).sampler().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = 1;
            (0..100)
                .map(|_| {
                    let (nx, e) = s.step(x, &mut rng);
                    x = nx;
                    (nx, e)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(trace(9), trace(9));
    }

    proptest! {
        #[test]
        fn battery_stays_in_bounds(
            cap in 0u32..40,
            steps in proptest::collection::vec((0u32..50, 0u32..50), 1..100),
        ) {
            let mut b = 0u32;
            for (e, u) in steps {
                let u = u.min(b);
                let next = battery_step(b, e, u, cap).unwrap();
                prop_assert!(next <= cap);
                prop_assert_eq!(next, (b - u + e).min(cap));
                b = next;
            }
        }

        #[test]
        fn slot_energy_grows_with_backlog(q in 1u32..6, k in 1u32..6) {
            let e = calibrated(24);
            prop_assume!(k <= 30 / (q + 1));
            prop_assert!(e.slot_energy(q, k).unwrap() <= e.slot_energy(q + 1, k).unwrap());
        }

        #[test]
        fn pmfs_normalized(mean in -5.0f64..40.0, var in 0.1f64..50.0, e_max in 1u32..40) {
            let model = HarvestModel {
                p_bad_to_good: 0.3,
                p_good_to_bad: 0.1,
                mean_income: mean,
                income_variance: var,
                max_income: e_max,
            };
            for x in 0..2 {
                let pmf = harvest_pmf(&model, x).unwrap();
                prop_assert!(pmf.iter().all(|&p| p >= 0.0));
                prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
