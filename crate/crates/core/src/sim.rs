//! Slot-level Monte Carlo simulator.
//!
//! Each slot: observe `(x, b, q)`, take `u`, pick `k*` from the operating
//! table, draw a fade, update the backlog, charge the realized cost, then
//! harvest and clamp the battery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{outage_probability, sample_transmission};
use crate::energy::HarvestSampler;
use crate::error::{Error, Result};
use crate::mdp::{Policy, StateSpace, SystemState};
use crate::model::SystemModel;
use crate::tradeoff::OperatingTable;

/// Anything that maps a state to an energy action.
pub trait PolicyLike {
    fn action(&self, s: SystemState) -> u32;

    /// State space the policy was built for, if it has one.
    fn space(&self) -> Option<StateSpace> {
        None
    }
}

impl PolicyLike for Policy {
    fn action(&self, s: SystemState) -> u32 {
        Policy::action(self, s)
    }

    fn space(&self) -> Option<StateSpace> {
        Some(Policy::space(self))
    }
}

/// Adapts a closure into a [`PolicyLike`].
pub struct FnPolicy<F>(pub F);

impl<F: Fn(SystemState) -> u32> PolicyLike for FnPolicy<F> {
    fn action(&self, s: SystemState) -> u32 {
        (self.0)(s)
    }
}

#[derive(Debug, Clone, Copy)]
struct SlotEntry {
    k: u32,
    rate: f64,
    /// Raw cost on success.
    ack: f64,
    /// `c~(s,u)`, raw.
    expected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOutcome {
    pub state: SystemState,
    /// Action actually applied (after clamping).
    pub u: u32,
    pub k: u32,
    pub success: bool,
    /// Realized cost, raw distortion units.
    pub cost: f64,
    /// Expected cost of the applied action, raw.
    pub expected_cost: f64,
    /// `-cost / d_floor`.
    pub reward: f64,
    pub next: SystemState,
    pub overflow: bool,
    /// A block hit its last attempt without getting through.
    pub block_lost: bool,
}

/// Simulated device plus link. Owns the current state but no RNG.
#[derive(Debug, Clone)]
pub struct Env {
    model: SystemModel,
    space: StateSpace,
    table: Vec<SlotEntry>,
    sampler: HarvestSampler,
    state: SystemState,
    strict: bool,
    clamped: u64,
}

impl Env {
    pub fn new(model: &SystemModel) -> Result<Self> {
        model.validate()?;
        let ops = OperatingTable::build(model);
        let cap = model.battery_capacity();
        let d = &model.distortion;
        let mut table = Vec::with_capacity((cap as usize + 1) * model.max_attempts as usize);
        for q in 1..=model.max_attempts {
            for u in 0..=cap {
                let k = ops.get(q, u).k_star;
                table.push(if k == 0 {
                    SlotEntry {
                        k,
                        rate: 0.0,
                        ack: d.d_floor,
                        expected: d.d_floor,
                    }
                } else {
                    let rate = d.coding_rate(q, k);
                    let p_ok = 1.0 - outage_probability(rate, model.snr())?;
                    let ack = d.ack_distortion(q, k)?;
                    SlotEntry {
                        k,
                        rate,
                        ack,
                        expected: p_ok * ack + (1.0 - p_ok) * d.d_floor,
                    }
                });
            }
        }
        Ok(Self {
            model: *model,
            space: StateSpace::of(model),
            table,
            sampler: model.harvest.sampler()?,
            state: SystemState::new(1, cap, 1),
            strict: false,
            clamped: 0,
        })
    }

    /// In strict mode an action above the battery level is an error instead
    /// of being clamped.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn state(&self) -> SystemState {
        self.state
    }

    pub fn set_state(&mut self, s: SystemState) -> Result<()> {
        if !self.space.contains(s) {
            return Err(Error::InvalidParameter(format!(
                "{s:?} is outside the state space"
            )));
        }
        self.state = s;
        Ok(())
    }

    /// Number of actions clamped to the battery level so far.
    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    /// Advances one slot.
    pub fn step<R: Rng + ?Sized>(&mut self, u: u32, rng: &mut R) -> Result<StepOutcome> {
        let s = self.state;
        let u = if u > s.b {
            if self.strict {
                return Err(Error::CausalityViolation {
                    spend: u,
                    battery: s.b,
                });
            }
            if self.clamped == 0 {
                log::warn!("action {u} exceeds battery {}; clamping", s.b);
            }
            self.clamped += 1;
            s.b
        } else {
            u
        };
        let cap = self.model.battery_capacity();
        let entry = self.table[(s.q as usize - 1) * (cap as usize + 1) + u as usize];
        let success = entry.k > 0 && sample_transmission(entry.rate, self.model.snr(), rng)?;
        let r = self.model.max_attempts;
        let (cost, nq) = if success {
            (entry.ack, 1)
        } else {
            (self.model.d_floor(), (s.q + 1).min(r))
        };
        let (nx, e) = self.sampler.step(s.x as usize, rng);
        let raw = s.b - u + e;
        let next = SystemState::new(nx as u8, raw.min(cap), nq);
        self.state = next;
        Ok(StepOutcome {
            state: s,
            u,
            k: entry.k,
            success,
            cost,
            expected_cost: entry.expected,
            reward: -cost / self.model.d_floor(),
            next,
            overflow: raw > cap,
            block_lost: !success && s.q == r,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub strict_causality: bool,
    /// Starting state; defaults to a good source, full battery, empty backlog.
    pub initial_state: Option<SystemState>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub slot: u64,
    pub x: u8,
    pub b: u32,
    pub u: u32,
    pub q: u32,
    pub k: u32,
    pub success: bool,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    /// Mean realized cost per slot, normalized by the distortion floor.
    pub avg_distortion: f64,
    /// Mean expected stage cost along the trajectory, normalized.
    pub avg_expected_cost: f64,
    pub block_loss_prob: f64,
    pub slots: u64,
    pub blocks_delivered: u64,
    pub blocks_lost: u64,
    /// Slots spent at each battery level (observed at slot start).
    pub battery_histogram: Vec<u64>,
    pub outage_count: u64,
    pub discard_count: u64,
    pub overflow_count: u64,
    pub clamp_count: u64,
    pub seed: u64,
}

pub fn run(policy: &dyn PolicyLike, model: &SystemModel, horizon: u64, seed: u64) -> Result<SimReport> {
    run_with(policy, model, horizon, seed, SimOptions::default(), |_| {})
}

/// Simulates `horizon` slots, calling `on_slot` after each one.
pub fn run_with(
    policy: &dyn PolicyLike,
    model: &SystemModel,
    horizon: u64,
    seed: u64,
    opts: SimOptions,
    mut on_slot: impl FnMut(&TraceRow),
) -> Result<SimReport> {
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "horizon must be at least one slot".into(),
        ));
    }
    let mut env = Env::new(model)?.strict(opts.strict_causality);
    if let Some(sp) = policy.space() {
        if sp != env.space() {
            return Err(Error::ConfigMismatch {
                policy: sp.len(),
                model: env.space().len(),
            });
        }
    }
    if let Some(s) = opts.initial_state {
        env.set_state(s)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = model.battery_capacity() as usize;
    let mut hist = vec![0u64; cap + 1];
    let (mut cost, mut expected) = (0.0, 0.0);
    let (mut delivered, mut lost) = (0u64, 0u64);
    let (mut outages, mut discards, mut overflows) = (0u64, 0u64, 0u64);
    for slot in 0..horizon {
        let s = env.state();
        hist[s.b as usize] += 1;
        let out = env.step(policy.action(s), &mut rng)?;
        cost += out.cost;
        expected += out.expected_cost;
        if out.success {
            delivered += s.q as u64;
        } else if out.k == 0 {
            discards += 1;
        } else {
            outages += 1;
        }
        lost += out.block_lost as u64;
        overflows += out.overflow as u64;
        on_slot(&TraceRow {
            slot,
            x: s.x,
            b: s.b,
            u: out.u,
            q: s.q,
            k: out.k,
            success: out.success,
            cost: out.cost,
        });
    }
    let n = horizon as f64;
    let resolved = delivered + lost;
    Ok(SimReport {
        avg_distortion: cost / n / model.d_floor(),
        avg_expected_cost: expected / n / model.d_floor(),
        block_loss_prob: if resolved == 0 {
            0.0
        } else {
            lost as f64 / resolved as f64
        },
        slots: horizon,
        blocks_delivered: delivered,
        blocks_lost: lost,
        battery_histogram: hist,
        outage_count: outages,
        discard_count: discards,
        overflow_count: overflows,
        clamp_count: env.clamped(),
        seed,
    })
}
