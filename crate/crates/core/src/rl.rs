//! Tabular R-learning for the average-reward problem.
//!
//! The learner only sees states, admissible actions and sampled rewards; it
//! never reads the transition tables.

use std::ops::RangeInclusive;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Policy, StateSpace, SystemState};
use crate::sim::Env;

/// What the learner interacts with.
pub trait Environment {
    fn space(&self) -> StateSpace;

    fn state(&self) -> SystemState;

    /// Admissible actions in `s`; must lie within `0..=s.b`.
    fn actions(&self, s: SystemState) -> RangeInclusive<u32> {
        0..=s.b
    }

    /// Applies `u`, returning the reward and the new state.
    fn step(&mut self, u: u32, rng: &mut dyn RngCore) -> Result<(f64, SystemState)>;
}

impl Environment for Env {
    fn space(&self) -> StateSpace {
        Env::space(self)
    }

    fn state(&self) -> SystemState {
        Env::state(self)
    }

    fn step(&mut self, u: u32, rng: &mut dyn RngCore) -> Result<(f64, SystemState)> {
        let out = Env::step(self, u, rng)?;
        Ok((out.reward, out.next))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Environment steps per learning run.
    pub iterations: u64,
    pub alpha0: f64,
    /// Step size `alpha(n) = alpha0 / (1 + n / alpha_tau)`.
    pub alpha_tau: f64,
    /// Count `n` in visits of the updated state-action pair rather than in
    /// global steps.
    pub alpha_per_pair: bool,
    pub beta: f64,
    pub epsilon0: f64,
    pub epsilon_min: f64,
    /// Per-step exploration decay; derived from `explore_fraction` if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_decay: Option<f64>,
    /// Fraction of the budget after which exploration sits at `epsilon_min`.
    pub explore_fraction: f64,
    /// Initial average-reward estimate (rewards are negated normalized costs).
    pub rho_init: f64,
    pub checkpoint_interval: u64,
    /// Step from which exploration is switched off entirely.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze_at: Option<u64>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            iterations: 2_000_000,
            alpha0: 0.5,
            alpha_tau: 100.0,
            alpha_per_pair: true,
            beta: 0.01,
            epsilon0: 1.0,
            epsilon_min: 0.01,
            epsilon_decay: None,
            explore_fraction: 0.7,
            rho_init: -0.05,
            checkpoint_interval: 1000,
            freeze_at: None,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} out of range: {v}")));
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return bad("alpha0", self.alpha0);
        }
        if !(self.alpha_tau > 0.0) {
            return bad("alpha_tau", self.alpha_tau);
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta", self.beta);
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return bad("epsilon0", self.epsilon0);
        }
        if !(0.0..=1.0).contains(&self.epsilon_min) || self.epsilon_min > self.epsilon0 {
            return bad("epsilon_min", self.epsilon_min);
        }
        if let Some(g) = self.epsilon_decay {
            if !(g > 0.0 && g <= 1.0) {
                return bad("epsilon_decay", g);
            }
        } else if self.epsilon_min == 0.0 && self.epsilon0 > 0.0 {
            return Err(Error::InvalidParameter(
                "epsilon_min = 0 needs an explicit epsilon_decay".into(),
            ));
        }
        if !(self.explore_fraction > 0.0 && self.explore_fraction <= 1.0) {
            return bad("explore_fraction", self.explore_fraction);
        }
        if !self.rho_init.is_finite() {
            return bad("rho_init", self.rho_init);
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::InvalidParameter(
                "checkpoint_interval must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Exploration and step-size schedules for this run.
    pub fn schedules(&self) -> Schedules {
        let gamma = self.epsilon_decay.unwrap_or_else(|| {
            if self.epsilon0 == 0.0 {
                return 1.0;
            }
            let steps = (self.explore_fraction * self.iterations as f64).max(1.0);
            (self.epsilon_min / self.epsilon0).powf(1.0 / steps)
        });
        Schedules {
            epsilon0: self.epsilon0,
            epsilon_min: self.epsilon_min,
            gamma,
            alpha0: self.alpha0,
            alpha_tau: self.alpha_tau,
            freeze_at: self.freeze_at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    epsilon0: f64,
    epsilon_min: f64,
    gamma: f64,
    alpha0: f64,
    alpha_tau: f64,
    freeze_at: Option<u64>,
}

impl Schedules {
    pub fn epsilon(&self, n: u64) -> f64 {
        if self.freeze_at.is_some_and(|f| n >= f) {
            return 0.0;
        }
        (self.epsilon0 * self.gamma.powf(n as f64)).max(self.epsilon_min)
    }

    pub fn alpha(&self, n: u64) -> f64 {
        self.alpha0 / (1.0 + n as f64 / self.alpha_tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub iteration: u64,
    /// Normalized gain of the greedy policy at this point (NaN without an evaluator).
    pub extracted_policy_gain: f64,
    pub rho_estimate: f64,
    pub epsilon: f64,
    /// Step size used by the latest update.
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    pub policy: Policy,
    pub rho: f64,
    pub curve: Vec<CurvePoint>,
    pub q_values: Vec<f64>,
    pub steps: u64,
    /// Steps on which the average-reward estimate moved.
    pub rho_updates: u64,
}

struct QTable {
    space: StateSpace,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl QTable {
    fn new(space: StateSpace) -> Self {
        let mut offset = Vec::with_capacity(space.len() + 1);
        let mut total = 0;
        for s in space.iter() {
            offset.push(total);
            total += s.b as usize + 1;
        }
        offset.push(total);
        Self {
            space,
            offset,
            values: vec![0.0; total],
        }
    }

    fn slot(&self, s: SystemState, u: u32) -> usize {
        self.offset[self.space.index(s)] + u as usize
    }

    /// Greedy action over `range`, ties to the smallest action.
    fn best(&self, s: SystemState, range: RangeInclusive<u32>) -> (u32, f64) {
        let base = self.offset[self.space.index(s)];
        let mut best = (*range.start(), f64::NEG_INFINITY);
        for u in range {
            let v = self.values[base + u as usize];
            if v > best.1 {
                best = (u, v);
            }
        }
        best
    }
}

/// Runs `iterations` steps of R-learning with an epsilon-greedy behavior
/// policy. When `evaluator` is given, the greedy policy is scored every
/// `checkpoint_interval` steps.
pub fn rlearn<E: Environment>(
    env: &mut E,
    hp: &Hyperparams,
    iterations: u64,
    rng: &mut dyn RngCore,
    mut evaluator: Option<&mut dyn FnMut(&Policy) -> f64>,
) -> Result<LearnResult> {
    hp.validate()?;
    let space = env.space();
    let sched = Hyperparams {
        iterations,
        ..hp.clone()
    }
    .schedules();
    let mut table = QTable::new(space);
    let mut rho = hp.rho_init;
    let mut rho_updates = 0;
    let mut visits = vec![0u64; table.values.len()];
    let mut curve = Vec::new();
    for n in 0..iterations {
        let s = env.state();
        let range = env.actions(s);
        debug_assert!(*range.end() <= s.b);
        let eps = sched.epsilon(n);
        let u = if eps > 0.0 && rng.random::<f64>() < eps {
            rng.random_range(range.clone())
        } else {
            table.best(s, range.clone()).0
        };
        let (reward, next) = env.step(u, rng)?;
        let next_max = table.best(next, env.actions(next)).1;
        let i = table.slot(s, u);
        let delta = reward - rho + next_max - table.values[i];
        let alpha = sched.alpha(if hp.alpha_per_pair { visits[i] } else { n });
        visits[i] += 1;
        table.values[i] += alpha * delta;
        if table.values[i] >= table.best(s, range).1 {
            rho += hp.beta * delta;
            rho_updates += 1;
        }
        if (n + 1) % hp.checkpoint_interval == 0 {
            let gain = match evaluator.as_mut() {
                Some(eval) => eval(&extract(env, &table)),
                None => f64::NAN,
            };
            curve.push(CurvePoint {
                iteration: n + 1,
                extracted_policy_gain: gain,
                rho_estimate: rho,
                epsilon: eps,
                alpha,
            });
        }
    }
    Ok(LearnResult {
        policy: extract(env, &table),
        rho,
        curve,
        q_values: table.values,
        steps: iterations,
        rho_updates,
    })
}

fn extract<E: Environment>(env: &E, table: &QTable) -> Policy {
    Policy::from_fn(table.space, |s| table.best(s, env.actions(s)).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::mdp::{evaluate_policy, greedy_policy, Mdp};
    use crate::model::SystemModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedules_start_at_their_initial_values_and_decay() {
        let hp = Hyperparams {
            iterations: 10_000,
            ..Hyperparams::default()
        };
        let s = hp.schedules();
        assert_eq!(s.epsilon(0), 1.0);
        assert_eq!(s.alpha(0), hp.alpha0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for n in (0..20_000).step_by(97) {
            let cur = (s.epsilon(n), s.alpha(n));
            assert!(cur.0 <= prev.0 && cur.1 <= prev.1);
            assert!(cur.0 >= hp.epsilon_min);
            prev = cur;
        }
        assert!((s.epsilon(7_000) - 0.01).abs() < 1e-9);
        let frozen = Hyperparams {
            freeze_at: Some(5),
            ..hp
        };
        assert_eq!(frozen.schedules().epsilon(5), 0.0);
    }

    #[test]
    fn invalid_hyperparameters() {
        let base = Hyperparams::default();
        for hp in [
            Hyperparams {
                alpha0: 0.0,
                ..base.clone()
            },
            Hyperparams {
                beta: -0.1,
                ..base.clone()
            },
            Hyperparams {
                epsilon0: 1.5,
                ..base.clone()
            },
            Hyperparams {
                epsilon_min: 0.0,
                ..base.clone()
            },
            Hyperparams {
                checkpoint_interval: 0,
                ..base.clone()
            },
        ] {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
        assert!(base.validate().is_ok());
    }

    /// One state, one action, reward drawn from a fixed list.
    struct Bandit {
        rewards: Vec<f64>,
        t: usize,
    }

    impl Environment for Bandit {
        fn space(&self) -> StateSpace {
            StateSpace::new(0, 1)
        }
        fn state(&self) -> SystemState {
            SystemState::new(0, 0, 1)
        }
        fn step(&mut self, _u: u32, _rng: &mut dyn RngCore) -> Result<(f64, SystemState)> {
            let r = self.rewards[self.t % self.rewards.len()];
            self.t += 1;
            Ok((r, self.state()))
        }
    }

    #[test]
    fn single_state_reduces_to_smoothing() {
        let rewards = vec![-0.3, -0.9, -0.1, -0.5, -0.7];
        let mut env = Bandit {
            rewards: rewards.clone(),
            t: 0,
        };
        let hp = Hyperparams {
            epsilon0: 0.0,
            epsilon_min: 0.0,
            epsilon_decay: Some(1.0),
            alpha0: 0.2,
            alpha_tau: 1e12,
            beta: 0.05,
            rho_init: 0.0,
            ..Hyperparams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let res = rlearn(&mut env, &hp, 50, &mut rng, None).unwrap();
        let (mut q, mut rho) = (0.0, 0.0);
        for t in 0..50 {
            let d = rewards[t % rewards.len()] - rho;
            q += 0.2 * d;
            rho += 0.05 * d;
        }
        assert!((res.rho - rho).abs() < 1e-12);
        assert!((res.q_values[0] - q).abs() < 1e-9);
        assert_eq!(res.rho_updates, 50);
    }

    fn small_model() -> SystemModel {
        let mut cfg = SystemConfig::default();
        cfg.energy.battery_norm = Some(0.5);
        cfg.harvest.mean_income_norm = Some(0.5);
        cfg.resolve().unwrap()
    }

    /// Restricts an environment to the single action of a fixed policy.
    struct Fixed {
        env: Env,
        policy: Policy,
    }

    impl Environment for Fixed {
        fn space(&self) -> StateSpace {
            self.env.space()
        }
        fn state(&self) -> SystemState {
            self.env.state()
        }
        fn actions(&self, s: SystemState) -> RangeInclusive<u32> {
            let u = self.policy.action(s);
            u..=u
        }
        fn step(&mut self, u: u32, rng: &mut dyn RngCore) -> Result<(f64, SystemState)> {
            Environment::step(&mut self.env, u, rng)
        }
    }

    #[test]
    fn single_action_environment_learns_the_policy_gain() {
        let m = small_model();
        let policy = greedy_policy(&m);
        let gain = evaluate_policy(&Mdp::build(&m).unwrap(), &policy).unwrap().gain;
        let mut env = Fixed {
            env: Env::new(&m).unwrap(),
            policy,
        };
        let hp = Hyperparams {
            beta: 2e-4,
            ..Hyperparams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let res = rlearn(&mut env, &hp, 100_000, &mut rng, None).unwrap();
        assert!(
            (-res.rho - gain).abs() / gain < 0.02,
            "rho {} gain {gain}",
            res.rho
        );
        assert_eq!(res.rho_updates, 100_000);
    }

    #[test]
    fn trajectory_is_reproducible() {
        let m = small_model();
        let go = || {
            let mut env = Env::new(&m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            rlearn(&mut env, &Hyperparams::default(), 20_000, &mut rng, None).unwrap()
        };
        let (a, b) = (go(), go());
        assert_eq!(a.q_values, b.q_values);
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.policy, b.policy);
    }

    #[test]
    fn rho_moves_only_on_greedy_updates() {
        let m = small_model();
        let mut env = Env::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let res = rlearn(&mut env, &Hyperparams::default(), 20_000, &mut rng, None).unwrap();
        assert!(res.rho_updates > 0 && res.rho_updates < res.steps);
        assert!(res.rho.is_finite());
    }

    #[test]
    fn curve_is_sampled_at_checkpoints() {
        let m = small_model();
        let mdp = Mdp::build(&m).unwrap();
        let mut env = Env::new(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut eval = |p: &Policy| evaluate_policy(&mdp, p).unwrap().gain;
        let res = rlearn(
            &mut env,
            &Hyperparams::default(),
            5_000,
            &mut rng,
            Some(&mut eval),
        )
        .unwrap();
        assert_eq!(res.curve.len(), 5);
        assert_eq!(res.curve[4].iteration, 5_000);
        assert!(res
            .curve
            .iter()
            .all(|c| (0.0..=1.0 + 1e-9).contains(&c.extracted_policy_gain)));
    }
}
