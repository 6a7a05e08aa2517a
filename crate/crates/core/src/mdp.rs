//! The average-cost MDP over (source state, battery, backlog), its solution by
//! relative value iteration, exact policy evaluation and the greedy baseline.
//!
//! Action `u` is the energy allocated to the slot; it is debited from the
//! battery in full (`b' = min(b + e - u, B)`) and buys the best operating point
//! whose slot cost fits in `u`. A discard (`k* = 0`) counts as a failed
//! transmission for the backlog: `q' = min(q + 1, r)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::outage_probability;
use crate::energy::harvest_pmf;
use crate::error::{Error, Result};
use crate::markov::{stationary_direct, stationary_power, SparseChain};
use crate::model::SystemModel;
use crate::tradeoff::{greedy_budget, OperatingPoint, OperatingTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SystemState {
    /// Harvesting source state: 0 bad, 1 good.
    pub x: u8,
    /// Battery level in quanta.
    pub b: u32,
    /// Backlog: blocks to send this slot, `1..=r`.
    pub q: u32,
}

impl SystemState {
    pub fn new(x: u8, b: u32, q: u32) -> Self {
        Self { x, b, q }
    }
}

/// Dense indexing of `{0,1} x {0..=B} x {1..=r}`, source state major, then
/// battery, then backlog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    pub capacity: u32,
    pub max_attempts: u32,
}

impl StateSpace {
    pub fn new(capacity: u32, max_attempts: u32) -> Self {
        Self {
            capacity,
            max_attempts,
        }
    }

    pub fn of(model: &SystemModel) -> Self {
        Self::new(model.battery_capacity(), model.max_attempts)
    }

    pub fn len(&self) -> usize {
        2 * (self.capacity as usize + 1) * self.max_attempts as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: SystemState) -> bool {
        s.x <= 1 && s.b <= self.capacity && s.q >= 1 && s.q <= self.max_attempts
    }

    pub fn index(&self, s: SystemState) -> usize {
        debug_assert!(self.contains(s), "{s:?} outside {self:?}");
        let r = self.max_attempts as usize;
        (s.x as usize * (self.capacity as usize + 1) + s.b as usize) * r + (s.q as usize - 1)
    }

    pub fn state(&self, idx: usize) -> SystemState {
        let r = self.max_attempts as usize;
        let q = (idx % r) as u32 + 1;
        let rest = idx / r;
        let b = (rest % (self.capacity as usize + 1)) as u32;
        let x = (rest / (self.capacity as usize + 1)) as u8;
        SystemState { x, b, q }
    }

    pub fn iter(&self) -> impl Iterator<Item = SystemState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// Cached per-model quantities shared by the kernel and the cost.
struct Dynamics<'a> {
    model: &'a SystemModel,
    ops: OperatingTable,
    pmf: [Vec<f64>; 2],
    source: [[f64; 2]; 2],
}

impl<'a> Dynamics<'a> {
    fn new(model: &'a SystemModel) -> Result<Self> {
        Ok(Self {
            model,
            ops: OperatingTable::build(model),
            pmf: [harvest_pmf(&model.harvest, 0)?, harvest_pmf(&model.harvest, 1)?],
            source: [model.harvest.transition(0), model.harvest.transition(1)],
        })
    }

    fn check(&self, s: SystemState, u: u32) -> Result<()> {
        let space = StateSpace::of(self.model);
        if !space.contains(s) {
            return Err(Error::OutOfRange {
                what: "state",
                value: space.len() as i64,
                range: format!("{s:?} not in state space"),
            });
        }
        if u > s.b {
            return Err(Error::InadmissibleAction {
                action: u,
                battery: s.b,
            });
        }
        Ok(())
    }

    fn success_prob(&self, q: u32, u: u32) -> f64 {
        let op = self.ops.get(q, u);
        if op.k_star == 0 {
            return 0.0;
        }
        let rate = self.model.distortion.coding_rate(q, op.k_star);
        1.0 - outage_probability(rate, self.model.snr()).expect("valid rate and snr")
    }

    fn stage_cost(&self, s: SystemState, u: u32) -> f64 {
        let d = &self.model.distortion;
        let op = self.ops.get(s.q, u);
        if op.k_star == 0 {
            return d.d_floor;
        }
        let p_ok = self.success_prob(s.q, u);
        let ack = d.ack_distortion(s.q, op.k_star).expect("k* within range");
        p_ok * ack + (1.0 - p_ok) * d.d_floor
    }

    fn kernel(&self, s: SystemState, u: u32, out: &mut Vec<(SystemState, f64)>) {
        out.clear();
        let r = self.model.max_attempts;
        let cap = self.model.battery_capacity();
        let p_ok = self.success_prob(s.q, u);
        let fail_q = (s.q + 1).min(r);
        let queue: [(u32, f64); 2] = [(1, p_ok), (fail_q, 1.0 - p_ok)];
        let x = s.x as usize;
        for (nx, &px) in self.source[x].iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (e, &pe) in self.pmf[x].iter().enumerate() {
                if pe == 0.0 {
                    continue;
                }
                let nb = (s.b - u + e as u32).min(cap);
                for &(nq, pq) in &queue {
                    if pq == 0.0 {
                        continue;
                    }
                    let next = SystemState::new(nx as u8, nb, nq);
                    let p = px * pe * pq;
                    match out.iter_mut().find(|(st, _)| *st == next) {
                        Some(entry) => entry.1 += p,
                        None => out.push((next, p)),
                    }
                }
            }
        }
    }
}

/// Successor distribution of `state` under action `u`.
pub fn transition_kernel(model: &SystemModel, state: SystemState, u: u32) -> Result<Vec<(SystemState, f64)>> {
    let dyn_ = Dynamics::new(model)?;
    dyn_.check(state, u)?;
    let mut out = Vec::new();
    dyn_.kernel(state, u, &mut out);
    Ok(out)
}

/// Expected one-slot cost `c~(s, u)` in raw distortion units.
pub fn stage_cost(model: &SystemModel, state: SystemState, u: u32) -> Result<f64> {
    let dyn_ = Dynamics::new(model)?;
    dyn_.check(state, u)?;
    Ok(dyn_.stage_cost(state, u))
}

/// Tabulated MDP: stage costs for every admissible pair and a sparse kernel.
#[derive(Debug, Clone)]
pub struct Mdp {
    model: SystemModel,
    space: StateSpace,
    ops: OperatingTable,
    pair_offset: Vec<usize>,
    cost: Vec<f64>,
    succ_offset: Vec<usize>,
    succ: Vec<(u32, f64)>,
}

impl Mdp {
    pub fn build(model: &SystemModel) -> Result<Self> {
        model.validate()?;
        let dyn_ = Dynamics::new(model)?;
        let space = StateSpace::of(model);
        let mut pair_offset = Vec::with_capacity(space.len() + 1);
        let mut cost = Vec::new();
        let mut succ_offset = vec![0];
        let mut succ = Vec::new();
        let mut buf = Vec::new();
        pair_offset.push(0);
        for s in space.iter() {
            for u in 0..=s.b {
                cost.push(dyn_.stage_cost(s, u));
                dyn_.kernel(s, u, &mut buf);
                succ.extend(buf.iter().map(|&(n, p)| (space.index(n) as u32, p)));
                succ_offset.push(succ.len());
            }
            pair_offset.push(cost.len());
        }
        Ok(Self {
            model: *model,
            space,
            ops: dyn_.ops,
            pair_offset,
            cost,
            succ_offset,
            succ,
        })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn num_pairs(&self) -> usize {
        self.cost.len()
    }

    fn pair(&self, s: usize, u: u32) -> usize {
        debug_assert!(self.pair_offset[s] + (u as usize) < self.pair_offset[s + 1]);
        self.pair_offset[s] + u as usize
    }

    pub fn num_actions(&self, s: usize) -> usize {
        self.pair_offset[s + 1] - self.pair_offset[s]
    }

    /// Raw stage cost of action `u` in state index `s`.
    pub fn cost(&self, s: usize, u: u32) -> f64 {
        self.cost[self.pair(s, u)]
    }

    pub fn successors(&self, s: usize, u: u32) -> &[(u32, f64)] {
        let p = self.pair(s, u);
        &self.succ[self.succ_offset[p]..self.succ_offset[p + 1]]
    }

    pub fn operating_point(&self, s: SystemState, u: u32) -> &OperatingPoint {
        self.ops.get(s.q, u)
    }

    pub fn operating_table(&self) -> &OperatingTable {
        &self.ops
    }

    #[cfg(test)]
    pub(crate) fn costs_mut(&mut self) -> &mut [f64] {
        &mut self.cost
    }

    fn induced_chain(&self, policy: &Policy) -> SparseChain {
        SparseChain {
            rows: (0..self.space.len())
                .map(|s| {
                    self.successors(s, policy.actions[s])
                        .iter()
                        .map(|&(n, p)| (n as usize, p))
                        .collect()
                })
                .collect(),
        }
    }

    /// Induced chain of a policy as a dense matrix (for small instances).
    pub fn policy_matrix(&self, policy: &Policy) -> Vec<Vec<f64>> {
        self.induced_chain(policy).to_dense()
    }
}

/// Deterministic stationary policy: one energy allocation per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    space: StateSpace,
    actions: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyRow {
    pub x: u8,
    pub b: u32,
    pub q: u32,
    pub u: u32,
    pub k_star: u32,
}

impl Policy {
    pub fn new(space: StateSpace, actions: Vec<u32>) -> Result<Self> {
        if actions.len() != space.len() {
            return Err(Error::ConfigMismatch {
                policy: actions.len(),
                model: space.len(),
            });
        }
        for (i, &u) in actions.iter().enumerate() {
            let s = space.state(i);
            if u > s.b {
                return Err(Error::InadmissibleAction {
                    action: u,
                    battery: s.b,
                });
            }
        }
        Ok(Self { space, actions })
    }

    pub fn from_fn(space: StateSpace, mut f: impl FnMut(SystemState) -> u32) -> Self {
        let actions = space.iter().map(|s| f(s).min(s.b)).collect();
        Self { space, actions }
    }

    /// Uniformly random admissible action in every state.
    pub fn random<R: Rng + ?Sized>(space: StateSpace, rng: &mut R) -> Self {
        Self::from_fn(space, |s| rng.random_range(0..=s.b))
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn action(&self, s: SystemState) -> u32 {
        self.actions[self.space.index(s)]
    }

    pub fn actions(&self) -> &[u32] {
        &self.actions
    }

    /// Export rows in state-index order (x, then b, then q).
    pub fn rows(&self, mdp: &Mdp) -> Vec<PolicyRow> {
        self.space
            .iter()
            .zip(&self.actions)
            .map(|(s, &u)| PolicyRow {
                x: s.x,
                b: s.b,
                q: s.q,
                u,
                k_star: mdp.operating_point(s, u).k_star,
            })
            .collect()
    }
}

/// Energy-unaware baseline: spend `min(b, u*_q)` where `u*_q` buys `k*_{q,R}`.
pub fn greedy_policy(model: &SystemModel) -> Policy {
    let budgets: Vec<u32> = (1..=model.max_attempts)
        .map(|q| greedy_budget(model, q))
        .collect();
    Policy::from_fn(StateSpace::of(model), |s| s.b.min(budgets[s.q as usize - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop once the span of successive value differences is at most this
    /// (raw distortion units).
    pub span_threshold: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            span_threshold: 1e-9,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Long-run average cost normalized by the distortion floor.
    pub gain: f64,
    pub steady_state: Vec<f64>,
    /// Some states carry no stationary mass.
    pub reducible: bool,
    pub iterations: usize,
}

/// Exact long-run cost of a policy from the stationary distribution of its
/// induced chain.
pub fn evaluate_policy(mdp: &Mdp, policy: &Policy) -> Result<Evaluation> {
    if policy.space != mdp.space {
        return Err(Error::ConfigMismatch {
            policy: policy.space.len(),
            model: mdp.space.len(),
        });
    }
    let chain = mdp.induced_chain(policy);
    let n = chain.len();
    let start = vec![1.0 / n as f64; n];
    let st = stationary_power(&chain, &start, 1e-13, 10_000_000);
    if !st.converged {
        log::warn!(
            "stationary distribution not converged after {} sweeps",
            st.iterations
        );
    }
    let reducible = st.distribution.iter().any(|&p| p < 1e-14);
    if reducible {
        log::debug!("induced chain has transient states");
    }
    let raw: f64 = st
        .distribution
        .iter()
        .enumerate()
        .map(|(s, &p)| p * mdp.cost(s, policy.actions[s]))
        .sum();
    Ok(Evaluation {
        gain: raw / mdp.model.d_floor(),
        steady_state: st.distribution,
        reducible,
        iterations: st.iterations,
    })
}

/// Normalized gain only. Small instances use a direct linear solve, which is
/// much cheaper than power iteration when called repeatedly.
pub fn policy_gain(mdp: &Mdp, policy: &Policy) -> Result<f64> {
    if policy.space != mdp.space {
        return Err(Error::ConfigMismatch {
            policy: policy.space.len(),
            model: mdp.space.len(),
        });
    }
    if mdp.space.len() <= 512 {
        if let Some(pi) = stationary_direct(&mdp.policy_matrix(policy)) {
            let raw: f64 = pi
                .iter()
                .enumerate()
                .map(|(s, &p)| p * mdp.cost(s, policy.actions[s]))
                .sum();
            return Ok(raw / mdp.model.d_floor());
        }
    }
    evaluate_policy(mdp, policy).map(|e| e.gain)
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub policy: Policy,
    /// Long-run average cost of `policy` (normalized), from its stationary
    /// distribution.
    pub gain: f64,
    /// Midpoint of the final value-iteration gain bracket (normalized).
    pub gain_estimate: f64,
    pub iterations: usize,
    /// Final span of successive value differences (raw units).
    pub final_span: f64,
    pub steady_state: Vec<f64>,
    /// Relative values, zero at the reference state.
    pub relative_values: Vec<f64>,
}

/// Relative value iteration from `J_0 = 0`.
pub fn rvia_solve(mdp: &Mdp, opts: &SolverOptions) -> Result<SolveResult> {
    rvia_solve_from(mdp, opts, &vec![0.0; mdp.space.len()])
}

/// Relative value iteration from an arbitrary initial value vector.
///
/// Each sweep computes `(TJ)(s) = min_u c~(s,u) + sum_s' P(s'|s,u) J(s')`,
/// then re-centers at state index 0 so values stay bounded.
pub fn rvia_solve_from(mdp: &Mdp, opts: &SolverOptions, initial: &[f64]) -> Result<SolveResult> {
    if !(opts.span_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "span threshold must be positive, got {}",
            opts.span_threshold
        )));
    }
    let n = mdp.space.len();
    if initial.len() != n {
        return Err(Error::ConfigMismatch {
            policy: initial.len(),
            model: n,
        });
    }
    let mut values = initial.to_vec();
    let mut next = vec![0.0; n];
    let mut argmin = vec![0u32; n];
    let mut span = f64::INFINITY;
    let mut bracket = (0.0, 0.0);
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        for s in 0..n {
            let mut best = (0u32, f64::INFINITY);
            for u in 0..mdp.num_actions(s) as u32 {
                let q = mdp.cost(s, u)
                    + mdp
                        .successors(s, u)
                        .iter()
                        .map(|&(j, p)| p * values[j as usize])
                        .sum::<f64>();
                if q < best.1 {
                    best = (u, q);
                }
            }
            argmin[s] = best.0;
            next[s] = best.1;
        }
        let (lo, hi) = next
            .iter()
            .zip(&values)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                (lo.min(d), hi.max(d))
            });
        span = hi - lo;
        bracket = (lo, hi);
        let offset = next[0];
        values.iter_mut().zip(&next).for_each(|(v, t)| *v = t - offset);
        if span <= opts.span_threshold {
            break;
        }
    }
    if !(span <= opts.span_threshold) {
        return Err(Error::NotConverged { iterations, span });
    }
    let policy = Policy {
        space: mdp.space,
        actions: argmin,
    };
    let eval = evaluate_policy(mdp, &policy)?;
    Ok(SolveResult {
        policy,
        gain: eval.gain,
        gain_estimate: 0.5 * (bracket.0 + bracket.1) / mdp.model.d_floor(),
        iterations,
        final_span: span,
        steady_state: eval.steady_state,
        relative_values: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::distortion::DistortionModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(distance: f64, r: u32, b_norm: f64) -> SystemModel {
        let mut cfg = SystemConfig::default();
        cfg.channel.distance = distance;
        cfg.protocol.max_attempts = r;
        cfg.energy.battery_norm = Some(b_norm);
        cfg.resolve().unwrap()
    }

    #[test]
    fn indexing_is_a_bijection() {
        let sp = StateSpace::new(5, 3);
        assert_eq!(sp.len(), 36);
        for i in 0..sp.len() {
            assert_eq!(sp.index(sp.state(i)), i);
        }
        assert_eq!(sp.state(0), SystemState::new(0, 0, 1));
        assert_eq!(sp.state(1), SystemState::new(0, 0, 2));
        assert_eq!(sp.state(3), SystemState::new(0, 1, 1));
        assert_eq!(sp.state(18), SystemState::new(1, 0, 1));
    }

    #[test]
    fn rows_are_stochastic() {
        for r in [1, 2, 3] {
            let m = model(250.0, r, 0.8);
            let mdp = Mdp::build(&m).unwrap();
            for s in 0..mdp.space().len() {
                for u in 0..mdp.num_actions(s) as u32 {
                    let row = mdp.successors(s, u);
                    assert!(row.iter().all(|&(_, p)| p >= 0.0));
                    let total: f64 = row.iter().map(|&(_, p)| p).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_attempt_keeps_backlog_at_one() {
        let m = model(200.0, 1, 1.0);
        let s = SystemState::new(1, 20, 1);
        for u in [0, 14, 20] {
            let k = transition_kernel(&m, s, u).unwrap();
            assert!(k.iter().all(|(n, _)| n.q == 1));
        }
    }

    #[test]
    fn zero_energy_is_a_certain_failure() {
        let m = model(200.0, 3, 1.0);
        for q in 1..=3 {
            let s = SystemState::new(1, 10, q);
            let k = transition_kernel(&m, s, 0).unwrap();
            assert!(k.iter().all(|(n, _)| n.q == (q + 1).min(3)));
            assert_eq!(stage_cost(&m, s, 0).unwrap(), 100.0);
        }
        assert!(matches!(
            transition_kernel(&m, SystemState::new(0, 3, 1), 4),
            Err(Error::InadmissibleAction { .. })
        ));
        assert!(stage_cost(&m, SystemState::new(0, 3, 1), 4).is_err());
    }

    #[test]
    fn stage_cost_is_offset_expected_distortion() {
        let m = model(300.0, 3, 2.0);
        let d: DistortionModel = m.distortion;
        for q in 1..=3 {
            for u in [14, 18, 24, 30, 40] {
                let s = SystemState::new(1, u.min(m.battery_capacity()), q);
                let u = s.b;
                let op = crate::tradeoff::choose_k(&m, q, u);
                if op.k_star == 0 {
                    continue;
                }
                // c~ = E[Delta_q(k)] - (q - 1) D_fl, expanded by hand
                let want = d.expected_receiver_distortion(m.snr(), q, op.k_star).unwrap()
                    - (q as f64 - 1.0) * d.d_floor;
                let got = stage_cost(&m, s, u).unwrap();
                assert!((got - want).abs() < 1e-9, "q={q} u={u}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn lossless_limit_cost_is_ack_distortion() {
        let mut m = model(200.0, 2, 2.0);
        m.channel = m.channel.with_snr_override(f64::INFINITY).unwrap();
        let s = SystemState::new(1, 40, 2);
        let op = crate::tradeoff::choose_k(&m, 2, 40);
        let want = m.distortion.ack_distortion(2, op.k_star).unwrap();
        assert_eq!(stage_cost(&m, s, 40).unwrap(), want);
    }

    #[test]
    fn empty_battery_costs_the_floor() {
        let mut cfg = SystemConfig::default();
        cfg.energy.battery_norm = None;
        cfg.energy.battery_capacity = Some(0);
        let m = cfg.resolve().unwrap();
        let mdp = Mdp::build(&m).unwrap();
        let res = rvia_solve(&mdp, &SolverOptions::default()).unwrap();
        assert_eq!(res.gain, 1.0);
        assert!((res.gain_estimate - 1.0).abs() < 1e-12);
        assert!(res.policy.actions().iter().all(|&u| u == 0));
    }

    #[test]
    fn solver_stops_below_threshold_and_matches_evaluation() {
        let m = model(200.0, 2, 0.8);
        let mdp = Mdp::build(&m).unwrap();
        let opts = SolverOptions::default();
        let res = rvia_solve(&mdp, &opts).unwrap();
        assert!(res.final_span <= opts.span_threshold);
        assert!((res.steady_state.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(
            (res.gain - res.gain_estimate).abs() < 1e-6,
            "{} vs {}",
            res.gain,
            res.gain_estimate
        );
        let ev = evaluate_policy(&mdp, &res.policy).unwrap();
        assert!((ev.gain - res.gain).abs() < 1e-12);
        assert!((policy_gain(&mdp, &res.policy).unwrap() - res.gain).abs() < 1e-9);
    }

    #[test]
    fn gain_does_not_depend_on_initial_values() {
        let m = model(200.0, 2, 1.0);
        let mdp = Mdp::build(&m).unwrap();
        let opts = SolverOptions::default();
        let a = rvia_solve(&mdp, &opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init: Vec<f64> = (0..mdp.space().len())
            .map(|_| rng.random_range(-500.0..500.0))
            .collect();
        let b = rvia_solve_from(&mdp, &opts, &init).unwrap();
        assert!((a.gain_estimate - b.gain_estimate).abs() <= 10.0 * opts.span_threshold);
    }

    #[test]
    fn uniform_costs_give_that_gain() {
        let m = model(200.0, 2, 0.8);
        let mut mdp = Mdp::build(&m).unwrap();
        mdp.costs_mut().iter_mut().for_each(|c| *c = 37.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let p = Policy::random(mdp.space(), &mut rng);
            let ev = evaluate_policy(&mdp, &p).unwrap();
            assert!((ev.gain - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_examples() {
        let m = model(200.0, 2, 1.0);
        let g = greedy_policy(&m);
        let u1 = greedy_budget(&m, 1);
        assert_eq!(u1, 14);
        assert_eq!(g.action(SystemState::new(1, 24, 1)), 14);
        assert_eq!(g.action(SystemState::new(0, 0, 1)), 0);
        assert_eq!(g.action(SystemState::new(0, 9, 1)), 9);
    }

    #[test]
    fn optimal_beats_greedy_and_random() {
        let m = model(200.0, 2, 0.8);
        let mdp = Mdp::build(&m).unwrap();
        let opt = rvia_solve(&mdp, &SolverOptions::default()).unwrap();
        let greedy = evaluate_policy(&mdp, &greedy_policy(&m)).unwrap();
        assert!(opt.gain <= greedy.gain + 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = Policy::random(mdp.space(), &mut rng);
            assert!(opt.gain <= evaluate_policy(&mdp, &p).unwrap().gain + 1e-9);
        }
    }

    #[test]
    fn policy_rejects_inadmissible_actions() {
        let sp = StateSpace::new(2, 1);
        assert!(Policy::new(sp, vec![0, 0, 0, 0, 0, 0]).is_ok());
        assert!(Policy::new(sp, vec![1, 0, 0, 0, 0, 0]).is_err());
        assert!(Policy::new(sp, vec![0; 5]).is_err());
    }
}
