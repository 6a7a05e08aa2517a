use ehf_core::markov::stationary_direct;
use ehf_core::mdp::{rvia_solve, SolverOptions};
use ehf_core::rl::{rlearn, Hyperparams};
use ehf_core::sim::{self, Env};
use ehf_core::{evaluate_policy, greedy_policy, Mdp, Policy, SystemConfig, SystemModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny() -> SystemModel {
    let mut c = SystemConfig::default();
    c.channel.distance = 500.0;
    c.energy.battery_capacity = Some(3);
    c.energy.calibrated.transmission = 1;
    c.energy.calibrated.circuitry_idle = 0;
    c.energy.calibrated.circuitry_active = 1;
    c.energy.calibrated.proc_scale = 1.0;
    c.harvest.max_income = Some(2);
    c.harvest.mean_income = Some(1.5);
    c.resolve().unwrap()
}

#[test]
fn power_iteration_agrees_with_direct_solve() {
    let m = tiny();
    let mdp = Mdp::build(&m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let p = Policy::random(mdp.space(), &mut rng);
        let ev = evaluate_policy(&mdp, &p).unwrap();
        if let Some(pi) = stationary_direct(&mdp.policy_matrix(&p)) {
            for (a, b) in pi.iter().zip(&ev.steady_state) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn rlearn_matches_rvia_on_the_tiny_instance() {
    let m = tiny();
    let mdp = Mdp::build(&m).unwrap();
    let opt = rvia_solve(&mdp, &SolverOptions::default()).unwrap().gain;
    let mut gaps: Vec<f64> = (0..5)
        .map(|seed| {
            let mut env = Env::new(&m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let res = rlearn(&mut env, &Hyperparams::default(), 300_000, &mut rng, None).unwrap();
            (evaluate_policy(&mdp, &res.policy).unwrap().gain - opt) / opt
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    assert!(gaps[2] <= 0.05, "{gaps:?}");
}

#[test]
fn longer_runs_get_closer_to_the_exact_gain() {
    let mut cfg = SystemConfig::default();
    cfg.energy.battery_norm = Some(0.8);
    let m = cfg.resolve().unwrap();
    let mdp = Mdp::build(&m).unwrap();
    let policy = greedy_policy(&m);
    let exact = evaluate_policy(&mdp, &policy).unwrap().gain;
    let gap = |horizon| {
        let mut g: Vec<f64> = (1..=5)
            .map(|seed| (sim::run(&policy, &m, horizon, seed).unwrap().avg_distortion - exact).abs())
            .collect();
        g.sort_by(f64::total_cmp);
        g[2]
    };
    assert!(gap(1_000_000) <= gap(10_000));
}

#[test]
fn policy_export_rows_are_state_ordered() {
    let m = tiny();
    let mdp = Mdp::build(&m).unwrap();
    let res = rvia_solve(&mdp, &SolverOptions::default()).unwrap();
    let rows = res.policy.rows(&mdp);
    assert_eq!(rows.len(), 16);
    let keys: Vec<_> = rows.iter().map(|r| (r.x, r.b, r.q)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(rows.iter().all(|r| r.u <= r.b));
}
