use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use ehf_core::mdp::{policy_gain, rvia_solve, Mdp, PolicyRow};
use ehf_core::rl::rlearn;
use ehf_core::sim::{self, Env, SimOptions, SimReport};
use ehf_core::tradeoff::{compare_r_levels, k_threshold, tradeoff_rows, verify_combining_gain, Preference};
use ehf_core::{load_config, SystemConfig};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::policies::{parse_list, PolicySpec};
use crate::{Common, Outcome};

fn load(common: &Common) -> anyhow::Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => {
            info!("no --config given, using the default profile");
            SystemConfig::default()
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.resolve()?;
    Ok(cfg)
}

fn reject(flag: bool, name: &str, command: &str) -> anyhow::Result<()> {
    if flag {
        bail!("{name} has no effect on `{command}`");
    }
    Ok(())
}

/// Loads the config, creates the output directory and records the resolved
/// config there and in the log.
fn prepare(common: &Common, command: &str) -> anyhow::Result<SystemConfig> {
    reject(common.sweep.is_some() && command != "sweep", "--sweep", command)?;
    reject(common.trace && command != "simulate", "--trace", command)?;
    let cfg = load(common)?;
    fs::create_dir_all(&common.out).with_context(|| format!("cannot create {}", common.out.display()))?;
    let resolved = cfg.resolved()?.to_toml();
    info!("resolved config:\n{resolved}");
    fs::write(common.out.join("config.toml"), resolved)?;
    Ok(cfg)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PolicyCsvRow {
    x: u8,
    b: u32,
    q: u32,
    u: u32,
    k_star: u32,
}

impl From<PolicyRow> for PolicyCsvRow {
    fn from(r: PolicyRow) -> Self {
        Self {
            x: r.x,
            b: r.b,
            q: r.q,
            u: r.u,
            k_star: r.k_star,
        }
    }
}

pub fn solve(common: &Common) -> anyhow::Result<Outcome> {
    let cfg = prepare(common, "solve")?;
    let model = cfg.resolve()?;
    let mdp = Mdp::build(&model)?;
    let res = rvia_solve(&mdp, &cfg.solver)?;
    info!(
        "gain {:.6} after {} iterations (span {:e})",
        res.gain, res.iterations, res.final_span
    );
    write_csv(
        &common.out.join("policy.csv"),
        res.policy.rows(&mdp).into_iter().map(PolicyCsvRow::from),
    )?;

    #[derive(Serialize)]
    struct Row {
        gain: f64,
        gain_estimate: f64,
        iterations: usize,
        final_span: f64,
    }
    write_csv(
        &common.out.join("solve.csv"),
        [Row {
            gain: res.gain,
            gain_estimate: res.gain_estimate,
            iterations: res.iterations,
            final_span: res.final_span,
        }],
    )?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct ReportRow {
    policy: String,
    r: u32,
    gain_analytic: f64,
    avg_distortion: f64,
    avg_expected_cost: f64,
    block_loss_prob: f64,
    slots: u64,
    blocks_delivered: u64,
    blocks_lost: u64,
    outage_count: u64,
    discard_count: u64,
    overflow_count: u64,
    clamp_count: u64,
    seed: u64,
}

pub fn simulate(common: &Common) -> anyhow::Result<Outcome> {
    let cfg = prepare(common, "simulate")?;
    let specs = parse_list(&common.policies)?;
    let opts = SimOptions {
        strict_causality: common.strict_causality,
        initial_state: None,
    };
    let mut reports = Vec::new();
    let mut histogram = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let built = spec.build(&cfg, cfg.seed)?;
        let report = if common.trace && i == 0 {
            if specs.len() > 1 {
                warn!("tracing only the first policy, {spec}");
            }
            let path = common.out.join("trace.csv");
            let mut trace = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
            let mut failed = None;
            let report = sim::run_with(
                &built.policy,
                &built.model,
                common.horizon,
                cfg.seed,
                opts,
                |row| {
                    if failed.is_none() {
                        failed = trace.serialize(row).err();
                    }
                },
            )?;
            if let Some(e) = failed {
                return Err(e.into());
            }
            trace.flush()?;
            info!("wrote {}", path.display());
            report
        } else {
            sim::run_with(
                &built.policy,
                &built.model,
                common.horizon,
                cfg.seed,
                opts,
                |_| {},
            )?
        };
        info!(
            "{spec}: avg distortion {:.6} (analytic {:.6}), block loss {:.4}",
            report.avg_distortion, built.gain, report.block_loss_prob
        );
        if report.clamp_count > 0 {
            warn!(
                "{spec}: {} actions clamped to the battery level",
                report.clamp_count
            );
        }
        for (level, &count) in report.battery_histogram.iter().enumerate() {
            histogram.push((spec.to_string(), level as u32, count));
        }
        reports.push(report_row(spec, built.model.max_attempts, built.gain, &report));
    }
    write_csv(&common.out.join("simulate.csv"), reports)?;

    #[derive(Serialize)]
    struct HistRow {
        policy: String,
        level: u32,
        count: u64,
    }
    write_csv(
        &common.out.join("battery_histogram.csv"),
        histogram
            .into_iter()
            .map(|(policy, level, count)| HistRow { policy, level, count }),
    )?;
    Ok(Outcome::Ok)
}

fn report_row(spec: &PolicySpec, r: u32, gain: f64, rep: &SimReport) -> ReportRow {
    ReportRow {
        policy: spec.to_string(),
        r,
        gain_analytic: gain,
        avg_distortion: rep.avg_distortion,
        avg_expected_cost: rep.avg_expected_cost,
        block_loss_prob: rep.block_loss_prob,
        slots: rep.slots,
        blocks_delivered: rep.blocks_delivered,
        blocks_lost: rep.blocks_lost,
        outage_count: rep.outage_count,
        discard_count: rep.discard_count,
        overflow_count: rep.overflow_count,
        clamp_count: rep.clamp_count,
        seed: rep.seed,
    }
}

pub fn learn(common: &Common, iterations: Option<u64>) -> anyhow::Result<Outcome> {
    let cfg = prepare(common, "learn")?;
    let model = cfg.resolve()?;
    let mdp = Mdp::build(&model)?;
    let optimal = rvia_solve(&mdp, &cfg.solver)?.gain;
    let iterations = iterations.unwrap_or(cfg.rl.iterations);
    let mut env = Env::new(&model)?.strict(common.strict_causality);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluator = |p: &ehf_core::Policy| policy_gain(&mdp, p).unwrap_or(f64::NAN);
    let res = rlearn(&mut env, &cfg.rl, iterations, &mut rng, Some(&mut evaluator))?;
    let gain = policy_gain(&mdp, &res.policy)?;
    info!(
        "learned gain {gain:.6} vs optimal {optimal:.6} ({:+.2}%), rho {:.6}",
        100.0 * (gain - optimal) / optimal,
        res.rho
    );
    write_csv(&common.out.join("learning_curve.csv"), &res.curve)?;
    write_csv(
        &common.out.join("policy.csv"),
        res.policy.rows(&mdp).into_iter().map(PolicyCsvRow::from),
    )?;

    #[derive(Serialize)]
    struct Row {
        steps: u64,
        gain: f64,
        optimal_gain: f64,
        rho: f64,
        rho_updates: u64,
    }
    write_csv(
        &common.out.join("learn.csv"),
        [Row {
            steps: res.steps,
            gain,
            optimal_gain: optimal,
            rho: res.rho,
            rho_updates: res.rho_updates,
        }],
    )?;
    Ok(Outcome::Ok)
}

fn parse_axis(spec: &str) -> anyhow::Result<(String, Vec<f64>)> {
    let (name, values) = spec
        .split_once('=')
        .with_context(|| format!("--sweep `{spec}` should look like PARAM=v1,v2,..."))?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep value `{v}`"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok((name.trim().to_string(), values))
}

fn worker_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EHF_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("EHF_THREADS must be a positive integer, got `{v}`"))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

#[derive(Serialize)]
struct SweepRow {
    axis: f64,
    policy: String,
    r: u32,
    gain_analytic: f64,
    gain_empirical: f64,
    block_loss_prob: f64,
}

pub fn sweep(common: &Common) -> anyhow::Result<Outcome> {
    let Some(axis) = &common.sweep else {
        bail!("`sweep` needs --sweep PARAM=v1,v2,...");
    };
    let cfg = prepare(common, "sweep")?;
    let (param, values) = parse_axis(axis)?;
    let specs = parse_list(&common.policies)?;
    let mut points = Vec::new();
    for &v in &values {
        let mut c = cfg.clone();
        c.set_param(&param, v)?;
        c.resolve().with_context(|| format!("{param} = {v}"))?;
        points.push((v, c));
    }
    let jobs: Vec<_> = points
        .iter()
        .flat_map(|(v, c)| specs.iter().map(move |s| (*v, c, *s)))
        .collect();
    let opts = SimOptions {
        strict_causality: common.strict_causality,
        initial_state: None,
    };
    info!(
        "sweeping {param} over {} values with {} policies",
        values.len(),
        specs.len()
    );
    let rows = worker_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(v, c, spec)| -> anyhow::Result<SweepRow> {
                let built = spec.build(c, c.seed)?;
                let rep = sim::run_with(&built.policy, &built.model, common.horizon, c.seed, opts, |_| {})?;
                Ok(SweepRow {
                    axis: v,
                    policy: spec.to_string(),
                    r: built.model.max_attempts,
                    gain_analytic: built.gain,
                    gain_empirical: rep.avg_distortion,
                    block_loss_prob: rep.block_loss_prob,
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    write_csv(&common.out.join("sweep.csv"), rows)?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct Check {
    check: &'static str,
    r: u32,
    detail: String,
    pass: bool,
}

pub fn analyze(common: &Common, max_r: u32) -> anyhow::Result<Outcome> {
    if max_r < 2 {
        bail!("--max-r must be at least 2");
    }
    let cfg = prepare(common, "analyze")?;
    let model = cfg.resolve()?;
    let mut checks = Vec::new();
    for r in [2, 3] {
        let rep = verify_combining_gain(&model, r)?;
        checks.push(Check {
            check: "k_ratio",
            r,
            detail: format!("r*k_r = {} >= k_1 = {}", r * rep.k_combined, rep.k_single),
            pass: rep.k_ratio_ok,
        });
        checks.push(Check {
            check: "combined_distortion",
            r,
            detail: format!("{:.6} <= {:.6}", rep.combined_distortion, rep.single_distortion),
            pass: rep.distortion_gain_ok,
        });
    }
    // A k_r above the threshold must coincide with "allow r attempts" winning.
    for r in 2..=max_r {
        let cmp = compare_r_levels(&model, r)?;
        let k_v = k_threshold(&model, r)?;
        let k_r = cmp.k_r as f64;
        let consistent = match cmp.preference {
            Preference::ABetter => k_r > k_v,
            Preference::BBetter => k_r < k_v,
            Preference::Equal => (k_r - k_v).abs() <= 1e-6 * k_v,
        };
        checks.push(Check {
            check: "r_comparison",
            r,
            detail: format!(
                "{:?}: k_r = {} k_V = {k_v:.4} D_A = {:.6} D_B = {:.6}",
                cmp.preference, cmp.k_r, cmp.d_a, cmp.d_b
            ),
            pass: consistent,
        });
    }
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        let word = if c.pass { "PASS" } else { "FAIL" };
        writeln!(stdout, "{word} {} r={} {}", c.check, c.r, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    write_csv(&common.out.join("analyze.csv"), &checks)?;
    if failed > 0 {
        warn!("{failed} of {} checks failed", checks.len());
        return Ok(Outcome::VerificationFailed);
    }
    Ok(Outcome::Ok)
}

pub fn analyze_tradeoff(common: &Common) -> anyhow::Result<Outcome> {
    let cfg = prepare(common, "analyze-tradeoff")?;
    let model = cfg.resolve()?;
    write_csv(&common.out.join("tradeoff.csv"), tradeoff_rows(&model)?)?;
    Ok(Outcome::Ok)
}
