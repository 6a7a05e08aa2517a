use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context};
use ehf_core::mdp::{evaluate_policy, greedy_policy, rvia_solve, Mdp, Policy};
use ehf_core::rl::rlearn;
use ehf_core::sim::Env;
use ehf_core::{SystemConfig, SystemModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Optimal,
    Greedy,
    Learned,
}

/// One entry of `--policies`: a policy family with an optional attempt limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicySpec {
    pub kind: Kind,
    pub r: Option<u32>,
}

impl FromStr for PolicySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let kind = match name.trim() {
            "optimal" => Kind::Optimal,
            "greedy" => Kind::Greedy,
            "learned" => Kind::Learned,
            other => bail!("unknown policy `{other}` (expected optimal, greedy or learned)"),
        };
        let r = match rest {
            None => None,
            Some(arg) => {
                let value = arg
                    .trim()
                    .strip_prefix("r=")
                    .with_context(|| format!("policy option `{arg}` should look like r=N"))?;
                let r: u32 = value.parse().with_context(|| format!("bad r in `{s}`"))?;
                if r == 0 {
                    bail!("r must be at least 1 in `{s}`");
                }
                Some(r)
            }
        };
        Ok(Self { kind, r })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            Kind::Optimal => "optimal",
            Kind::Greedy => "greedy",
            Kind::Learned => "learned",
        };
        match self.r {
            Some(r) => write!(f, "{name}:r={r}"),
            None => f.write_str(name),
        }
    }
}

pub fn parse_list(list: &str) -> anyhow::Result<Vec<PolicySpec>> {
    let specs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<anyhow::Result<Vec<PolicySpec>>>()?;
    if specs.is_empty() {
        bail!("--policies is empty");
    }
    Ok(specs)
}

pub struct Built {
    pub model: SystemModel,
    pub policy: Policy,
    pub gain: f64,
}

impl PolicySpec {
    pub fn build(&self, cfg: &SystemConfig, seed: u64) -> anyhow::Result<Built> {
        let mut cfg = cfg.clone();
        if let Some(r) = self.r {
            cfg.protocol.max_attempts = r;
        }
        let model = cfg.resolve()?;
        let mdp = Mdp::build(&model)?;
        let (policy, gain) = match self.kind {
            Kind::Optimal => {
                let res = rvia_solve(&mdp, &cfg.solver)?;
                (res.policy, res.gain)
            }
            Kind::Greedy => {
                let p = greedy_policy(&model);
                let gain = evaluate_policy(&mdp, &p)?.gain;
                (p, gain)
            }
            Kind::Learned => {
                let mut env = Env::new(&model)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let res = rlearn(&mut env, &cfg.rl, cfg.rl.iterations, &mut rng, None)?;
                let gain = evaluate_policy(&mdp, &res.policy)?.gain;
                (res.policy, gain)
            }
        };
        Ok(Built { model, policy, gain })
    }
}
