//! TOML configuration: every physical, coding, energy, harvesting, solver and
//! learning parameter of a run, with defaults for anything omitted.
//!
//! Battery size and mean income can be given either in quanta or normalized
//! by `e_max`, the largest single-block slot cost (`battery_norm`,
//! `mean_income_norm`). Setting both forms of the same knob is an error.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_per_hz_to_watts, ChannelModel};
use crate::distortion::DistortionModel;
use crate::energy::{CalibratedCosts, EnergyCosts, EnergyModel, HarvestModel, PhysicalCosts};
use crate::error::{Error, Result};
use crate::mdp::SolverOptions;
use crate::model::SystemModel;
use crate::rl::Hyperparams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// W.
    pub tx_power: f64,
    /// Hz.
    pub carrier_freq: f64,
    /// m.
    pub ref_distance: f64,
    /// m.
    pub distance: f64,
    pub pathloss_exp: f64,
    pub noise_psd_dbm_hz: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Linear mean SNR replacing the path-loss value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_override: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            tx_power: 0.025,
            carrier_freq: 868.3e6,
            ref_distance: 1.0,
            distance: 200.0,
            pathloss_exp: 3.5,
            noise_psd_dbm_hz: -167.0,
            bandwidth: 125e3,
            snr_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortionConfig {
    pub a: f64,
    pub b: f64,
    pub m: u32,
    pub d_floor: f64,
    pub block_bits: u32,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            a: 0.35,
            b: 19.9,
            m: 30,
            d_floor: 100.0,
            block_bits: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// `r`, transmission attempts per block.
    pub max_attempts: u32,
    /// Channel uses per slot, `S`.
    pub slot_bits: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            max_attempts: 2,
            slot_bits: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnergyMode {
    #[default]
    Calibrated,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub mode: EnergyMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub battery_capacity: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub battery_norm: Option<f64>,
    pub calibrated: CalibratedCosts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalCosts>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            mode: EnergyMode::Calibrated,
            battery_capacity: None,
            battery_norm: None,
            calibrated: CalibratedCosts::default(),
            physical: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    pub p_good_to_bad: f64,
    /// Defaults to three times `p_good_to_bad`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_bad_to_good: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_income: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_income_norm: Option<f64>,
    pub income_variance: f64,
    /// Defaults to the battery capacity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_income: Option<u32>,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self {
            p_good_to_bad: 0.1,
            p_bad_to_good: None,
            mean_income: None,
            mean_income_norm: None,
            income_variance: 10.0,
            max_income: None,
        }
    }
}

pub const DEFAULT_BATTERY_NORM: f64 = 1.0;
pub const DEFAULT_MEAN_INCOME_NORM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub seed: u64,
    pub channel: ChannelConfig,
    pub distortion: DistortionConfig,
    pub protocol: ProtocolConfig,
    pub energy: EnergyConfig,
    pub harvest: HarvestConfig,
    pub solver: SolverOptions,
    pub rl: Hyperparams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            channel: ChannelConfig::default(),
            distortion: DistortionConfig::default(),
            protocol: ProtocolConfig::default(),
            energy: EnergyConfig::default(),
            harvest: HarvestConfig::default(),
            solver: SolverOptions::default(),
            rl: Hyperparams::default(),
        }
    }
}

fn both_set(a: &str, b: &str) -> Error {
    Error::Config(format!("set at most one of `{a}` and `{b}`"))
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(parse(text)?.0)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    fn energy_costs(&self) -> Result<EnergyCosts> {
        match self.energy.mode {
            EnergyMode::Calibrated => Ok(EnergyCosts::Calibrated(self.energy.calibrated)),
            EnergyMode::Physical => {
                self.energy.physical.map(EnergyCosts::Physical).ok_or_else(|| {
                    Error::Config("mode = \"physical\" needs an [energy.physical] table".into())
                })
            }
        }
    }

    /// Builds and validates the model, resolving normalized knobs against `e_max`.
    pub fn resolve(&self) -> Result<SystemModel> {
        let ch = &self.channel;
        let mut channel = ChannelModel::new(
            ch.tx_power,
            ch.carrier_freq,
            ch.ref_distance,
            ch.distance,
            ch.pathloss_exp,
            dbm_per_hz_to_watts(ch.noise_psd_dbm_hz),
            ch.bandwidth,
        )?;
        if let Some(snr) = ch.snr_override {
            channel = channel.with_snr_override(snr)?;
        }
        let d = &self.distortion;
        let distortion =
            DistortionModel::new(d.a, d.b, d.m, d.d_floor, d.block_bits, self.protocol.slot_bits)?;

        let costs = self.energy_costs()?;
        let e_max = EnergyModel::new(costs, d.m, d.block_bits, 0)?.max_slot_energy();
        let capacity = match (self.energy.battery_capacity, self.energy.battery_norm) {
            (Some(_), Some(_)) => return Err(both_set("battery_capacity", "battery_norm")),
            (Some(b), None) => b,
            (None, norm) => {
                let norm = norm.unwrap_or(DEFAULT_BATTERY_NORM);
                if !(norm >= 0.0 && norm.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "battery_norm must be nonnegative, got {norm}"
                    )));
                }
                // slack so that e.g. 0.8 * 25 lands on 20, not 19
                (norm * e_max as f64 + 1e-9).floor() as u32
            }
        };
        let energy = EnergyModel::new(costs, d.m, d.block_bits, capacity)?;

        let h = &self.harvest;
        let mean_income = match (h.mean_income, h.mean_income_norm) {
            (Some(_), Some(_)) => return Err(both_set("mean_income", "mean_income_norm")),
            (Some(mu), None) => mu,
            (None, norm) => norm.unwrap_or(DEFAULT_MEAN_INCOME_NORM) * e_max as f64,
        };
        let harvest = HarvestModel {
            p_good_to_bad: h.p_good_to_bad,
            p_bad_to_good: h.p_bad_to_good.unwrap_or(3.0 * h.p_good_to_bad),
            mean_income,
            income_variance: h.income_variance,
            max_income: h.max_income.unwrap_or(capacity.max(1)),
        };
        SystemModel::new(channel, distortion, energy, harvest, self.protocol.max_attempts)
    }

    /// Copy with every normalized or implied knob replaced by its explicit
    /// value; loading it again yields the same model.
    pub fn resolved(&self) -> Result<Self> {
        let model = self.resolve()?;
        let mut out = self.clone();
        out.energy.battery_capacity = Some(model.battery_capacity());
        out.energy.battery_norm = None;
        out.harvest.p_bad_to_good = Some(model.harvest.p_bad_to_good);
        out.harvest.mean_income = Some(model.harvest.mean_income);
        out.harvest.mean_income_norm = None;
        out.harvest.max_income = Some(model.harvest.max_income);
        Ok(out)
    }

    /// Sets one scalar knob by name, as used by sweeps.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let as_u32 = |v: f64| -> Result<u32> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(Error::Config(format!(
                    "`{name}` needs a nonnegative integer, got {v}"
                )))
            }
        };
        match name {
            "d" | "distance" => self.channel.distance = value,
            "snr" | "snr_override" => self.channel.snr_override = Some(value),
            "b_norm" | "battery_norm" => {
                self.energy.battery_norm = Some(value);
                self.energy.battery_capacity = None;
            }
            "B" | "battery_capacity" => {
                self.energy.battery_capacity = Some(as_u32(value)?);
                self.energy.battery_norm = None;
            }
            "mu_norm" | "mean_income_norm" => {
                self.harvest.mean_income_norm = Some(value);
                self.harvest.mean_income = None;
            }
            "mu" | "mean_income" => {
                self.harvest.mean_income = Some(value);
                self.harvest.mean_income_norm = None;
            }
            "r" | "max_attempts" => self.protocol.max_attempts = as_u32(value)?,
            "S" | "slot_bits" => self.protocol.slot_bits = as_u32(value)?,
            "d_floor" => self.distortion.d_floor = value,
            "p_good_to_bad" => self.harvest.p_good_to_bad = value,
            "income_variance" => self.harvest.income_variance = value,
            _ => return Err(Error::Config(format!("unknown parameter `{name}`"))),
        }
        Ok(())
    }
}

/// Dotted names of keys present in `full` but absent from `given`.
fn missing_keys(given: &toml::Table, full: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in full {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (given.get(key), value) {
            (None, toml::Value::Table(f)) => missing_keys(&toml::Table::new(), f, &path, out),
            (None, _) => out.push(path),
            (Some(toml::Value::Table(g)), toml::Value::Table(f)) => missing_keys(g, f, &path, out),
            _ => {}
        }
    }
}

fn parse(text: &str) -> Result<(SystemConfig, Vec<String>)> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let full: toml::Table = toml::from_str(&cfg.to_toml()).expect("round trip");
    let mut defaulted = Vec::new();
    missing_keys(&table, &full, "", &mut defaulted);
    Ok((cfg, defaulted))
}

/// Parses and validates a config file, returning it with the list of keys
/// that took their default value.
pub fn load_config_with_defaults(path: impl AsRef<Path>) -> Result<(SystemConfig, Vec<String>)> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let (cfg, defaulted) = parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    cfg.resolve()?;
    Ok((cfg, defaulted))
}

/// Parses and validates a config file; defaulted keys are logged at info level.
pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let (cfg, defaulted) = load_config_with_defaults(path)?;
    if !defaulted.is_empty() {
        log::info!("defaults applied: {}", defaulted.join(", "));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_profile() {
        let (cfg, defaulted) = parse("").unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert!(defaulted.contains(&"channel.distance".to_string()));
        assert!(defaulted.contains(&"seed".to_string()));
        let m = cfg.resolve().unwrap();
        assert_eq!(m.energy.max_slot_energy(), 24);
        assert_eq!(m.battery_capacity(), 24);
        assert_eq!(m.harvest.mean_income, 24.0);
        assert_eq!(m.harvest.max_income, 24);
        assert_eq!(m.harvest.p_bad_to_good, 0.30000000000000004);
        assert_eq!(m.max_attempts, 2);
    }

    #[test]
    fn normalized_battery() {
        let cfg = SystemConfig::from_toml_str("[energy]\nbattery_norm = 0.8\n").unwrap();
        assert_eq!(cfg.resolve().unwrap().battery_capacity(), 19);
        let cfg = SystemConfig::from_toml_str("[energy]\nbattery_capacity = 7\n").unwrap();
        assert_eq!(cfg.resolve().unwrap().battery_capacity(), 7);
    }

    #[test]
    fn conflicting_knobs_are_rejected() {
        let cfg =
            SystemConfig::from_toml_str("[energy]\nbattery_norm = 0.8\nbattery_capacity = 3\n").unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
        let cfg =
            SystemConfig::from_toml_str("[harvest]\nmean_income = 3.0\nmean_income_norm = 1.0\n").unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn validation_errors_name_the_invariant() {
        let cfg = SystemConfig::from_toml_str("[distortion]\na = 1.5\n").unwrap();
        assert!(cfg.resolve().unwrap_err().to_string().contains("(0, 1)"));
        let cfg = SystemConfig::from_toml_str("[distortion]\nd_floor = 10.0\n").unwrap();
        assert!(cfg.resolve().unwrap_err().to_string().contains("D(1) >= d_floor"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = SystemConfig::from_toml_str("seed = 1\n[channel]\ndistance = \n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = SystemConfig::from_toml_str("[channel]\nfrobnicate = 2\n").unwrap_err();
        assert!(err.to_string().contains("frobnicate"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = SystemConfig::default();
        cfg.set_param("b_norm", 0.6).unwrap();
        cfg.set_param("mu_norm", 0.7).unwrap();
        cfg.set_param("r", 3.0).unwrap();
        let resolved = cfg.resolved().unwrap();
        let back = SystemConfig::from_toml_str(&resolved.to_toml()).unwrap();
        assert_eq!(back, resolved);
        assert_eq!(back.resolve().unwrap(), cfg.resolve().unwrap());
    }

    #[test]
    fn physical_mode_needs_its_table() {
        let cfg = SystemConfig::from_toml_str("[energy]\nmode = \"physical\"\n").unwrap();
        assert!(cfg.resolve().is_err());
        let text = "[energy]\nmode = \"physical\"\nbattery_capacity = 30\n[energy.physical]\n\
            cpu_energy_per_cycle = 1e-3\ncycles_slope = 0.8\ncycles_offset = 0.2\namp_efficiency = 1.0\n\
            slot_duration = 0.4\ntx_power = 0.025\nsense_energy = 1e-3\nsync_energy = 1e-3\n\
            circuit_power = 0.005\nquantum = 1e-3\n";
        let m = SystemConfig::from_toml_str(text).unwrap().resolve().unwrap();
        assert_eq!(m.energy.transmission_energy(), 10);
    }

    #[test]
    fn unknown_sweep_parameter() {
        let mut cfg = SystemConfig::default();
        assert!(cfg.set_param("warp", 1.0).is_err());
        assert!(cfg.set_param("r", 1.5).is_err());
        cfg.set_param("d", 150.0).unwrap();
        assert_eq!(cfg.channel.distance, 150.0);
    }
}
