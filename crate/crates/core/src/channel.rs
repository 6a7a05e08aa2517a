//! Block Rayleigh fading link: path loss, mean SNR and outage.
//!
//! The fade power `|H|^2` is a unit-mean exponential variate drawn once per
//! slot (quasi-static). A packet coded at rate `R` bits per channel use gets
//! through iff `log2(1 + |H|^2 * snr) >= R`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power spectral density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Transmit power, W.
    pub tx_power: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    /// Far-field reference distance, m.
    pub ref_distance: f64,
    /// Link distance, m.
    pub distance: f64,
    pub pathloss_exp: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
    mean_snr: f64,
}

impl ChannelModel {
    pub fn new(
        tx_power: f64,
        carrier_freq: f64,
        ref_distance: f64,
        distance: f64,
        pathloss_exp: f64,
        noise_psd: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        let mut model = Self {
            tx_power,
            carrier_freq,
            ref_distance,
            distance,
            pathloss_exp,
            noise_psd,
            bandwidth,
            mean_snr: 0.0,
        };
        model.mean_snr = mean_snr(&model)?;
        Ok(model)
    }

    /// Replaces the path-loss derived SNR, e.g. with `f64::INFINITY` for an
    /// outage-free link.
    pub fn with_snr_override(mut self, snr: f64) -> Result<Self> {
        if !(snr > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "SNR override must be positive, got {snr}"
            )));
        }
        self.mean_snr = snr;
        Ok(self)
    }

    pub fn with_distance(&self, distance: f64) -> Result<Self> {
        Self::new(
            self.tx_power,
            self.carrier_freq,
            self.ref_distance,
            distance,
            self.pathloss_exp,
            self.noise_psd,
            self.bandwidth,
        )
    }

    /// Cached mean SNR (linear).
    pub fn snr(&self) -> f64 {
        self.mean_snr
    }

    pub fn outage(&self, rate: f64) -> Result<f64> {
        outage_probability(rate, self.mean_snr)
    }
}

/// Expected receiver SNR `P_tx / (A^2 (d/d0)^eta N0 W)` with `A = 4 pi d0 f0 / c`.
pub fn mean_snr(model: &ChannelModel) -> Result<f64> {
    let fields = [
        ("tx_power", model.tx_power),
        ("carrier_freq", model.carrier_freq),
        ("ref_distance", model.ref_distance),
        ("distance", model.distance),
        ("noise_psd", model.noise_psd),
        ("bandwidth", model.bandwidth),
    ];
    for (name, v) in fields {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if !(model.pathloss_exp >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "pathloss_exp must be >= 2, got {}",
            model.pathloss_exp
        )));
    }
    let a = 4.0 * std::f64::consts::PI * model.ref_distance * model.carrier_freq / SPEED_OF_LIGHT;
    let pathloss = a * a * (model.distance / model.ref_distance).powf(model.pathloss_exp);
    let noise = model.noise_psd * model.bandwidth;
    Ok(model.tx_power / (pathloss * noise))
}

/// Rayleigh outage probability `1 - exp(-(2^R - 1) / snr)`.
pub fn outage_probability(rate: f64, snr: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coding rate must be >= 0, got {rate}"
        )));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean SNR must be positive, got {snr}"
        )));
    }
    // exp_m1 keeps precision when the threshold is tiny
    Ok(-(-(rate.exp2() - 1.0) / snr).exp_m1())
}

/// Draws one quasi-static fade and reports whether the packet decodes.
pub fn sample_transmission<R: Rng + ?Sized>(rate: f64, snr: f64, rng: &mut R) -> Result<bool> {
    outage_probability(rate, snr)?;
    let fade: f64 = Exp1.sample(rng);
    let threshold = (rate.exp2() - 1.0) / snr;
    Ok(fade >= threshold)
}
