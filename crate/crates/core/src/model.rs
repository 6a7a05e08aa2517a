use crate::channel::ChannelModel;
use crate::distortion::DistortionModel;
use crate::energy::{EnergyModel, HarvestModel};
use crate::error::{Error, Result};

/// Fully resolved and validated parameters of one sensor/link instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemModel {
    pub channel: ChannelModel,
    pub distortion: DistortionModel,
    pub energy: EnergyModel,
    pub harvest: HarvestModel,
    /// Maximum transmission attempts per block, `r`.
    pub max_attempts: u32,
}

impl SystemModel {
    pub fn new(
        channel: ChannelModel,
        distortion: DistortionModel,
        energy: EnergyModel,
        harvest: HarvestModel,
        max_attempts: u32,
    ) -> Result<Self> {
        let model = Self {
            channel,
            distortion,
            energy,
            harvest,
            max_attempts,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.distortion.validate()?;
        self.energy.validate()?;
        self.harvest.validate()?;
        if self.max_attempts < 1 {
            return Err(Error::InvalidParameter(
                "max_attempts (r) must be at least 1".into(),
            ));
        }
        if self.energy.m != self.distortion.m || self.energy.block_bits != self.distortion.block_bits {
            return Err(Error::InvalidParameter(
                "energy and distortion models disagree on m or block size".into(),
            ));
        }
        Ok(())
    }

    pub fn snr(&self) -> f64 {
        self.channel.snr()
    }

    pub fn battery_capacity(&self) -> u32 {
        self.energy.battery_capacity
    }

    pub fn d_floor(&self) -> f64 {
        self.distortion.d_floor
    }

    pub fn with_max_attempts(&self, r: u32) -> Result<Self> {
        let mut m = *self;
        m.max_attempts = r;
        m.validate()?;
        Ok(m)
    }
}
