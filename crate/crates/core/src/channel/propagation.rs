use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sample amplitudes are √mW, so `|x|²` is power in milliwatts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub carrier_freq: f64,
    pub path_loss_exponent: f64,
    pub wall_loss_db: f64,
    pub n_walls: u32,
    /// Receiver noise density; `None` disables noise.
    pub noise_psd_dbm_hz: Option<f64>,
    /// When set, noise is sized to this SNR over the received signal power
    /// and `noise_psd_dbm_hz` is ignored.
    pub fixed_snr_db: Option<f64>,
    pub tx_power_dbm: f64,
    pub rng_seed: u64,
    /// Permit exponents below free space.
    pub allow_sub_free_space: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 2.45e9,
            path_loss_exponent: 2.0,
            wall_loss_db: 10.0,
            n_walls: 0,
            noise_psd_dbm_hz: Some(-168.0),
            fixed_snr_db: None,
            tx_power_dbm: 20.0,
            rng_seed: 0,
            allow_sub_free_space: false,
        }
    }
}

impl ChannelConfig {
    pub fn noiseless() -> Self {
        Self {
            noise_psd_dbm_hz: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return Err(invalid("carrier frequency must be positive"));
        }
        if !(self.path_loss_exponent > 0.0) || (self.path_loss_exponent < 2.0 && !self.allow_sub_free_space) {
            return Err(invalid(format!(
                "path loss exponent {} is below free space",
                self.path_loss_exponent
            )));
        }
        if !self.wall_loss_db.is_finite() || !self.tx_power_dbm.is_finite() {
            return Err(invalid("wall loss and transmit power must be finite"));
        }
        if self.noise_psd_dbm_hz.is_some_and(|p| !p.is_finite()) || self.fixed_snr_db.is_some_and(|s| !s.is_finite()) {
            return Err(invalid("noise settings must be finite"));
        }
        Ok(())
    }

    /// Noise variance per complex sample at `sample_rate`, in mW.
    pub fn noise_variance(&self, sample_rate: f64) -> f64 {
        self.noise_psd_dbm_hz
            .map_or(0.0, |psd| 10f64.powf(psd / 10.0) * sample_rate)
    }
}

/// `10·n·log10(4π d f / c)` plus the wall penalty; `n = 2` is Friis free space.
pub fn path_loss_db(d: f64, f: f64, cfg: &ChannelConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    let free = 10.0 * cfg.path_loss_exponent * (4.0 * PI * d * f / SPEED_OF_LIGHT).log10();
    Ok(free + cfg.n_walls as f64 * cfg.wall_loss_db)
}

/// Attenuates by `loss_db` and adds circularly symmetric Gaussian noise
/// seeded from `cfg.rng_seed`.
pub fn apply_channel(tx: &IqStream, loss_db: f64, cfg: &ChannelConfig) -> Result<IqStream> {
    if !loss_db.is_finite() {
        return Err(invalid(format!("loss must be finite, got {loss_db}")));
    }
    let gain = 10f64.powf(-loss_db / 20.0);
    let mut out = tx.clone().scaled(gain);
    let variance = match cfg.fixed_snr_db {
        Some(snr) => out.power() / 10f64.powf(snr / 10.0),
        None => cfg.noise_variance(tx.sample_rate),
    };
    if variance > 0.0 {
        let sigma = (variance / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        for s in &mut out.samples {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(re, im) * sigma;
        }
    }
    Ok(out)
}
