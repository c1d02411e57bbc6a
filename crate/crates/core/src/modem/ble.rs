//! BLE 1M PHY: Gaussian-filtered FSK and a one-sample phase-difference discriminator.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BleParams {
    pub bit_rate: f64,
    /// Gaussian filter bandwidth-time product.
    pub bt: f64,
    pub mod_index: f64,
    pub samples_per_bit: usize,
}

impl Default for BleParams {
    fn default() -> Self {
        Self {
            bit_rate: 1e6,
            bt: 0.5,
            mod_index: 0.5,
            samples_per_bit: 8,
        }
    }
}

impl BleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bit_rate > 0.0 && self.bt > 0.0 && self.mod_index > 0.0) || self.samples_per_bit < 2 {
            return Err(invalid(
                "BLE needs positive rate, BT, modulation index and >= 2 samples per bit",
            ));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.bit_rate * self.samples_per_bit as f64
    }

    /// Peak frequency deviation `h · R_b / 2`.
    pub fn deviation(&self) -> f64 {
        self.mod_index * self.bit_rate / 2.0
    }

    /// Unit-sum Gaussian taps spanning four bit periods.
    fn gaussian_taps(&self) -> Vec<f64> {
        let spb = self.samples_per_bit as f64;
        let sigma = (2f64.ln()).sqrt() / (TAU * self.bt) * spb;
        let half = 2 * self.samples_per_bit as i64;
        let taps: Vec<f64> = (-half..=half)
            .map(|k| (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<IqStream> {
        self.validate()?;
        if bits.is_empty() {
            return Err(invalid("BLE payload must not be empty"));
        }
        let spb = self.samples_per_bit;
        let nrz: Vec<f64> = bits
            .iter()
            .flat_map(|&b| std::iter::repeat_n(if b & 1 == 1 { 1.0 } else { -1.0 }, spb))
            .collect();
        let taps = self.gaussian_taps();
        let half = taps.len() / 2;
        let fs = self.sample_rate();
        let dev = self.deviation();
        let mut phase = 0.0;
        let samples = (0..nrz.len())
            .map(|n| {
                let f: f64 = taps
                    .iter()
                    .enumerate()
                    .filter_map(|(j, t)| {
                        let idx = (n + half).checked_sub(j)?;
                        nrz.get(idx).map(|a| a * t)
                    })
                    .sum();
                phase += TAU * dev * f / fs;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        IqStream::new(samples, fs)
    }

    /// Sums the discriminator over each bit period and slices on sign.
    pub fn demodulate(&self, rx: &IqStream) -> Result<Vec<u8>> {
        self.validate()?;
        let spb = self.samples_per_bit;
        if rx.len() < spb {
            return Err(Error::TooShort {
                need: spb,
                got: rx.len(),
            });
        }
        let d = discriminator(rx);
        Ok((0..rx.len() / spb)
            .map(|k| {
                let s: f64 = d[k * spb..(k + 1) * spb].iter().sum();
                u8::from(s > 0.0)
            })
            .collect())
    }
}

/// `arg(x[n] · conj(x[n−1]))`, zero at `n = 0`.
pub fn discriminator(rx: &IqStream) -> Vec<f64> {
    let x = &rx.samples;
    std::iter::once(0.0)
        .chain(x.windows(2).map(|w| {
            let d = (w[1] * w[0].conj()).arg();
            d.clamp(-PI, PI)
        }))
        .take(x.len())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_constant_envelope() {
        let p = BleParams::default();
        let bits: Vec<u8> = (0..200).map(|k| ((k * 13 + k / 5) % 3 == 0) as u8).collect();
        let rx = p.modulate(&bits).unwrap();
        assert!(rx.samples.iter().all(|s| (s.norm() - 1.0).abs() < 1e-12));
        assert_eq!(p.demodulate(&rx).unwrap(), bits);
    }

    #[test]
    fn alternating_bits_alternate_discriminator_sign() {
        let p = BleParams::default();
        let bits: Vec<u8> = (0..32).map(|k| (k % 2 == 0) as u8).collect();
        let rx = p.modulate(&bits).unwrap();
        let d = discriminator(&rx);
        let spb = p.samples_per_bit;
        for k in 1..31 {
            let centre = d[k * spb + spb / 2];
            assert_eq!(centre > 0.0, bits[k] == 1, "bit {k}");
        }
    }

    #[test]
    fn steady_ones_reach_full_deviation() {
        let p = BleParams::default();
        let rx = p.modulate(&[1; 16]).unwrap();
        let d = discriminator(&rx);
        let f = d[64] * p.sample_rate() / TAU;
        assert!((f - 250e3).abs() < 1.0);
    }
}
