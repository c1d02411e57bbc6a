//! 802.11a/g-style OFDM: 64-point IFFT, 48 data subcarriers, 16-sample
//! cyclic prefix, QPSK or 16-QAM. No pilots, scrambler or coding.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constellation {
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl Constellation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }

    fn map(self, bits: &[u8]) -> Complex64 {
        match self {
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Complex64::new(level2(bits[0]) * s, level2(bits[1]) * s)
            }
            Constellation::Qam16 => {
                let s = 1.0 / 10f64.sqrt();
                Complex64::new(level4(bits[0], bits[1]) * s, level4(bits[2], bits[3]) * s)
            }
        }
    }

    fn slice(self, y: Complex64, out: &mut Vec<u8>) {
        match self {
            Constellation::Qpsk => {
                out.push(u8::from(y.re > 0.0));
                out.push(u8::from(y.im > 0.0));
            }
            Constellation::Qam16 => {
                let s = 10f64.sqrt();
                for v in [y.re * s, y.im * s] {
                    out.push(u8::from(v > 0.0));
                    out.push(u8::from(v.abs() < 2.0));
                }
            }
        }
    }
}

fn level2(b: u8) -> f64 {
    if b & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Gray mapping: 00 → −3, 01 → −1, 11 → +1, 10 → +3.
fn level4(b0: u8, b1: u8) -> f64 {
    match (b0 & 1, b1 & 1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmParams {
    pub fft: usize,
    pub data_subcarriers: usize,
    pub cp_len: usize,
    pub constellation: Constellation,
    pub sample_rate: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            fft: 64,
            data_subcarriers: 48,
            cp_len: 16,
            constellation: Constellation::Qpsk,
            sample_rate: 20e6,
        }
    }
}

/// Signed indices ±1..±26, skipping the pilot positions ±7 and ±21.
pub fn data_subcarrier_indices() -> Vec<i32> {
    (-26..=26)
        .filter(|k: &i32| *k != 0 && k.abs() != 7 && k.abs() != 21)
        .collect()
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.fft != 64 || self.data_subcarriers != 48 || self.cp_len != 16 {
            return Err(invalid(
                "OFDM numerology is fixed at 64-FFT, 48 data subcarriers, 16 CP",
            ));
        }
        if !(self.sample_rate > 0.0) {
            return Err(invalid("OFDM sample rate must be positive"));
        }
        Ok(())
    }

    pub fn bits_per_ofdm_symbol(&self) -> usize {
        self.data_subcarriers * self.constellation.bits_per_symbol()
    }

    pub fn nominal_rate(&self) -> f64 {
        self.bits_per_ofdm_symbol() as f64 * self.sample_rate / (self.fft + self.cp_len) as f64
    }

    /// Highest occupied subcarrier frequency.
    pub fn occupied_half_bandwidth(&self) -> f64 {
        26.0 * self.sample_rate / self.fft as f64
    }

    /// The stream is scaled so its peak magnitude is 1.
    pub fn modulate(&self, bits: &[u8]) -> Result<IqStream> {
        self.validate()?;
        let per = self.bits_per_ofdm_symbol();
        if bits.is_empty() || bits.len() % per != 0 {
            return Err(Error::LengthMismatch {
                what: "OFDM bits must be a non-zero multiple of the bits per OFDM symbol",
                left: bits.len(),
                right: per,
            });
        }
        let n = self.fft;
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let bps = self.constellation.bits_per_symbol();
        let carriers = data_subcarrier_indices();
        let mut samples = Vec::with_capacity(bits.len() / per * (n + self.cp_len));
        let mut freq = vec![Complex64::new(0.0, 0.0); n];
        for block in bits.chunks_exact(per) {
            freq.iter_mut().for_each(|f| *f = Complex64::new(0.0, 0.0));
            for (k, sym) in carriers.iter().zip(block.chunks_exact(bps)) {
                freq[k.rem_euclid(n as i32) as usize] = self.constellation.map(sym);
            }
            ifft.process(&mut freq);
            samples.extend_from_slice(&freq[n - self.cp_len..]);
            samples.extend_from_slice(&freq);
        }
        let peak = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        samples.iter_mut().for_each(|s| *s /= peak);
        IqStream::new(samples, self.sample_rate)
    }

    /// Strips the CP, takes the FFT and hard-slices each data subcarrier.
    /// The overall gain is estimated blindly from the mean subcarrier energy,
    /// which is 1 for both constellations.
    pub fn demodulate(&self, rx: &IqStream) -> Result<Vec<u8>> {
        self.validate()?;
        let (n, cp) = (self.fft, self.cp_len);
        if rx.len() < n + cp {
            return Err(Error::TooShort {
                need: n + cp,
                got: rx.len(),
            });
        }
        let fft = FftPlanner::new().plan_fft_forward(n);
        let carriers = data_subcarrier_indices();
        let mut values = Vec::with_capacity(rx.len() / (n + cp) * carriers.len());
        for sym in rx.samples.chunks_exact(n + cp) {
            let mut buf = sym[cp..].to_vec();
            fft.process(&mut buf);
            values.extend(carriers.iter().map(|k| buf[k.rem_euclid(n as i32) as usize]));
        }
        let mean_energy = values.iter().map(|v| v.norm_sqr()).sum::<f64>() / values.len() as f64;
        let gain = mean_energy.sqrt().max(f64::MIN_POSITIVE);
        let mut bits = Vec::with_capacity(values.len() * self.constellation.bits_per_symbol());
        for v in values {
            self.constellation.slice(v / gain, &mut bits);
        }
        Ok(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_eight_data_subcarriers() {
        let c = data_subcarrier_indices();
        assert_eq!(c.len(), 48);
        assert!(!c.contains(&0) && !c.contains(&7) && !c.contains(&-21));
    }

    #[test]
    fn roundtrip_both_constellations() {
        for constellation in [Constellation::Qpsk, Constellation::Qam16] {
            let p = OfdmParams {
                constellation,
                ..Default::default()
            };
            let bits: Vec<u8> = (0..p.bits_per_ofdm_symbol() * 5)
                .map(|k| ((k * 11 + k / 3) % 2) as u8)
                .collect();
            let rx = p.modulate(&bits).unwrap();
            assert_eq!(rx.len(), 5 * 80);
            assert!((rx.peak() - 1.0).abs() < 1e-12);
            assert_eq!(p.demodulate(&rx.scaled(0.3)).unwrap(), bits);
        }
    }

    #[test]
    fn all_zero_bits_land_on_one_corner() {
        let p = OfdmParams {
            constellation: Constellation::Qam16,
            ..Default::default()
        };
        let rx = p.modulate(&[0; 192]).unwrap();
        let mut buf = rx.samples[16..].to_vec();
        FftPlanner::new().plan_fft_forward(64).process(&mut buf);
        let first = buf[1];
        for k in data_subcarrier_indices() {
            assert!((buf[k.rem_euclid(64) as usize] - first).norm() < 1e-9);
        }
        assert!(first.re < 0.0 && first.im < 0.0);
    }

    #[test]
    fn sixteen_qam_rate_is_48_mbps() {
        let p = OfdmParams {
            constellation: Constellation::Qam16,
            ..Default::default()
        };
        assert_eq!(p.nominal_rate(), 48e6);
    }

    #[test]
    fn rejects_partial_symbols() {
        assert!(matches!(
            OfdmParams::default().modulate(&[0; 95]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
