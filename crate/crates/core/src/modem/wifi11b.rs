//! 802.11b 1 Mbps: DBPSK spread by the 11-chip Barker sequence.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

pub const BARKER_11: [f64; 11] = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Wifi11bParams {
    pub barker_len: usize,
    pub chip_rate: f64,
    pub samples_per_chip: usize,
}

impl Default for Wifi11bParams {
    fn default() -> Self {
        Self {
            barker_len: 11,
            chip_rate: 11e6,
            samples_per_chip: 1,
        }
    }
}

/// Aperiodic autocorrelation of the Barker sequence at lags `0..11`.
pub fn barker_autocorrelation() -> Vec<f64> {
    (0..BARKER_11.len())
        .map(|lag| BARKER_11.iter().zip(&BARKER_11[lag..]).map(|(a, b)| a * b).sum())
        .collect()
}

impl Wifi11bParams {
    pub fn validate(&self) -> Result<()> {
        if self.barker_len != BARKER_11.len() {
            return Err(invalid(format!(
                "only the 11-chip Barker code is supported, got {}",
                self.barker_len
            )));
        }
        if !(self.chip_rate > 0.0) || self.samples_per_chip == 0 {
            return Err(invalid("802.11b chip rate and samples per chip must be positive"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.chip_rate * self.samples_per_chip as f64
    }

    pub fn nominal_rate(&self) -> f64 {
        self.chip_rate / self.barker_len as f64
    }

    fn samples_per_symbol(&self) -> usize {
        self.barker_len * self.samples_per_chip
    }

    /// A one flips the phase by π. A leading reference symbol anchors the
    /// differential decoder, so the output holds `bits + 1` symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<IqStream> {
        self.validate()?;
        let spc = self.samples_per_chip;
        let mut phase = 1.0;
        let mut samples = Vec::with_capacity((bits.len() + 1) * self.samples_per_symbol());
        for sign in std::iter::once(phase).chain(bits.iter().map(|&b| {
            if b & 1 == 1 {
                phase = -phase;
            }
            phase
        })) {
            for c in BARKER_11 {
                samples.extend(std::iter::repeat_n(Complex64::new(sign * c, 0.0), spc));
            }
        }
        IqStream::new(samples, self.sample_rate())
    }

    pub fn demodulate(&self, rx: &IqStream) -> Result<Vec<u8>> {
        self.validate()?;
        let sps = self.samples_per_symbol();
        if rx.len() < sps {
            return Err(Error::TooShort {
                need: sps,
                got: rx.len(),
            });
        }
        let spc = self.samples_per_chip;
        let despread: Vec<Complex64> = rx
            .samples
            .chunks_exact(sps)
            .map(|sym| {
                sym.chunks_exact(spc)
                    .zip(BARKER_11)
                    .map(|(chip, c)| chip.iter().sum::<Complex64>() * c)
                    .sum()
            })
            .collect();
        Ok(despread
            .windows(2)
            .map(|w| u8::from((w[1] * w[0].conj()).re < 0.0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barker_peak_to_sidelobe_is_11() {
        let ac = barker_autocorrelation();
        assert_eq!(ac[0], 11.0);
        let side = ac[1..].iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert_eq!(ac[0] / side, 11.0);
    }

    #[test]
    fn roundtrip_with_phase_offset() {
        let p = Wifi11bParams {
            samples_per_chip: 2,
            ..Default::default()
        };
        let bits: Vec<u8> = (0..300).map(|k| ((k * 5 + k / 7) % 2) as u8).collect();
        let mut rx = p.modulate(&bits).unwrap();
        assert_eq!(rx.len(), 301 * 22);
        assert_eq!(p.demodulate(&rx).unwrap(), bits);
        let rot = Complex64::from_polar(1.0, 2.1);
        rx.samples.iter_mut().for_each(|s| *s *= rot);
        assert_eq!(p.demodulate(&rx).unwrap(), bits);
    }

    #[test]
    fn nominal_rate_is_1_mbps() {
        assert_eq!(Wifi11bParams::default().nominal_rate(), 1e6);
    }
}
