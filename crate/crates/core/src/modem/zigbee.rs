//! IEEE 802.15.4 (2.4 GHz) O-QPSK with half-sine pulses and 32-chip DSSS.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

/// PN sequences for the 16 data symbols; bit `i` holds chip `c_i`.
pub const CHIP_SEQUENCES: [u32; 16] = [
    0x744A_C39B,
    0x44AC_39B7,
    0x4AC3_9B74,
    0xAC39_B744,
    0xC39B_744A,
    0x39B7_44AC,
    0x9B74_4AC3,
    0xB744_AC39,
    0xDEE0_6931,
    0xEE06_931D,
    0xE069_31DE,
    0x0693_1DEE,
    0x6931_DEE0,
    0x931D_EE06,
    0x31DE_E069,
    0x1DEE_0693,
];

pub const CHIPS_PER_SYMBOL: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZigbeeParams {
    pub chip_rate: f64,
    pub samples_per_chip: usize,
}

impl Default for ZigbeeParams {
    fn default() -> Self {
        Self {
            chip_rate: 2e6,
            samples_per_chip: 4,
        }
    }
}

fn chip(symbol: usize, i: usize) -> f64 {
    if (CHIP_SEQUENCES[symbol] >> i) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl ZigbeeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.chip_rate > 0.0) || self.samples_per_chip == 0 {
            return Err(invalid("ZigBee chip rate and samples per chip must be positive"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.chip_rate * self.samples_per_chip as f64
    }

    /// 4 bits per 32 chips.
    pub fn nominal_rate(&self) -> f64 {
        self.chip_rate / CHIPS_PER_SYMBOL as f64 * 4.0
    }

    /// Half-sine pulse spanning two chip periods.
    fn pulse(&self) -> Vec<f64> {
        let len = 2 * self.samples_per_chip;
        (0..len).map(|k| (PI * k as f64 / len as f64).sin()).collect()
    }

    /// Bits are taken four at a time, least significant first.
    pub fn modulate(&self, bits: &[u8]) -> Result<IqStream> {
        self.validate()?;
        if bits.len() % 4 != 0 {
            return Err(Error::LengthMismatch {
                what: "ZigBee bits must be a multiple of 4",
                left: bits.len(),
                right: 4,
            });
        }
        let spc = self.samples_per_chip;
        let pulse = self.pulse();
        let n_symbols = bits.len() / 4;
        let pairs = n_symbols * CHIPS_PER_SYMBOL / 2;
        let mut samples = vec![Complex64::new(0.0, 0.0); pairs * 2 * spc + spc];
        for (s, nibble) in bits.chunks_exact(4).enumerate() {
            let sym = nibble
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &b)| acc | (usize::from(b & 1) << i));
            for p in 0..CHIPS_PER_SYMBOL / 2 {
                let start = (s * CHIPS_PER_SYMBOL / 2 + p) * 2 * spc;
                let (ci, cq) = (chip(sym, 2 * p), chip(sym, 2 * p + 1));
                for (k, &h) in pulse.iter().enumerate() {
                    samples[start + k].re += ci * h;
                    samples[start + spc + k].im += cq * h;
                }
            }
        }
        IqStream::new(samples, self.sample_rate())
    }

    /// Matched-filters every chip on its rail, then picks the PN sequence
    /// with the largest correlation per symbol.
    pub fn demodulate(&self, rx: &IqStream) -> Result<Vec<u8>> {
        self.validate()?;
        let spc = self.samples_per_chip;
        let per_symbol = CHIPS_PER_SYMBOL * spc;
        let need = per_symbol + spc;
        if rx.len() < need {
            return Err(Error::TooShort { need, got: rx.len() });
        }
        let pulse = self.pulse();
        let n_symbols = (rx.len() - spc) / per_symbol;
        let x = &rx.samples;
        let mut bits = Vec::with_capacity(n_symbols * 4);
        let mut soft = [0.0; CHIPS_PER_SYMBOL];
        for s in 0..n_symbols {
            for p in 0..CHIPS_PER_SYMBOL / 2 {
                let start = (s * CHIPS_PER_SYMBOL / 2 + p) * 2 * spc;
                let (mut i_acc, mut q_acc) = (0.0, 0.0);
                for (k, &h) in pulse.iter().enumerate() {
                    i_acc += x[start + k].re * h;
                    q_acc += x[start + spc + k].im * h;
                }
                soft[2 * p] = i_acc;
                soft[2 * p + 1] = q_acc;
            }
            let sym = despread(&soft);
            bits.extend((0..4).map(|i| (sym >> i) & 1));
        }
        Ok(bits)
    }
}

/// Maximum-correlation symbol decision over soft (or ±1 hard) chips.
pub fn despread(soft: &[f64; CHIPS_PER_SYMBOL]) -> u8 {
    let mut best = (0u8, f64::NEG_INFINITY);
    for sym in 0..16 {
        let c: f64 = soft.iter().enumerate().map(|(i, v)| v * chip(sym, i)).sum();
        if c > best.1 {
            best = (sym as u8, c);
        }
    }
    best.0
}
