//! LoRa chirp spread spectrum.
//!
//! Symbol `m` is an up-chirp whose instantaneous frequency starts at
//! `f0 + m·bw/2^sf`, rises at `k = bw²/2^sf` and wraps from `+bw/2` to
//! `−bw/2`. The phase is the integral of that frequency, so it stays
//! continuous across the wrap.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    pub sf: u8,
    pub bw: f64,
    /// Starting frequency of symbol 0, in `[−bw/2, bw/2)`.
    pub f0: f64,
    /// Phase at the start of every symbol.
    pub phi0: f64,
}

impl ChirpParams {
    /// Base up-chirp from `−bw/2` with zero initial phase.
    pub fn new(sf: u8, bw: f64) -> Self {
        Self {
            sf,
            bw,
            f0: -bw / 2.0,
            phi0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(7..=12).contains(&self.sf) {
            return Err(invalid(format!("spreading factor must be 7..=12, got {}", self.sf)));
        }
        if !(self.bw > 0.0 && self.bw.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {}", self.bw)));
        }
        if !(self.f0 >= -self.bw / 2.0 && self.f0 < self.bw / 2.0) {
            return Err(invalid(format!("f0 {} outside [-bw/2, bw/2)", self.f0)));
        }
        Ok(())
    }

    /// Chips (and FFT bins) per symbol, `2^sf`.
    pub fn chips(&self) -> usize {
        1 << self.sf
    }

    /// `k = bw² / 2^sf` in Hz/s.
    pub fn chirp_rate(&self) -> f64 {
        self.bw * self.bw / self.chips() as f64
    }

    /// `T = 2^sf / bw`.
    pub fn symbol_time(&self) -> f64 {
        self.chips() as f64 / self.bw
    }

    /// Wrapped starting frequency of symbol `m`.
    fn start_frequency(&self, m: u32) -> f64 {
        let mut f = self.f0 + m as f64 * self.bw / self.chips() as f64;
        while f >= self.bw / 2.0 {
            f -= self.bw;
        }
        f
    }

    /// Time at which symbol `m` reaches `+bw/2` and wraps.
    fn wrap_time(&self, m: u32) -> f64 {
        (self.bw / 2.0 - self.start_frequency(m)) / self.chirp_rate()
    }

    /// Instantaneous frequency of symbol `m` at `t` seconds into the symbol.
    pub fn frequency(&self, m: u32, t: f64) -> f64 {
        let f = self.start_frequency(m) + self.chirp_rate() * t;
        if t >= self.wrap_time(m) {
            f - self.bw
        } else {
            f
        }
    }

    /// `Φ(t) = Φ0 + 2π(F t + ½ k t²)`, less `2π·bw·(t − t_wrap)` after the wrap.
    pub fn phase(&self, m: u32, t: f64) -> f64 {
        let f = self.start_frequency(m);
        let mut p = self.phi0 + TAU * (f * t + 0.5 * self.chirp_rate() * t * t);
        let tw = self.wrap_time(m);
        if t > tw {
            p -= TAU * self.bw * (t - tw);
        }
        p
    }
}

fn oversampling(params: &ChirpParams, fs: f64) -> Result<usize> {
    let os = fs / params.bw;
    if os < 1.0 - 1e-9 || (os - os.round()).abs() > 1e-9 {
        return Err(invalid(format!(
            "sample rate {fs} Hz must be an integer multiple (>= 1) of bandwidth {} Hz",
            params.bw
        )));
    }
    Ok(os.round() as usize)
}

pub fn lora_modulate(symbols: &[u32], params: &ChirpParams, fs: f64) -> Result<IqStream> {
    params.validate()?;
    let os = oversampling(params, fs)?;
    let n = params.chips();
    let per_symbol = n * os;
    let mut samples = Vec::with_capacity(symbols.len() * per_symbol);
    for &m in symbols {
        if m as usize >= n {
            return Err(Error::SymbolOutOfRange {
                symbol: m,
                max: n as u32,
            });
        }
        samples.extend((0..per_symbol).map(|i| Complex64::from_polar(1.0, params.phase(m, i as f64 / fs))));
    }
    IqStream::new(samples, fs)
}

/// Bin with the most energy in one dechirped symbol window. With
/// oversampling, the post-wrap segment of the tone lands `2^sf` bins away,
/// so those bins are folded in.
pub fn peak_symbol(dechirped: &[Complex64], chips: usize) -> u32 {
    let len = dechirped.len();
    let mut spectrum = dechirped.to_vec();
    FftPlanner::new().plan_fft_forward(len).process(&mut spectrum);
    peak_of_spectrum(&spectrum, chips)
}

fn peak_of_spectrum(spectrum: &[Complex64], chips: usize) -> u32 {
    let len = spectrum.len();
    let mut best = (0u32, f64::NEG_INFINITY);
    for m in 0..chips {
        let mut bins = [m, (m + len - chips % len) % len, (m + chips) % len];
        bins.sort_unstable();
        let score: f64 = bins
            .iter()
            .enumerate()
            .filter(|(i, b)| *i == 0 || bins[i - 1] != **b)
            .map(|(_, &b)| spectrum[b].norm_sqr())
            .sum();
        if score > best.1 {
            best = (m as u32, score);
        }
    }
    best.0
}

/// Dechirp with the conjugate base chirp and take the FFT peak of each symbol window.
pub fn lora_demodulate(rx: &IqStream, params: &ChirpParams) -> Result<Vec<u32>> {
    params.validate()?;
    let fs = rx.sample_rate;
    let os = oversampling(params, fs)?;
    let n = params.chips();
    let per_symbol = n * os;
    if rx.len() < per_symbol {
        return Err(Error::TooShort {
            need: per_symbol,
            got: rx.len(),
        });
    }
    let base = ChirpParams { phi0: 0.0, ..*params };
    let down: Vec<Complex64> = (0..per_symbol)
        .map(|i| Complex64::from_polar(1.0, -base.phase(0, i as f64 / fs)))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(per_symbol);
    let mut buf = vec![Complex64::new(0.0, 0.0); per_symbol];
    Ok(rx
        .samples
        .chunks_exact(per_symbol)
        .map(|window| {
            for ((b, x), d) in buf.iter_mut().zip(window).zip(&down) {
                *b = x * d;
            }
            fft.process(&mut buf);
            peak_of_spectrum(&buf, n)
        })
        .collect())
}

/// Packs bits MSB-first into `sf`-bit symbols; the tail is zero-padded.
pub fn bits_to_symbols(bits: &[u8], sf: u8) -> Vec<u32> {
    bits.chunks(sf as usize)
        .map(|c| {
            let v = c.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
            v << (sf as usize - c.len())
        })
        .collect()
}

pub fn symbols_to_bits(symbols: &[u32], sf: u8) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|&s| (0..sf).rev().map(move |i| ((s >> i) & 1) as u8))
        .collect()
}
