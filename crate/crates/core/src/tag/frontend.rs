//! Splitter / delay-line I-Q combine model, bias compilation and reflection.
//!
//! The two splitter arms are terminated by resistive loads `R_I`, `R_Q`. Each
//! arm reflects `ρ = (R − Z_0)/(R + Z_0)`; the Q arm travels the λ/8 delay line
//! twice and returns rotated by `q_path_phase`. Together with the board's fixed
//! parasitic reflection and an overall rotation:
//!
//! ```text
//! Γ = Γ_fix + a · e^{jα} · (ρ_I + e^{jφ_Q} ρ_Q)
//! ```
//!
//! where `a` is the two-way splitter amplitude factor.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::curve::{resistance_of_rho, rho_of_resistance, TransistorCurve};
use crate::error::{invalid, Error, Result};
use crate::impedance::{apply_matching, effective_radius, Gamma, MatchingNetwork, ModulationSpace};
use crate::iq::IqStream;

/// Targets may exceed the achievable ρ interval by this much before being
/// rejected; the effective radius is estimated from sampled boundaries.
const RHO_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    /// Single-sideband complex exponential.
    #[default]
    Ideal,
    /// `sign(cos)` toggling of a real RF switch.
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagConfig {
    pub z0: f64,
    pub splitter_amplitude_factor: f64,
    pub q_path_phase: f64,
    pub fixed_offset: Gamma,
    pub space_rotation: f64,
    pub shift_freq: f64,
    pub shift_mode: ShiftMode,
    /// DAC resolution for bias voltages; `None` leaves them unquantized.
    pub dac_step: Option<f64>,
}

impl Default for TagConfig {
    fn default() -> Self {
        Self {
            z0: 50.0,
            splitter_amplitude_factor: 0.5,
            q_path_phase: FRAC_PI_2,
            fixed_offset: Gamma::new(0.2, 0.1),
            space_rotation: 15f64.to_radians(),
            shift_freq: 25e6,
            shift_mode: ShiftMode::Ideal,
            dac_step: None,
        }
    }
}

impl TagConfig {
    /// No board parasitics, no rotation, no frequency shift.
    pub fn ideal() -> Self {
        Self {
            fixed_offset: Gamma::new(0.0, 0.0),
            space_rotation: 0.0,
            shift_freq: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(invalid(format!("z0 must be positive, got {}", self.z0)));
        }
        let a = self.splitter_amplitude_factor;
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid(format!("splitter amplitude factor must be in (0, 1], got {a}")));
        }
        if self.q_path_phase.sin().abs() < 1e-6 {
            return Err(invalid("q_path_phase must not be a multiple of pi"));
        }
        if !(self.shift_freq >= 0.0 && self.shift_freq.is_finite()) {
            return Err(invalid(format!("shift_freq must be >= 0, got {}", self.shift_freq)));
        }
        if let Some(step) = self.dac_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(invalid(format!("dac_step must be positive, got {step}")));
            }
        }
        if !(self.fixed_offset.re().is_finite() && self.fixed_offset.im().is_finite()) {
            return Err(invalid("fixed_offset must be finite"));
        }
        Ok(())
    }

    /// Combine model from the two termination reflections.
    pub fn gamma_of_rho(&self, rho_i: f64, rho_q: f64) -> Gamma {
        let arms = Complex64::new(rho_i, 0.0) + Complex64::from_polar(rho_q, self.q_path_phase);
        Gamma(self.fixed_offset.0 + Complex64::from_polar(self.splitter_amplitude_factor, self.space_rotation) * arms)
    }

    /// Inverse of [`gamma_of_rho`](Self::gamma_of_rho).
    pub fn rho_of_gamma(&self, g: Gamma) -> (f64, f64) {
        let d =
            (g.0 - self.fixed_offset.0) / Complex64::from_polar(self.splitter_amplitude_factor, self.space_rotation);
        let rho_q = d.im / self.q_path_phase.sin();
        let rho_i = d.re - rho_q * self.q_path_phase.cos();
        (rho_i, rho_q)
    }

    /// Frequency-shift multiplier `m[n]` at sample `n`.
    pub fn shift_sample(&self, n: usize, sample_rate: f64) -> Complex64 {
        if self.shift_freq == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let cycles = (self.shift_freq * n as f64 / sample_rate).fract();
        match self.shift_mode {
            ShiftMode::Ideal => Complex64::from_polar(1.0, TAU * cycles),
            ShiftMode::Square => {
                if (TAU * cycles).cos() >= 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                }
            }
        }
    }
}

/// Reflection coefficient of the combine network (before any matching ladder).
pub fn gamma_of_bias(tag: &TagConfig, curve: &TransistorCurve, v_i: f64, v_q: f64) -> Result<Gamma> {
    let rho_i = rho_of_resistance(curve.resistance_of_voltage(v_i)?, tag.z0);
    let rho_q = rho_of_resistance(curve.resistance_of_voltage(v_q)?, tag.z0);
    Ok(tag.gamma_of_rho(rho_i, rho_q))
}

/// Everything needed to turn bias voltages into an antenna reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagModel {
    #[serde(default)]
    pub config: TagConfig,
    #[serde(default)]
    pub curve: TransistorCurve,
    #[serde(default = "default_matching")]
    pub matching: MatchingNetwork,
}

fn default_matching() -> MatchingNetwork {
    MatchingNetwork::empty(2.45e9)
}

impl Default for TagModel {
    fn default() -> Self {
        Self {
            config: TagConfig::default(),
            curve: TransistorCurve::default(),
            matching: default_matching(),
        }
    }
}

impl TagModel {
    pub fn new(config: TagConfig, curve: TransistorCurve, matching: MatchingNetwork) -> Result<Self> {
        let tag = Self {
            config,
            curve,
            matching,
        };
        tag.validate()?;
        Ok(tag)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.matching.validate()
    }

    /// Reflection seen at the antenna, matching ladder included.
    pub fn gamma(&self, v_i: f64, v_q: f64) -> Result<Gamma> {
        let g = gamma_of_bias(&self.config, &self.curve, v_i, v_q)?;
        apply_matching(&self.matching, g, self.config.z0)
    }

    /// Boundary-only modulation space (no interior point cloud).
    pub fn modulation_space(&self, boundary_samples: usize) -> Result<ModulationSpace> {
        crate::impedance::boundary_space(&self.curve, &self.config, &self.matching, boundary_samples)
    }
}

/// Per-sample gate voltages for the I and Q terminations.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasWaveform {
    pub v_i: Vec<f64>,
    pub v_q: Vec<f64>,
    pub sample_rate: f64,
}

impl BiasWaveform {
    pub fn len(&self) -> usize {
        self.v_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_i.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "v_i", "v_q"])?;
        for (n, (vi, vq)) in self.v_i.iter().zip(&self.v_q).enumerate() {
            let t = n as f64 / self.sample_rate;
            w.write_record([format!("{t:.9e}"), format!("{vi:.9}"), format!("{vq:.9}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rescales `target` so its peak equals the space's effective radius, then
/// inverts matching and the combine model sample by sample.
pub fn compile_bias(tag: &TagModel, target: &IqStream, space: &ModulationSpace) -> Result<BiasWaveform> {
    let radius = effective_radius(space);
    if radius <= 0.0 {
        return Err(Error::EmptyModulationSpace);
    }
    compile_bias_with_amplitude(tag, target, radius)
}

/// Like [`compile_bias`] with an explicit peak reflection amplitude.
pub fn compile_bias_with_amplitude(tag: &TagModel, target: &IqStream, amplitude: f64) -> Result<BiasWaveform> {
    if !(target.sample_rate > 0.0) {
        return Err(invalid("target sample rate must be positive"));
    }
    let peak = target.peak();
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let cfg = &tag.config;
    let (rho_lo, rho_hi) = tag.curve.rho_range(cfg.z0);
    let (v_lo, v_hi) = (tag.curve.v_min(), tag.curve.v_max());

    let to_voltage = |index: usize, rho: f64| -> Result<f64> {
        if rho < rho_lo - RHO_SLACK || rho > rho_hi + RHO_SLACK {
            return Err(Error::InfeasibleTarget {
                index,
                rho,
                lo: rho_lo,
                hi: rho_hi,
            });
        }
        let r = resistance_of_rho(rho.clamp(rho_lo, rho_hi), cfg.z0);
        let r = r.clamp(tag.curve.r_min(), tag.curve.r_max());
        let mut v = tag.curve.voltage_of_resistance(r)?;
        if let Some(step) = cfg.dac_step {
            v = (v_lo + ((v - v_lo) / step).round() * step).clamp(v_lo, v_hi);
        }
        Ok(v)
    };

    let mut v_i = Vec::with_capacity(target.len());
    let mut v_q = Vec::with_capacity(target.len());
    for (index, s) in target.samples.iter().enumerate() {
        let pre = tag.matching.invert(Gamma(s * scale), cfg.z0)?;
        let (ri, rq) = cfg.rho_of_gamma(pre);
        v_i.push(to_voltage(index, ri)?);
        v_q.push(to_voltage(index, rq)?);
    }
    Ok(BiasWaveform {
        v_i,
        v_q,
        sample_rate: target.sample_rate,
    })
}

/// `out[n] = carrier[n] · Γ(v_i[n], v_q[n]) · m[n]`.
pub fn reflect(tag: &TagModel, carrier: &IqStream, bias: &BiasWaveform) -> Result<IqStream> {
    if bias.v_i.len() != bias.v_q.len() {
        return Err(Error::LengthMismatch {
            what: "bias I/Q lengths",
            left: bias.v_i.len(),
            right: bias.v_q.len(),
        });
    }
    if (carrier.sample_rate - bias.sample_rate).abs() > 1e-9 * carrier.sample_rate {
        return Err(Error::RateMismatch {
            left: carrier.sample_rate,
            right: bias.sample_rate,
        });
    }
    if carrier.len() != bias.len() {
        return Err(Error::LengthMismatch {
            what: "carrier vs bias",
            left: carrier.len(),
            right: bias.len(),
        });
    }
    let fs = carrier.sample_rate;
    let samples = carrier
        .samples
        .iter()
        .zip(bias.v_i.iter().zip(&bias.v_q))
        .enumerate()
        .map(|(n, (c, (&vi, &vq)))| {
            let g = tag.gamma(vi, vq)?;
            Ok(c * g.0 * tag.config.shift_sample(n, fs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IqStream {
        samples,
        sample_rate: fs,
    })
}
