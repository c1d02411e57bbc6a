//! Uniformly sampled complex-envelope streams and their on-disk format.
//!
//! Sample files are headerless little-endian `f32` pairs (I then Q). A JSON
//! sidecar named `<file>.json` carries the sample rate and a free-form
//! description.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub sample_rate: f64,
    pub description: String,
}

impl IqStream {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(invalid("IQ samples must be finite"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean power per sample, zero for an empty stream.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(mut self, gain: f64) -> Self {
        self.samples.iter_mut().for_each(|s| *s *= gain);
        self
    }

    /// Instantaneous amplitude A(t).
    pub fn amplitude(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm()).collect()
    }

    /// Instantaneous phase, unwrapped so consecutive samples never jump by more than pi.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.samples.len());
        let mut acc = 0.0;
        let mut prev: Option<f64> = None;
        for s in &self.samples {
            let p = s.arg();
            acc = match prev {
                None => p,
                Some(q) => {
                    let mut d = p - q;
                    while d > std::f64::consts::PI {
                        d -= std::f64::consts::TAU;
                    }
                    while d < -std::f64::consts::PI {
                        d += std::f64::consts::TAU;
                    }
                    acc + d
                }
            };
            prev = Some(p);
            out.push(acc);
        }
        out
    }

    /// Element-wise product with another stream of the same rate and length.
    pub fn mul(&self, other: &IqStream) -> Result<IqStream> {
        check_compatible(self, other)?;
        Ok(IqStream {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect(),
            sample_rate: self.sample_rate,
        })
    }

    pub fn write(&self, path: &Path, description: &str) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        fs::write(path, bytes).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let sidecar = IqSidecar {
            sample_rate: self.sample_rate,
            description: description.to_owned(),
        };
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&sidecar)?;
        fs::write(&side, text + "\n").map_err(|source| Error::Io { path: side, source })
    }

    pub fn read(path: &Path) -> Result<(IqStream, IqSidecar)> {
        let side = sidecar_path(path);
        let text = fs::read_to_string(&side).map_err(|source| Error::Io {
            path: side.clone(),
            source,
        })?;
        let sidecar: IqSidecar = serde_json::from_str(&text)?;
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        if bytes.len() % 8 != 0 {
            return Err(invalid(format!(
                "{}: length {} is not a whole number of f32 IQ pairs",
                path.display(),
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Ok((IqStream::new(samples, sidecar.sample_rate)?, sidecar))
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub(crate) fn check_compatible(a: &IqStream, b: &IqStream) -> Result<()> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::LengthMismatch {
            what: "stream lengths",
            left: a.samples.len(),
            right: b.samples.len(),
        });
    }
    if (a.sample_rate - b.sample_rate).abs() > 1e-9 * a.sample_rate {
        return Err(Error::RateMismatch {
            left: a.sample_rate,
            right: b.sample_rate,
        });
    }
    Ok(())
}

/// `e^{j 2 pi f n / fs}` with the cycle count reduced before scaling, so long
/// streams keep full phase precision.
pub(crate) fn tone_sample(freq: f64, n: usize, sample_rate: f64) -> Complex64 {
    let cycles = (freq * n as f64 / sample_rate).fract();
    Complex64::from_polar(1.0, std::f64::consts::TAU * cycles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_roundtrip_preserves_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let s = IqStream::new(
            (0..100).map(|n| Complex64::from_polar(0.5, n as f64 * 0.1)).collect(),
            250e3,
        )
        .unwrap();
        s.write(&path, "test").unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 800);
        let (back, side) = IqStream::read(&path).unwrap();
        assert_eq!(side.sample_rate, 250e3);
        assert_eq!(side.description, "test");
        for (a, b) in s.samples.iter().zip(&back.samples) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn rejects_bad_rate_and_nan() {
        assert!(IqStream::new(vec![], 0.0).is_err());
        assert!(IqStream::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0).is_err());
    }

    #[test]
    fn unwrap_follows_linear_phase() {
        let s = IqStream::new(
            (0..50).map(|n| Complex64::from_polar(1.0, 0.9 * n as f64)).collect(),
            1.0,
        )
        .unwrap();
        let ph = s.unwrapped_phase();
        for (n, p) in ph.iter().enumerate() {
            assert!((p - 0.9 * n as f64).abs() < 1e-12);
        }
    }
}
