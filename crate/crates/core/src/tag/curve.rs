//! Gate-bias to drain-source resistance calibration of the terminating MOSFETs.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative slack for range checks, absorbing LUT round-off at the endpoints.
const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub v_gs: f64,
    pub r_ohms: f64,
}

/// Monotone V_GS -> R lookup table, interpolated linearly in `ln R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CurvePoint>", into = "Vec<CurvePoint>")]
pub struct TransistorCurve {
    samples: Vec<CurvePoint>,
}

impl TryFrom<Vec<CurvePoint>> for TransistorCurve {
    type Error = Error;

    fn try_from(samples: Vec<CurvePoint>) -> Result<Self> {
        TransistorCurve::new(samples)
    }
}

impl From<TransistorCurve> for Vec<CurvePoint> {
    fn from(c: TransistorCurve) -> Self {
        c.samples
    }
}

impl Default for TransistorCurve {
    /// 16-point log-linear drop from 10 kΩ at 0 V to 2 Ω at 0.9 V.
    fn default() -> Self {
        Self::log_linear(0.0, 0.9, 10_000.0, 2.0, 16).expect("default curve is valid")
    }
}

impl TransistorCurve {
    pub fn new(samples: Vec<CurvePoint>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid("transistor curve needs at least two samples"));
        }
        for p in &samples {
            if !(p.v_gs.is_finite() && p.r_ohms.is_finite() && p.r_ohms > 0.0) {
                return Err(invalid(format!(
                    "curve sample ({}, {}) must be finite with positive resistance",
                    p.v_gs, p.r_ohms
                )));
            }
        }
        for w in samples.windows(2) {
            if w[1].v_gs <= w[0].v_gs {
                return Err(invalid("curve voltages must be strictly increasing"));
            }
            if w[1].r_ohms >= w[0].r_ohms {
                return Err(invalid("curve resistance must be strictly decreasing"));
            }
        }
        Ok(Self { samples })
    }

    /// `n` samples of `R(v) = r_start · (r_end / r_start)^((v − v_start)/(v_end − v_start))`.
    pub fn log_linear(v_start: f64, v_end: f64, r_start: f64, r_end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("log-linear curve needs at least two samples"));
        }
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                CurvePoint {
                    v_gs: v_start + t * (v_end - v_start),
                    r_ohms: r_start * (r_end / r_start).powf(t),
                }
            })
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[CurvePoint] {
        &self.samples
    }

    pub fn v_min(&self) -> f64 {
        self.samples[0].v_gs
    }

    pub fn v_max(&self) -> f64 {
        self.samples[self.samples.len() - 1].v_gs
    }

    /// Resistance at `v_max`.
    pub fn r_min(&self) -> f64 {
        self.samples[self.samples.len() - 1].r_ohms
    }

    /// Resistance at `v_min`.
    pub fn r_max(&self) -> f64 {
        self.samples[0].r_ohms
    }

    pub fn resistance_of_voltage(&self, v: f64) -> Result<f64> {
        let (lo, hi) = (self.v_min(), self.v_max());
        let slack = RANGE_TOL * (hi - lo).max(1.0);
        if !(v >= lo - slack && v <= hi + slack) {
            return Err(Error::VoltageOutOfRange { v, lo, hi });
        }
        let v = v.clamp(lo, hi);
        let i = self
            .samples
            .partition_point(|p| p.v_gs <= v)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let t = (v - a.v_gs) / (b.v_gs - a.v_gs);
        Ok((a.r_ohms.ln() + t * (b.r_ohms.ln() - a.r_ohms.ln())).exp())
    }

    pub fn voltage_of_resistance(&self, r: f64) -> Result<f64> {
        let (lo, hi) = (self.r_min(), self.r_max());
        if !(r >= lo * (1.0 - RANGE_TOL) && r <= hi * (1.0 + RANGE_TOL)) {
            return Err(Error::UnreachableResistance { r, lo, hi });
        }
        let r = r.clamp(lo, hi);
        // first sample whose resistance is at or below r
        let i = self
            .samples
            .partition_point(|p| p.r_ohms > r)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let t = (r.ln() - a.r_ohms.ln()) / (b.r_ohms.ln() - a.r_ohms.ln());
        Ok(a.v_gs + t * (b.v_gs - a.v_gs))
    }

    /// Achievable termination reflection `(ρ_lo, ρ_hi)` against `z0`.
    pub fn rho_range(&self, z0: f64) -> (f64, f64) {
        (rho_of_resistance(self.r_min(), z0), rho_of_resistance(self.r_max(), z0))
    }

    /// Reads `v_gs,r_ohms` CSV rows sorted by voltage.
    pub fn read_csv<R: Read>(reader: R) -> std::result::Result<Self, CurveCsvError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["v_gs", "r_ohms"] {
            return Err(CurveCsvError::Curve(invalid(format!(
                "curve CSV header must be `v_gs,r_ohms`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ))));
        }
        let samples = rdr
            .deserialize::<CurvePoint>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self::new(samples)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.samples {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::read_csv(file).map_err(|e| match e {
            CurveCsvError::Csv(source) => Error::Csv {
                path: path.to_owned(),
                source,
            },
            CurveCsvError::Curve(e) => e.context(path.display().to_string()),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CurveCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Curve(#[from] Error),
}

pub fn rho_of_resistance(r: f64, z0: f64) -> f64 {
    (r - z0) / (r + z0)
}

pub fn resistance_of_rho(rho: f64, z0: f64) -> f64 {
    z0 * (1.0 + rho) / (1.0 - rho)
}
