//! Lossless L/C ladders between the antenna and the splitter.
//!
//! A series element moves the load along a constant-resistance circle and a
//! shunt element along a constant-conductance circle, so every ladder is a
//! Möbius map of the unit disk onto itself.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::{gamma_from_impedance, impedance_from_gamma, Gamma, Impedance, SINGULAR_TOL};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    SeriesInductor,
    SeriesCapacitor,
    ShuntInductor,
    ShuntCapacitor,
}

impl ElementKind {
    pub const ALL: [ElementKind; 4] = [
        ElementKind::SeriesInductor,
        ElementKind::SeriesCapacitor,
        ElementKind::ShuntInductor,
        ElementKind::ShuntCapacitor,
    ];

    pub fn is_inductor(self) -> bool {
        matches!(self, ElementKind::SeriesInductor | ElementKind::ShuntInductor)
    }

    pub fn is_series(self) -> bool {
        matches!(self, ElementKind::SeriesInductor | ElementKind::SeriesCapacitor)
    }

    fn label(self) -> &'static str {
        match self {
            ElementKind::SeriesInductor => "series-L",
            ElementKind::SeriesCapacitor => "series-C",
            ElementKind::ShuntInductor => "shunt-L",
            ElementKind::ShuntCapacitor => "shunt-C",
        }
    }
}

/// One reactive element; `value` is in henries or farads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingElement {
    pub kind: ElementKind,
    pub value: f64,
}

impl fmt::Display for MatchingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.is_inductor() {
            write!(f, "{} {:.4} nH", self.kind.label(), self.value * 1e9)
        } else {
            write!(f, "{} {:.4} pF", self.kind.label(), self.value * 1e12)
        }
    }
}

impl MatchingElement {
    pub fn new(kind: ElementKind, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(format!(
                "{} value must be positive and finite, got {value}",
                kind.label()
            )));
        }
        Ok(Self { kind, value })
    }

    /// Reactance (series) or susceptance (shunt) of the element at `freq`.
    fn immittance(&self, freq: f64) -> Complex64 {
        let w = TAU * freq;
        match self.kind {
            ElementKind::SeriesInductor => Complex64::new(0.0, w * self.value),
            ElementKind::SeriesCapacitor => Complex64::new(0.0, -1.0 / (w * self.value)),
            ElementKind::ShuntInductor => Complex64::new(0.0, -1.0 / (w * self.value)),
            ElementKind::ShuntCapacitor => Complex64::new(0.0, w * self.value),
        }
    }
}

/// Elements in load-to-antenna order, evaluated at `frequency`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchingNetwork {
    pub elements: Vec<MatchingElement>,
    pub frequency: f64,
}

impl MatchingNetwork {
    pub fn empty(frequency: f64) -> Self {
        Self {
            elements: Vec::new(),
            frequency,
        }
    }

    pub fn new(elements: Vec<MatchingElement>, frequency: f64) -> Result<Self> {
        let net = Self { elements, frequency };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(invalid(format!(
                "matching frequency must be positive, got {}",
                self.frequency
            )));
        }
        for e in &self.elements {
            MatchingElement::new(e.kind, e.value)?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn total_value(&self) -> f64 {
        self.elements.iter().map(|e| e.value).sum()
    }

    /// Undoes [`apply_matching`]: walks the ladder antenna-to-load with each
    /// element's immittance negated.
    pub fn invert(&self, g: Gamma, z0: f64) -> Result<Gamma> {
        if self.elements.is_empty() {
            return Ok(g);
        }
        let mut z = impedance_from_gamma(g, z0)?;
        for e in self.elements.iter().rev() {
            z = step(e.kind.is_series(), -e.immittance(self.frequency), z)?;
        }
        gamma_from_impedance(z, z0)
    }
}

impl fmt::Display for MatchingNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elements.is_empty() {
            return write!(f, "(none)");
        }
        let parts: Vec<String> = self.elements.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(" -> "))
    }
}

fn step(series: bool, x: Complex64, z: Impedance) -> Result<Impedance> {
    if series {
        return Ok(Impedance(z.0 + x));
    }
    if z.0.norm() < SINGULAR_TOL {
        return Err(Error::SingularImpedance("shunt element to a short"));
    }
    let y = z.0.inv() + x;
    if y.norm() < SINGULAR_TOL {
        return Err(Error::SingularImpedance("shunt element (parallel resonance)"));
    }
    Ok(Impedance(y.inv()))
}

/// Impedance seen after adding `e` to a load `z` at frequency `freq`.
pub fn apply_element(e: &MatchingElement, z: Impedance, freq: f64) -> Result<Impedance> {
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(invalid(format!("frequency must be positive, got {freq}")));
    }
    step(e.kind.is_series(), e.immittance(freq), z)
}

pub fn apply_matching(net: &MatchingNetwork, g: Gamma, z0: f64) -> Result<Gamma> {
    if g.norm() > 1.0 + 1e-9 {
        return Err(Error::OutsideUnitDisk(g.norm()));
    }
    if net.elements.is_empty() {
        return Ok(g);
    }
    let mut z = impedance_from_gamma(g, z0)?;
    for e in &net.elements {
        z = apply_element(e, z, net.frequency)?;
    }
    gamma_from_impedance(z, z0)
}
