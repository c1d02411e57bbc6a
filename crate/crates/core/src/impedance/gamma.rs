use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Denominators below this magnitude are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
struct ReIm {
    re: f64,
    im: f64,
}

macro_rules! complex_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        #[serde(from = "ReIm", into = "ReIm")]
        pub struct $name(pub Complex64);

        impl $name {
            pub const fn new(re: f64, im: f64) -> Self {
                Self(Complex64::new(re, im))
            }

            pub fn re(self) -> f64 {
                self.0.re
            }

            pub fn im(self) -> f64 {
                self.0.im
            }

            pub fn norm(self) -> f64 {
                self.0.norm()
            }
        }

        impl From<ReIm> for $name {
            fn from(v: ReIm) -> Self {
                Self::new(v.re, v.im)
            }
        }

        impl From<$name> for ReIm {
            fn from(v: $name) -> Self {
                ReIm { re: v.0.re, im: v.0.im }
            }
        }

        impl From<Complex64> for $name {
            fn from(c: Complex64) -> Self {
                Self(c)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let sign = if self.0.im < 0.0 { '-' } else { '+' };
                write!(f, "{}{}j{}", self.0.re, sign, self.0.im.abs())
            }
        }
    };
}

complex_newtype!(
    /// Complex load impedance in ohms (resistance + j reactance).
    Impedance
);

complex_newtype!(
    /// Complex reflection coefficient, unitless.
    Gamma
);

impl Gamma {
    pub fn angle_deg(self) -> f64 {
        self.0.arg().to_degrees()
    }
}

impl Impedance {
    pub fn admittance(self) -> Complex64 {
        self.0.inv()
    }
}

fn check_z0(z0: f64) -> Result<()> {
    if z0 > 0.0 && z0.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("reference impedance must be positive, got {z0}")))
    }
}

/// Γ = (Z_L − Z_0) / (Z_L + Z_0).
pub fn gamma_from_impedance(z_l: Impedance, z0: f64) -> Result<Gamma> {
    check_z0(z0)?;
    if !(z_l.0.re.is_finite() && z_l.0.im.is_finite()) {
        return Err(invalid(format!("load impedance must be finite, got {z_l}")));
    }
    let den = z_l.0 + z0;
    if den.norm() < SINGULAR_TOL {
        return Err(Error::DegenerateLoad(den.norm()));
    }
    Ok(Gamma((z_l.0 - z0) / den))
}

/// Z = Z_0 (1 + Γ) / (1 − Γ).
pub fn impedance_from_gamma(g: Gamma, z0: f64) -> Result<Impedance> {
    check_z0(z0)?;
    let den = 1.0 - g.0;
    if den.norm() < SINGULAR_TOL {
        return Err(Error::OpenCircuit { re: g.0.re, im: g.0.im });
    }
    Ok(Impedance(z0 * (1.0 + g.0) / den))
}
