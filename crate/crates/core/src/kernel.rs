//! Smoothing kernels with closed-form distribution functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A symmetric kernel density `K` on the real line, with its CDF `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian,
    Epanechnikov,
    Uniform,
}

impl KernelSpec {
    pub fn name(self) -> &'static str {
        match self {
            KernelSpec::Gaussian => "gaussian",
            KernelSpec::Epanechnikov => "epanechnikov",
            KernelSpec::Uniform => "uniform",
        }
    }

    pub fn density(self, y: f64) -> f64 {
        match self {
            KernelSpec::Gaussian => INV_SQRT_2PI * (-0.5 * y * y).exp(),
            KernelSpec::Epanechnikov if y.abs() <= 1.0 => 0.75 * (1.0 - y * y),
            KernelSpec::Uniform if y.abs() <= 1.0 => 0.5,
            _ => 0.0,
        }
    }

    pub fn cdf(self, y: f64) -> f64 {
        match self {
            KernelSpec::Gaussian => 0.5 * erfc(-y / std::f64::consts::SQRT_2),
            KernelSpec::Epanechnikov => {
                let y = y.clamp(-1.0, 1.0);
                0.5 + 0.75 * y - 0.25 * y * y * y
            }
            KernelSpec::Uniform => 0.5 * (y.clamp(-1.0, 1.0) + 1.0),
        }
    }

    /// `∫_{-∞}^{y} s K(s) ds`, which is never positive and vanishes at both ends.
    pub fn partial_first_moment(self, y: f64) -> f64 {
        match self {
            KernelSpec::Gaussian => -INV_SQRT_2PI * (-0.5 * y * y).exp(),
            KernelSpec::Epanechnikov => {
                let y2 = y.clamp(-1.0, 1.0).powi(2);
                0.375 * (y2 - 1.0) - 0.1875 * (y2 * y2 - 1.0)
            }
            KernelSpec::Uniform => 0.25 * (y.clamp(-1.0, 1.0).powi(2) - 1.0),
        }
    }

    /// `E|Y|` for `Y ~ K`.
    pub fn first_abs_moment(self) -> f64 {
        match self {
            KernelSpec::Gaussian => (2.0 / std::f64::consts::PI).sqrt(),
            KernelSpec::Epanechnikov => 0.375,
            KernelSpec::Uniform => 0.5,
        }
    }

    /// Half-width outside which `G` is 0 or 1 to double precision.
    pub fn radius(self) -> f64 {
        match self {
            KernelSpec::Gaussian => 9.0,
            _ => 1.0,
        }
    }

    pub fn is_compact(self) -> bool {
        !matches!(self, KernelSpec::Gaussian)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelSpec::Gaussian),
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            "uniform" | "box" => Ok(KernelSpec::Uniform),
            other => Err(Error::Validation(format!("unknown kernel `{other}`"))),
        }
    }
}
