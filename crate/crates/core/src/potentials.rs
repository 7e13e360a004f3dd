//! Pairwise interaction potentials.
//!
//! The base profile `f` is 2π-periodic, vanishes exactly on 2πℤ, dominates `1 - cos t`
//! and is quadratic at the bottom of the well. The n-well potential truncates
//! `f(n t)` from below at level ε on the secondary wells:
//!
//! ```text
//! f_ε⁽ⁿ⁾(t) = max(f(n t), ε)   if t mod 2π ∈ (π/n, 2π - π/n]
//!           = f(n t)           otherwise
//! ```

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base well profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseProfile {
    /// `1 - cos t`.
    #[default]
    Cosine,
    /// `(1 - cos t) + c (1 - cos t)²` with `c >= 0`; stiffer away from the well.
    CosineQuartic { c: f64 },
}

impl BaseProfile {
    pub fn value(&self, t: f64) -> f64 {
        // 2 sin²(t/2) keeps relative accuracy at the bottom of the well.
        let h = (0.5 * t).sin();
        let g = 2.0 * h * h;
        match *self {
            BaseProfile::Cosine => g,
            BaseProfile::CosineQuartic { c } => g + c * g * g,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = t.sin();
        match *self {
            BaseProfile::Cosine => s,
            BaseProfile::CosineQuartic { c } => {
                let h = (0.5 * t).sin();
                s * (1.0 + 4.0 * c * h * h)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BaseProfile::Cosine => Ok(()),
            BaseProfile::CosineQuartic { c } if c.is_finite() && c >= 0.0 => Ok(()),
            BaseProfile::CosineQuartic { c } => Err(Error::InvalidParameter(format!(
                "quartic coefficient must be non-negative, got {c}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub n: u32,
    pub epsilon: f64,
    #[serde(default)]
    pub base: BaseProfile,
}

impl PotentialSpec {
    pub fn new(n: u32, epsilon: f64) -> Result<Self> {
        Self::with_base(n, epsilon, BaseProfile::Cosine)
    }

    pub fn with_base(n: u32, epsilon: f64, base: BaseProfile) -> Result<Self> {
        let spec = PotentialSpec { n, epsilon, base };
        spec.validate()?;
        Ok(spec)
    }

    /// The symmetric (single-well) energy is the n = 1 case: its plateau set is empty.
    pub fn symmetric(base: BaseProfile) -> Self {
        PotentialSpec {
            n: 1,
            epsilon: 1.0,
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("well count n must be >= 1".into()));
        }
        // f(π) >= 1 - cos π = 2 for every admissible base, so ε < 2 keeps the
        // truncation away from the endpoints of the plateau intervals.
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 || self.epsilon >= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "truncation level must lie in (0, 2), got {}",
                self.epsilon
            )));
        }
        self.base.validate()
    }

    pub fn eval_base(&self, t: f64) -> f64 {
        self.base.value(t.rem_euclid(TAU))
    }

    /// Whether `t` falls in a truncated interval `(π/n + 2kπ, -π/n + (2k+2)π]`.
    pub fn in_plateau_band(&self, t: f64) -> bool {
        let r = t.rem_euclid(TAU);
        let w = PI / self.n as f64;
        r > w && r <= TAU - w
    }

    /// Whether the truncation is active at `t`, i.e. the value is ε and the slope is 0.
    pub fn on_plateau(&self, t: f64) -> bool {
        self.in_plateau_band(t) && self.fn_value(t) < self.epsilon
    }

    /// `f(n t)` evaluated on the representative of `t` in `[0, 2π)`.
    fn fn_value(&self, t: f64) -> f64 {
        self.base.value(self.n as f64 * t.rem_euclid(TAU))
    }

    pub fn eval_fn_eps(&self, t: f64) -> f64 {
        let v = self.fn_value(t);
        if self.in_plateau_band(t) {
            v.max(self.epsilon)
        } else {
            v
        }
    }

    /// A subgradient of `f_ε⁽ⁿ⁾`. On the plateau the slope is 0; at the plateau edge the
    /// smooth side `n f'(n t)` is returned.
    pub fn subgradient_fn_eps(&self, t: f64) -> f64 {
        if self.on_plateau(t) {
            0.0
        } else {
            self.n as f64 * self.base.derivative(self.n as f64 * t.rem_euclid(TAU))
        }
    }
}
