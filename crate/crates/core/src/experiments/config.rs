//! Experiment configuration: one JSON document per run, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Shape;
use crate::potentials::BaseProfile;
use crate::solvers::{Core, RelaxationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CoreEnergy,
    VortexScaling,
    StringTension,
    DipoleSweep,
    Invariants,
    FlatnormCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::CoreEnergy => "core-energy",
            ExperimentKind::VortexScaling => "vortex-scaling",
            ExperimentKind::StringTension => "string-tension",
            ExperimentKind::DipoleSweep => "dipole-sweep",
            ExperimentKind::Invariants => "invariants",
            ExperimentKind::FlatnormCheck => "flatnorm-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// Well count; the truncation level of `f_ε⁽ⁿ⁾` is always the lattice spacing.
    pub n: u32,
    pub base: BaseProfile,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            n: 1,
            base: BaseProfile::Cosine,
        }
    }
}

/// Sample counts for the property checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckCounts {
    /// Random fields for the vorticity range and Stokes identity checks.
    pub topology_fields: usize,
    /// Random fields for the energy comparison chain and the interpolation bound.
    pub chain_fields: usize,
    /// Random atomic measures compared against the LP oracle.
    pub flatnorm_instances: usize,
    /// Grid resolution of the LP oracle.
    pub lp_resolution: usize,
}

impl Default for CheckCounts {
    fn default() -> Self {
        CheckCounts {
            topology_fields: 100_000,
            chain_fields: 1_000,
            flatnorm_instances: 20,
            lp_resolution: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Lattice domain; a per-experiment default is filled in by [`ExperimentConfig::resolve`].
    /// Core-energy runs always use `B_σ` about the origin and take no domain.
    #[serde(default)]
    pub domain: Option<Shape>,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    /// Core separations for the dipole sweep.
    #[serde(default)]
    pub separations: Vec<f64>,
    /// Wall angles in degrees for the string-tension run.
    #[serde(default)]
    pub angles: Vec<f64>,
    /// Vortex cores for the scaling run (degrees in units of `1/n`). Empty means a single
    /// `+1` core at the domain center.
    #[serde(default)]
    pub cores: Vec<Core>,
    /// Strings for the scaling run. Empty with a single fractional core means a straight
    /// string to the boundary along `+x`.
    #[serde(default)]
    pub strings: Vec<Vec<[f64; 2]>>,
    /// Freeze sites within 2ε of each core. Defaults to on for more than one core.
    #[serde(default)]
    pub pin_cores: Option<bool>,
    /// Allowed relative mismatch between `2π/d*` and the string tension.
    #[serde(default = "default_balance_tolerance")]
    pub balance_tolerance: f64,
    /// `relaxation.seed` is replaced by the top-level `seed`.
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    #[serde(default)]
    pub checks: CheckCounts,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Write relaxed fields to `fields/<tag>.csv`.
    #[serde(default)]
    pub dump_fields: bool,
}

fn default_balance_tolerance() -> f64 {
    0.3
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !(v > 0.0 && v.is_finite()) {
            return bad(format!("{name} must be positive and finite, got {v}"));
        }
    }
    Ok(())
}

fn distinct(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            domain: None,
            potential: PotentialConfig::default(),
            epsilons: Vec::new(),
            sigmas: Vec::new(),
            separations: Vec::new(),
            angles: Vec::new(),
            cores: Vec::new(),
            strings: Vec::new(),
            pin_cores: None,
            balance_tolerance: default_balance_tolerance(),
            relaxation: RelaxationConfig::default(),
            checks: CheckCounts::default(),
            output_dir: None,
            seed: 0,
            dump_fields: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fill per-experiment defaults, copy the seed into the relaxation config and validate.
    pub fn resolve(mut self) -> Result<Self> {
        self.relaxation.seed = self.seed;
        if self.domain.is_none() {
            self.domain = match self.experiment {
                ExperimentKind::CoreEnergy => None,
                ExperimentKind::VortexScaling => Some(Shape::unit_disk()),
                ExperimentKind::DipoleSweep => Some(Shape::rect([0.0, 0.0], 40.0, 40.0)),
                ExperimentKind::StringTension | ExperimentKind::Invariants | ExperimentKind::FlatnormCheck => {
                    Some(Shape::unit_square())
                }
            };
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.relaxation.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(shape) = &self.domain {
            shape.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.potential.n == 0 {
            return bad("potential.n must be >= 1");
        }
        check_positive("epsilons", &self.epsilons)?;
        check_positive("sigmas", &self.sigmas)?;
        check_positive("separations", &self.separations)?;
        if !(self.balance_tolerance > 0.0 && self.balance_tolerance.is_finite()) {
            return bad("balance_tolerance must be positive");
        }
        for &eps in &self.epsilons {
            for &sigma in &self.sigmas {
                if eps >= sigma / 4.0 {
                    return bad(format!("need ε < σ/4, got ε = {eps}, σ = {sigma}"));
                }
            }
        }
        let n = self.potential.n;
        match self.experiment {
            ExperimentKind::CoreEnergy => {
                if self.domain.is_some() {
                    return bad("core-energy runs on B_σ about the origin; remove `domain`");
                }
                if self.sigmas.is_empty() {
                    return bad("core-energy needs a nonempty `sigmas` grid");
                }
                if distinct(&self.epsilons) < 3 {
                    return bad("core-energy needs at least 3 distinct `epsilons`");
                }
            }
            ExperimentKind::VortexScaling => {
                if distinct(&self.epsilons) < 3 {
                    return bad("vortex-scaling needs at least 3 distinct `epsilons`");
                }
                if self.cores.iter().any(|c| c.d == 0) {
                    return bad("cores must have nonzero degree");
                }
            }
            ExperimentKind::StringTension => {
                if n < 2 {
                    return bad("string-tension needs potential.n >= 2");
                }
                if self.epsilons.is_empty() || self.angles.is_empty() {
                    return bad("string-tension needs nonempty `epsilons` and `angles`");
                }
                if self.angles.iter().any(|a| !a.is_finite()) {
                    return bad("angles must be finite");
                }
                if !matches!(self.domain, Some(Shape::Rect { .. })) {
                    return bad("string-tension needs a rectangular domain");
                }
            }
            ExperimentKind::DipoleSweep => {
                if n < 2 {
                    return bad("dipole-sweep needs potential.n >= 2");
                }
                if self.epsilons.is_empty() {
                    return bad("dipole-sweep needs a nonempty `epsilons` grid");
                }
                if distinct(&self.separations) < 3 {
                    return bad("dipole-sweep needs at least 3 distinct `separations`");
                }
            }
            ExperimentKind::Invariants => {}
            ExperimentKind::FlatnormCheck => {
                if self.checks.flatnorm_instances == 0 {
                    return bad("flatnorm-check needs checks.flatnorm_instances >= 1");
                }
                if !self.domain.is_some_and(|d| d.is_convex()) {
                    return bad("flatnorm-check needs a convex domain");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        let err = ExperimentConfig::from_json(r#"{"experiment":"invariants","sede":3}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = ExperimentConfig::from_json(r#"{"experiment":"core-energie"}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn defaults_and_resolution() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment":"string-tension","potential":{"n":2},"epsilons":[0.0625],"angles":[0,45],"seed":7}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.domain, Some(Shape::unit_square()));
        assert_eq!(cfg.relaxation.seed, 7);
        assert_eq!(cfg.potential.base, BaseProfile::Cosine);
        let round: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn grid_validation() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::CoreEnergy);
        cfg.sigmas = vec![1.0];
        cfg.epsilons = vec![1.0 / 16.0, 1.0 / 32.0];
        assert!(cfg.clone().resolve().is_err());
        cfg.epsilons.push(1.0 / 64.0);
        assert!(cfg.clone().resolve().is_ok());
        cfg.epsilons.push(0.3);
        assert!(cfg.clone().resolve().is_err());

        let mut t = ExperimentConfig::new(ExperimentKind::StringTension);
        t.epsilons = vec![0.1];
        t.angles = vec![0.0];
        assert!(t.clone().resolve().is_err(), "n = 1 has no strings");
        t.potential.n = 2;
        assert!(t.clone().resolve().is_ok());
        t.domain = Some(Shape::unit_disk());
        assert!(t.resolve().is_err());

        let mut d = ExperimentConfig::new(ExperimentKind::DipoleSweep);
        d.potential.n = 2;
        d.epsilons = vec![1.0 / 32.0];
        d.separations = vec![2.0, 4.0];
        assert!(d.clone().resolve().is_err());
        d.separations.push(6.0);
        assert!(d.resolve().is_ok());
    }
}
