//! Core energies on a disk `B_σ` centered at a lattice site.
//!
//! `γ(ε, σ)` minimizes `F^sym_ε` with boundary data `θ` on `∂_ε B_σ`; the fractional
//! variant minimizes `F_ε⁽ⁿ⁾` under `e^{inφ} = e^{idθ}` on the boundary. Since the plateau
//! of `f_ε⁽¹⁾` is empty, both share one routine and agree exactly for `n = 1`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::construct::{construct_field, Core, VortexPrescription};
use super::relax::{perturbed, relax_once, RelaxationConfig, Termination};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::lattice::{build_domain, LatticeDomain, Shape};
use crate::polar_angle;
use crate::potentials::{BaseProfile, PotentialSpec};

/// Number of distinct initializations per core-energy evaluation.
pub const CORE_RESTARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreEnergy {
    pub epsilon: f64,
    pub sigma: f64,
    pub energy: f64,
    /// `energy − π log(σ/ε)`.
    pub gamma_minus_log: f64,
    /// Part of the energy carried by plateau bonds (strings).
    pub plateau: f64,
    pub termination: Termination,
    /// Index of the best initialization.
    pub best_run: usize,
}

fn check_radii(sigma: f64, epsilon: f64) -> Result<()> {
    if !(sigma.is_finite() && epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter("σ and ε must be finite and ε > 0".into()));
    }
    // The micro-instance σ = 2.5ε is the smallest disk with interior sites off the core.
    if epsilon >= sigma / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "core energy needs ε < σ/2, got ε = {epsilon}, σ = {sigma}"
        )));
    }
    Ok(())
}

/// Disk `B_σ` about the origin, a lattice site.
pub fn core_domain(sigma: f64, epsilon: f64) -> Result<Arc<LatticeDomain>> {
    check_radii(sigma, epsilon)?;
    Ok(Arc::new(build_domain(Shape::disk([0.0, 0.0], sigma), epsilon)?))
}

/// Boundary values `(dθ + 2πk)/n` nearest to `phi0`, frozen; interior taken from `phi0`.
fn pin_boundary(phi0: &ScalarField, d: i32, n: u32) -> ScalarField {
    let dom = phi0.domain();
    let nf = n as f64;
    let mut v = phi0.values().to_vec();
    for s in dom.boundary_sites() {
        let target = d as f64 * polar_angle(dom.site_pos(s));
        let k = ((nf * v[s] - target) / TAU).round();
        v[s] = (target + TAU * k) / nf;
    }
    ScalarField::new(dom.clone(), v).expect("finite boundary data")
}

/// Initial fields for the restarts: the first is unperturbed; for `n = 1` the rest are
/// perturbations (mirrored with the sign of `d`), for `n ≥ 2` the string is laid along
/// each of the four half-axes in turn.
fn initial_fields(
    dom: &Arc<LatticeDomain>,
    sigma: f64,
    d: i32,
    n: u32,
    cfg: &RelaxationConfig,
) -> Result<Vec<ScalarField>> {
    let eps = dom.epsilon();
    let c = [0.5 * eps, 0.5 * eps];
    let core = Core { x: c[0], y: c[1], d };
    let mut out = Vec::with_capacity(CORE_RESTARTS);
    if n == 1 {
        // Sampled directly rather than through `construct_field` so that disks too small
        // for its 2ε core clearance are allowed.
        let theta = ScalarField::from_fn(dom.clone(), |p| d as f64 * polar_angle([p[0] - c[0], p[1] - c[1]]));
        let base = pin_boundary(&theta, d, 1);
        let frozen = dom.boundary_mask();
        out.push(base.clone());
        for run in 1..CORE_RESTARTS {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(run as u64));
            out.push(perturbed(&base, frozen, cfg.perturbation, d.signum() as f64, &mut rng));
        }
    } else {
        let reach = sigma + 2.0 * eps;
        let ends = [[reach, c[1]], [c[0], reach], [-reach, c[1]], [c[0], -reach]];
        for end in ends {
            let p = VortexPrescription { n, cores: vec![core], strings: vec![vec![c, end]] };
            out.push(pin_boundary(&construct_field(dom, &p)?, d, n));
        }
    }
    Ok(out)
}

/// Core energy together with the winning relaxation.
pub(crate) fn core_energy_impl(
    sigma: f64,
    epsilon: f64,
    d: i32,
    spec: PotentialSpec,
    cfg: &RelaxationConfig,
) -> Result<(CoreEnergy, super::relax::RelaxOutcome)> {
    if d != 1 && d != -1 {
        return Err(Error::InvalidParameter(format!("degree must be ±1, got {d}")));
    }
    cfg.validate()?;
    spec.validate()?;
    let dom = core_domain(sigma, epsilon)?;
    let inits = initial_fields(&dom, sigma, d, spec.n, cfg)?;
    let frozen = dom.boundary_mask();
    let runs: Vec<Result<_>> = inits
        .par_iter()
        .map(|phi0| relax_once(phi0, &spec, frozen, cfg))
        .collect();
    let mut best: Option<(usize, super::relax::RelaxOutcome)> = None;
    for (k, r) in runs.into_iter().enumerate() {
        let r = r?;
        if best.as_ref().is_none_or(|(_, b)| r.energy < b.energy) {
            best = Some((k, r));
        }
    }
    let (best_run, out) = best.expect("at least one initialization");
    let plateau = crate::energy::energy_fn_eps(&out.field, &spec, &dom.whole()).plateau;
    let ce = CoreEnergy {
        epsilon,
        sigma,
        energy: out.energy,
        gamma_minus_log: out.energy - PI * (sigma / epsilon).ln(),
        plateau,
        termination: out.termination,
        best_run,
    };
    Ok((ce, out))
}

/// The potential used for `γ′`: truncation level equal to the lattice spacing.
pub(crate) fn frac_spec(n: u32, epsilon: f64, base: BaseProfile) -> Result<PotentialSpec> {
    if n == 1 {
        Ok(PotentialSpec::symmetric(base))
    } else {
        PotentialSpec::with_base(n, epsilon, base)
    }
}

/// `γ(ε, σ)`: minimal `F^sym_ε` on `B_σ` with boundary data `θ`.
pub fn core_energy_sym(sigma: f64, epsilon: f64, base: BaseProfile, cfg: &RelaxationConfig) -> Result<CoreEnergy> {
    Ok(core_energy_impl(sigma, epsilon, 1, PotentialSpec::symmetric(base), cfg)?.0)
}

/// `γ′(ε, σ)`: minimal `F_ε⁽ⁿ⁾` on `B_σ` under `e^{inφ} = e^{idθ}` on the boundary. The
/// potential's truncation level is set to the lattice spacing.
pub fn core_energy_frac(
    sigma: f64,
    epsilon: f64,
    d: i32,
    n: u32,
    base: BaseProfile,
    cfg: &RelaxationConfig,
) -> Result<CoreEnergy> {
    Ok(core_energy_impl(sigma, epsilon, d, frac_spec(n, epsilon, base)?, cfg)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub gamma: f64,
    pub error_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub per_sigma: Vec<SigmaEstimate>,
    /// Mean of the per-σ estimates.
    pub gamma: f64,
    /// Largest per-σ error bar.
    pub error_bar: f64,
    /// Set when two σ estimates differ by more than twice the error bar.
    pub sigma_dependent: bool,
}

/// Estimate `γ` from a table of `(ε, σ, γ(ε, σ))`: per σ, the value of
/// `γ(ε, σ) − π log(σ/ε)` at the smallest ε, with the last difference along ε as error bar.
pub fn gamma_extrapolate(table: &[(f64, f64, f64)]) -> Result<GammaEstimate> {
    let mut by_sigma: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for &(eps, sigma, value) in table {
        if !(eps > 0.0 && sigma > 0.0 && value.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad table row ({eps}, {sigma}, {value})")));
        }
        by_sigma
            .entry(sigma.to_bits())
            .or_default()
            .push((eps, value - PI * (sigma / eps).ln()));
    }
    if by_sigma.is_empty() {
        return Err(Error::InsufficientData("empty γ table".into()));
    }
    let mut per_sigma = Vec::new();
    for (bits, mut rows) in by_sigma {
        let sigma = f64::from_bits(bits);
        rows.sort_by(|a, b| b.0.total_cmp(&a.0));
        rows.dedup_by(|a, b| a.0 == b.0);
        if rows.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "σ = {sigma} has {} distinct ε values, need 3",
                rows.len()
            )));
        }
        let k = rows.len() - 1;
        per_sigma.push(SigmaEstimate {
            sigma,
            gamma: rows[k].1,
            error_bar: (rows[k].1 - rows[k - 1].1).abs(),
        });
    }
    let gamma = per_sigma.iter().map(|s| s.gamma).sum::<f64>() / per_sigma.len() as f64;
    let error_bar = per_sigma.iter().map(|s| s.error_bar).fold(0.0, f64::max);
    let sigma_dependent = per_sigma
        .iter()
        .any(|a| per_sigma.iter().any(|b| (a.gamma - b.gamma).abs() > 2.0 * error_bar));
    Ok(GammaEstimate {
        per_sigma,
        gamma,
        error_bar,
        sigma_dependent,
    })
}
