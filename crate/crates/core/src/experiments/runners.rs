//! Core-energy tables, vortex energy scaling, string tension and the dipole sweep.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::FieldDump;
use crate::energy::energy_fn_eps;
use crate::error::{Error, Result};
use crate::fields::{jump_pairs, ScalarField};
use crate::lattice::{build_domain, LatticeDomain, Shape};
use crate::potentials::{BaseProfile, PotentialSpec};
use crate::solvers::core_energy::{core_energy_impl, frac_spec};
use crate::solvers::{
    construct_field, gamma_extrapolate, relax, Core, CoreEnergy, GammaEstimate, Termination,
    VortexPrescription,
};
use crate::topology::vorticity_measure;

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs two or more points".into()));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    Ok(LinearFit {
        slope,
        intercept,
        residuals,
    })
}

/// Abscissa of the vertex of the parabola through three points, if it opens upward.
pub fn parabola_vertex(p: [(f64, f64); 3]) -> Option<f64> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        return None;
    }
    // y = y0 + d01 (x − x0) + a (x − x0)(x − x1)
    Some(0.5 * (x0 + x1) - d01 / (2.0 * a))
}

fn domain_of(cfg: &ExperimentConfig, eps: f64) -> Result<Arc<LatticeDomain>> {
    let shape = cfg.domain.ok_or_else(|| Error::Config("experiment needs a domain".into()))?;
    Ok(Arc::new(build_domain(shape, eps)?))
}

// ---------------------------------------------------------------------------------------
// Core energies

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub sigma: f64,
    pub epsilon: f64,
    /// `γ′(ε, σ) − γ(ε, σ)`; nonnegative by the energy comparison.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreEnergyReport {
    pub sym: Vec<CoreEnergy>,
    /// `γ′` table for `d = +1`; empty when `n = 1`.
    pub frac: Vec<CoreEnergy>,
    pub gamma: GammaEstimate,
    pub gamma_frac: Option<GammaEstimate>,
    pub gaps: Vec<GapRow>,
}

pub fn run_core_energy(cfg: &ExperimentConfig, dumps: &mut Vec<FieldDump>) -> Result<CoreEnergyReport> {
    let n = cfg.potential.n;
    let base = cfg.potential.base;
    let points: Vec<(usize, usize)> = (0..cfg.sigmas.len())
        .flat_map(|s| (0..cfg.epsilons.len()).map(move |e| (s, e)))
        .collect();
    type Point = ((CoreEnergy, ScalarField), Option<(CoreEnergy, ScalarField)>);
    let results: Vec<Result<Point>> = points
        .par_iter()
        .map(|&(s, e)| {
            let (sigma, eps) = (cfg.sigmas[s], cfg.epsilons[e]);
            let (sym, out) = core_energy_impl(sigma, eps, 1, PotentialSpec::symmetric(base), &cfg.relaxation)?;
            let frac = if n >= 2 {
                let (ce, out) = core_energy_impl(sigma, eps, 1, frac_spec(n, eps, base)?, &cfg.relaxation)?;
                Some((ce, out.field))
            } else {
                None
            };
            Ok(((sym, out.field), frac))
        })
        .collect();
    let mut sym = Vec::new();
    let mut frac = Vec::new();
    for (&(s, e), r) in points.iter().zip(results) {
        let ((ce, field), fr) = r?;
        sym.push(ce);
        if cfg.dump_fields {
            dumps.push(FieldDump::new(format!("sym-s{s}-e{e}"), 1, field));
        }
        if let Some((ce, field)) = fr {
            frac.push(ce);
            if cfg.dump_fields {
                dumps.push(FieldDump::new(format!("frac-s{s}-e{e}"), n, field));
            }
        }
    }
    let table = |rows: &[CoreEnergy]| -> Vec<(f64, f64, f64)> {
        rows.iter().map(|r| (r.epsilon, r.sigma, r.energy)).collect()
    };
    let gamma = gamma_extrapolate(&table(&sym))?;
    let gamma_frac = if frac.is_empty() {
        None
    } else {
        Some(gamma_extrapolate(&table(&frac))?)
    };
    let gaps = sym
        .iter()
        .zip(&frac)
        .map(|(a, b)| GapRow {
            sigma: a.sigma,
            epsilon: a.epsilon,
            gap: b.energy - a.energy,
        })
        .collect();
    Ok(CoreEnergyReport {
        sym,
        frac,
        gamma,
        gamma_frac,
        gaps,
    })
}

// ---------------------------------------------------------------------------------------
// Vortex energy scaling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub log_inv_eps: f64,
    pub energy: f64,
    /// Number of atoms of `μ(nφ)` after relaxation.
    pub atoms: usize,
    pub termination: Termination,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fit: LinearFit,
    /// `π Σ |d_k|` with degrees counted for `v = u^n`.
    pub expected_slope: f64,
    pub relative_error: f64,
}

/// Cores and strings of the scaling run with defaults filled in.
pub fn scaling_prescription(cfg: &ExperimentConfig) -> Result<VortexPrescription> {
    let shape = cfg.domain.ok_or_else(|| Error::Config("vortex-scaling needs a domain".into()))?;
    let n = cfg.potential.n;
    let eps_min = cfg.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let eps_max = cfg.epsilons.iter().copied().fold(0.0, f64::max);
    let cores = if cfg.cores.is_empty() {
        let c = shape.center();
        vec![Core {
            x: c[0] + 0.5 * eps_min,
            y: c[1] + 0.5 * eps_min,
            d: 1,
        }]
    } else {
        cfg.cores.clone()
    };
    let fractional: Vec<&Core> = cores.iter().filter(|c| c.d.rem_euclid(n as i32) != 0).collect();
    let strings = if cfg.strings.is_empty() && n >= 2 && fractional.len() == 1 {
        let c = fractional[0];
        let (_, hi) = shape.bbox();
        vec![vec![c.pos(), [hi[0] + eps_max, c.y]]]
    } else {
        cfg.strings.clone()
    };
    Ok(VortexPrescription { n, cores, strings })
}

/// Boundary sites, plus the sites within 2ε of a core when `pin` is set.
pub fn pinned_mask(dom: &LatticeDomain, cores: &[Core], pin: bool) -> Vec<bool> {
    let eps = dom.epsilon();
    (0..dom.n_sites())
        .map(|s| {
            let p = dom.site_pos(s);
            dom.is_boundary(s) || (pin && cores.iter().any(|c| (p[0] - c.x).hypot(p[1] - c.y) <= 2.0 * eps))
        })
        .collect()
}

pub fn run_vortex_scaling(cfg: &ExperimentConfig, dumps: &mut Vec<FieldDump>) -> Result<ScalingReport> {
    let prescription = scaling_prescription(cfg)?;
    let n = cfg.potential.n;
    let pin = cfg.pin_cores.unwrap_or(prescription.cores.len() > 1);
    let results: Vec<Result<(ScalingRow, ScalarField)>> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let dom = domain_of(cfg, eps)?;
            let phi0 = construct_field(&dom, &prescription)?;
            let spec = frac_spec(n, eps, cfg.potential.base)?;
            let frozen = pinned_mask(&dom, &prescription.cores, pin);
            let out = relax(&phi0, &spec, &frozen, &cfg.relaxation)?;
            let atoms = vorticity_measure(&out.field.scaled(n as f64)).atoms.len();
            let row = ScalingRow {
                epsilon: eps,
                log_inv_eps: -eps.ln(),
                energy: out.energy,
                atoms,
                termination: out.termination,
                iterations: out.log.len() - 1,
            };
            Ok((row, out.field))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        let (row, field) = r?;
        rows.push(row);
        if cfg.dump_fields {
            dumps.push(FieldDump::new(format!("e{k}"), n, field));
        }
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.log_inv_eps).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let fit = linear_fit(&xs, &ys)?;
    let expected_slope = PI * prescription.cores.iter().map(|c| c.d.unsigned_abs() as f64).sum::<f64>();
    let relative_error = (fit.slope - expected_slope).abs() / expected_slope;
    Ok(ScalingReport {
        rows,
        fit,
        expected_slope,
        relative_error,
    })
}

// ---------------------------------------------------------------------------------------
// String tension

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensionRow {
    pub epsilon: f64,
    pub angle_deg: f64,
    pub energy: f64,
    pub jump_bonds: usize,
    /// Length of the wall inside the sites' bounding box grown by ε/2.
    pub chord: f64,
    pub tension: f64,
    /// `|cos α| + |sin α|`.
    pub predicted: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensionReport {
    pub rows: Vec<TensionRow>,
    pub max_relative_error: f64,
}

/// Pure jump field of a straight wall at `angle_deg` through the domain center: `2π/n`
/// on the left of the wall direction, 0 on the right. Also returns the wall's chord.
pub fn wall_field(dom: &Arc<LatticeDomain>, n: u32, angle_deg: f64) -> (ScalarField, f64) {
    let eps = dom.epsilon();
    let c = dom.shape().center();
    // A grid point shifted off every site, bond midpoint and lattice diagonal.
    let p0 = [
        (c[0] / eps).round() * eps + 0.5 * eps,
        (c[1] / eps).round() * eps + 0.25 * eps,
    ];
    let a = angle_deg.to_radians();
    let dir = [a.cos(), a.sin()];
    let normal = [-dir[1], dir[0]];
    let jump = TAU / n as f64;
    let phi = ScalarField::from_fn(dom.clone(), |p| {
        if (p[0] - p0[0]) * normal[0] + (p[1] - p0[1]) * normal[1] > 0.0 {
            jump
        } else {
            0.0
        }
    });
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for s in 0..dom.n_sites() {
        let p = dom.site_pos(s);
        for k in 0..2 {
            lo[k] = lo[k].min(p[k] - 0.5 * eps);
            hi[k] = hi[k].max(p[k] + 0.5 * eps);
        }
    }
    // Clip the line p0 + t·dir to the box.
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..2 {
        if dir[k].abs() < 1e-15 {
            continue;
        }
        let (a, b) = ((lo[k] - p0[k]) / dir[k], (hi[k] - p0[k]) / dir[k]);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (phi, (t1 - t0).max(0.0))
}

pub(crate) fn wall_tension(dom: &Arc<LatticeDomain>, n: u32, base: BaseProfile, angle_deg: f64) -> Result<TensionRow> {
    let eps = dom.epsilon();
    let spec = PotentialSpec::with_base(n, eps, base)?;
    let (phi, chord) = wall_field(dom, n, angle_deg);
    let energy = energy_fn_eps(&phi, &spec, &dom.whole()).total;
    let jump_bonds = jump_pairs(&phi, n).jump_bonds.len();
    let a = angle_deg.to_radians();
    let predicted = a.cos().abs() + a.sin().abs();
    let tension = energy / chord;
    Ok(TensionRow {
        epsilon: eps,
        angle_deg,
        energy,
        jump_bonds,
        chord,
        tension,
        predicted,
        relative_error: (tension - predicted).abs() / predicted,
    })
}

pub fn run_string_tension(cfg: &ExperimentConfig, dumps: &mut Vec<FieldDump>) -> Result<TensionReport> {
    let n = cfg.potential.n;
    let mut rows = Vec::new();
    for (e, &eps) in cfg.epsilons.iter().enumerate() {
        let dom = domain_of(cfg, eps)?;
        let part: Vec<Result<TensionRow>> = cfg
            .angles
            .par_iter()
            .map(|&a| wall_tension(&dom, n, cfg.potential.base, a))
            .collect();
        for (k, r) in part.into_iter().enumerate() {
            rows.push(r?);
            if cfg.dump_fields {
                dumps.push(FieldDump::new(format!("e{e}-a{k}"), n, wall_field(&dom, n, cfg.angles[k]).0));
            }
        }
    }
    let max_relative_error = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(TensionReport {
        rows,
        max_relative_error,
    })
}

// ---------------------------------------------------------------------------------------
// Critical dipole length

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleRow {
    pub epsilon: f64,
    pub separation: f64,
    /// Distance between the cores after snapping them to cell centers.
    pub actual_separation: f64,
    pub energy: f64,
    pub plateau: f64,
    pub termination: Termination,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    InteriorMinimum,
    Decreasing,
    Increasing,
    NonMonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleSweep {
    pub epsilon: f64,
    pub trend: Trend,
    pub decreasing_at_small: bool,
    pub increasing_at_large: bool,
    /// Parabolic refinement around the lowest grid point; `None` when inconclusive.
    pub d_star: Option<f64>,
    /// Axis-aligned string tension measured at this ε.
    pub tension: f64,
    /// Repulsion `2π/d*` of two `+1` vortices of `v = u^n`.
    pub repulsion: Option<f64>,
    pub relative_mismatch: Option<f64>,
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleReport {
    pub rows: Vec<DipoleRow>,
    pub sweeps: Vec<DipoleSweep>,
}

fn snap_to_cell_center(x: f64, eps: f64) -> f64 {
    ((x / eps).floor() + 0.5) * eps
}

/// Prescription for two `+1/n` cores a distance of about `separation` apart, placed
/// symmetrically about the domain center and joined by a straight string.
pub fn dipole_prescription(shape: &Shape, n: u32, eps: f64, separation: f64) -> VortexPrescription {
    let c = shape.center();
    let y = snap_to_cell_center(c[1], eps);
    let xl = snap_to_cell_center(c[0] - 0.5 * separation, eps);
    let xr = snap_to_cell_center(c[0] + 0.5 * separation, eps);
    VortexPrescription {
        n,
        cores: vec![Core { x: xl, y, d: 1 }, Core { x: xr, y, d: 1 }],
        strings: vec![vec![[xl, y], [xr, y]]],
    }
}

fn classify(rows: &[&DipoleRow]) -> (Trend, Option<usize>) {
    let e: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let k = (0..e.len()).min_by(|&a, &b| e[a].total_cmp(&e[b])).expect("nonempty sweep");
    if k > 0 && k + 1 < e.len() {
        return (Trend::InteriorMinimum, Some(k));
    }
    if e.windows(2).all(|w| w[1] <= w[0]) {
        (Trend::Decreasing, None)
    } else if e.windows(2).all(|w| w[1] >= w[0]) {
        (Trend::Increasing, None)
    } else {
        (Trend::NonMonotone, None)
    }
}

pub fn run_dipole_sweep(cfg: &ExperimentConfig, dumps: &mut Vec<FieldDump>) -> Result<DipoleReport> {
    let n = cfg.potential.n;
    let shape = cfg.domain.ok_or_else(|| Error::Config("dipole-sweep needs a domain".into()))?;
    let mut rows = Vec::new();
    let mut sweeps = Vec::new();
    for (e, &eps) in cfg.epsilons.iter().enumerate() {
        let dom = domain_of(cfg, eps)?;
        let spec = frac_spec(n, eps, cfg.potential.base)?;
        let results: Vec<Result<(DipoleRow, ScalarField)>> = cfg
            .separations
            .par_iter()
            .map(|&sep| {
                let p = dipole_prescription(&shape, n, eps, sep);
                let phi0 = construct_field(&dom, &p)?;
                let frozen = pinned_mask(&dom, &p.cores, true);
                let out = relax(&phi0, &spec, &frozen, &cfg.relaxation)?;
                let plateau = energy_fn_eps(&out.field, &spec, &dom.whole()).plateau;
                let row = DipoleRow {
                    epsilon: eps,
                    separation: sep,
                    actual_separation: p.cores[1].x - p.cores[0].x,
                    energy: out.energy,
                    plateau,
                    termination: out.termination,
                    iterations: out.log.len() - 1,
                };
                Ok((row, out.field))
            })
            .collect();
        let first = rows.len();
        for (k, r) in results.into_iter().enumerate() {
            let (row, field) = r?;
            rows.push(row);
            if cfg.dump_fields {
                dumps.push(FieldDump::new(format!("e{e}-d{k}"), n, field));
            }
        }
        let mut sorted: Vec<&DipoleRow> = rows[first..].iter().collect();
        sorted.sort_by(|a, b| a.actual_separation.total_cmp(&b.actual_separation));
        sorted.dedup_by(|a, b| a.actual_separation == b.actual_separation);
        if sorted.len() < 3 {
            return Err(Error::Config(format!(
                "separations collapse to {} distinct values at ε = {eps}",
                sorted.len()
            )));
        }
        let (trend, k) = classify(&sorted);
        let d_star = k.and_then(|k| {
            let pts = [k - 1, k, k + 1].map(|j| (sorted[j].actual_separation, sorted[j].energy));
            parabola_vertex(pts).map(|x| x.clamp(pts[0].0, pts[2].0))
        });
        let axis = Arc::new(build_domain(Shape::unit_square(), eps)?);
        let tension = wall_tension(&axis, n, cfg.potential.base, 0.0)?.tension;
        let repulsion = d_star.map(|d| TAU / d);
        let relative_mismatch = repulsion.map(|f| (f - tension).abs() / tension);
        let m = sorted.len();
        sweeps.push(DipoleSweep {
            epsilon: eps,
            trend,
            decreasing_at_small: sorted[1].energy < sorted[0].energy,
            increasing_at_large: sorted[m - 1].energy > sorted[m - 2].energy,
            d_star,
            tension,
            repulsion,
            relative_mismatch,
            balanced: relative_mismatch.is_some_and(|r| r <= cfg.balance_tolerance),
        });
    }
    Ok(DipoleReport { rows, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn parabola_vertex_exact() {
        let y = |x: f64| 3.0 * (x - 1.7) * (x - 1.7) + 0.4;
        let v = parabola_vertex([(1.0, y(1.0)), (1.5, y(1.5)), (2.5, y(2.5))]).unwrap();
        assert!((v - 1.7).abs() < 1e-12);
        assert!(parabola_vertex([(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).is_none());
    }

    #[test]
    fn axis_wall_is_exact() {
        for k in [8.0, 16.0, 64.0] {
            let dom = Arc::new(build_domain(Shape::unit_square(), 1.0 / k).unwrap());
            for angle in [0.0, 90.0] {
                let row = wall_tension(&dom, 2, BaseProfile::Cosine, angle).unwrap();
                assert!((row.tension - 1.0).abs() < 1e-12, "{row:?}");
                assert_eq!(row.jump_bonds as f64, k + 1.0);
            }
        }
    }

    #[test]
    fn diagonal_wall_counts_crossings() {
        // Oracle: count the bonds the segment crosses directly.
        let eps = 1.0 / 32.0;
        let dom = Arc::new(build_domain(Shape::unit_square(), eps).unwrap());
        let (phi, _) = wall_field(&dom, 2, 45.0);
        let p0 = [0.5 + 0.5 * eps, 0.5 + 0.25 * eps];
        let side = |p: [f64; 2]| (p[1] - p0[1]) - (p[0] - p0[0]) > 0.0;
        let crossings = dom
            .bonds()
            .iter()
            .filter(|b| side(dom.site_pos(b.a)) != side(dom.site_pos(b.b)))
            .count();
        assert_eq!(jump_pairs(&phi, 2).jump_bonds.len(), crossings);
        let row = wall_tension(&dom, 2, BaseProfile::Cosine, 45.0).unwrap();
        assert!((row.tension - 2f64.sqrt()).abs() <= 2.0 * eps, "{row:?}");
    }

    #[test]
    fn dipole_cores_on_cell_centers() {
        let eps = 1.0 / 8.0;
        let p = dipole_prescription(&Shape::rect([0.0, 0.0], 4.0, 4.0), 2, eps, 1.3);
        for c in &p.cores {
            assert!(((c.x / eps) - 0.5).fract().abs() < 1e-12);
            assert!(((c.y / eps) - 0.5).fract().abs() < 1e-12);
        }
        assert!((p.cores[1].x - p.cores[0].x - 1.3).abs() <= eps);
    }
}
