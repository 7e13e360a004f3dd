//! The discrete energies `F_ε⁽ⁿ⁾`, `F^sym_ε`, `XY_ε` and the phase gradient of `F_ε⁽ⁿ⁾`.
//!
//! Every energy is a plain sum over unordered bonds, which equals the half sum over
//! ordered pairs used in the continuum-facing definitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::{ScalarField, SpinField};
use crate::lattice::{LatticeDomain, RegionMask};
use crate::potentials::{BaseProfile, PotentialSpec};
use crate::sum::{chunked_sum, Neumaier, CHUNK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// Bonds where the potential is not truncated.
    pub main: f64,
    /// `ε · n_bonds_plateau`.
    pub plateau: f64,
    pub n_bonds_plateau: usize,
}

fn in_region(region: Option<&RegionMask>, bond: usize) -> bool {
    region.is_none_or(|r| r.bonds[bond])
}

/// `F_ε⁽ⁿ⁾(φ)` localized to the bonds of `region`.
pub fn energy_fn_eps(phi: &ScalarField, spec: &PotentialSpec, region: &RegionMask) -> EnergyBreakdown {
    let d = phi.domain();
    let bonds = d.bonds();
    let v = phi.values();
    let n_chunks = bonds.len().div_ceil(CHUNK);
    let partials: Vec<(Neumaier, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut main = Neumaier::default();
            let mut count = 0usize;
            for k in c * CHUNK..((c + 1) * CHUNK).min(bonds.len()) {
                if !region.bonds[k] {
                    continue;
                }
                let t = v[bonds[k].b] - v[bonds[k].a];
                if spec.on_plateau(t) {
                    count += 1;
                } else {
                    main.add(spec.eval_fn_eps(t));
                }
            }
            (main, count)
        })
        .collect();
    let mut main = Neumaier::default();
    let mut count = 0;
    for (m, c) in partials {
        main.add(m.value());
        count += c;
    }
    let main = main.value();
    let plateau = spec.epsilon * count as f64;
    EnergyBreakdown {
        total: main + plateau,
        main,
        plateau,
        n_bonds_plateau: count,
    }
}

/// `F^sym_ε(ϑ) = Σ_bonds f(Δϑ)` over the bonds of `region`.
pub fn energy_sym(theta: &ScalarField, base: &BaseProfile, region: &RegionMask) -> f64 {
    let bonds = theta.domain().bonds();
    let v = theta.values();
    chunked_sum(bonds.len(), |k| {
        if region.bonds[k] {
            base.value((v[bonds[k].b] - v[bonds[k].a]).rem_euclid(std::f64::consts::TAU))
        } else {
            0.0
        }
    })
}

/// `XY_ε(w) = ½ Σ_bonds |Δw|²` over the bonds of `region`.
pub fn energy_xy(w: &SpinField, region: &RegionMask) -> f64 {
    let bonds = w.domain().bonds();
    chunked_sum(bonds.len(), |k| {
        if region.bonds[k] {
            let [dx, dy] = w.diff(bonds[k].a, bonds[k].b);
            0.5 * (dx * dx + dy * dy)
        } else {
            0.0
        }
    })
}

/// Per-site slope `∂F_ε⁽ⁿ⁾/∂φ(i)`, zero on frozen sites.
pub fn gradient_fn_eps(phi: &ScalarField, spec: &PotentialSpec, frozen: &[bool]) -> Vec<f64> {
    energy_and_gradient(phi.domain(), phi.values(), spec, frozen, None).1
}

/// Whole-domain energy and free-site gradient from raw values.
pub(crate) fn energy_and_gradient(
    domain: &LatticeDomain,
    values: &[f64],
    spec: &PotentialSpec,
    frozen: &[bool],
    region: Option<&RegionMask>,
) -> (f64, Vec<f64>) {
    let bonds = domain.bonds();
    let slopes: Vec<f64> = bonds
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            if in_region(region, k) {
                spec.subgradient_fn_eps(values[b.b] - values[b.a])
            } else {
                0.0
            }
        })
        .collect();
    let energy = chunked_sum(bonds.len(), |k| {
        if in_region(region, k) {
            spec.eval_fn_eps(values[bonds[k].b] - values[bonds[k].a])
        } else {
            0.0
        }
    });
    let grad = (0..domain.n_sites())
        .into_par_iter()
        .map(|s| {
            if frozen[s] {
                0.0
            } else {
                domain
                    .incident(s)
                    .iter()
                    .map(|&(k, sign)| sign * slopes[k])
                    .sum()
            }
        })
        .collect();
    (energy, grad)
}

pub(crate) fn energy_only(domain: &LatticeDomain, values: &[f64], spec: &PotentialSpec) -> f64 {
    let bonds = domain.bonds();
    chunked_sum(bonds.len(), |k| {
        spec.eval_fn_eps(values[bonds[k].b] - values[bonds[k].a])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{dirichlet_energy, exp_map, interpolate_affine};
    use crate::lattice::{build_domain, Region, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn square(eps: f64) -> Arc<LatticeDomain> {
        Arc::new(build_domain(Shape::unit_square(), eps).unwrap())
    }

    fn random_field(d: &Arc<LatticeDomain>, rng: &mut ChaCha8Rng, scale: f64) -> ScalarField {
        let v = (0..d.n_sites()).map(|_| rng.gen_range(0.0..scale)).collect();
        ScalarField::new(d.clone(), v).unwrap()
    }

    #[test]
    fn constant_fields_have_zero_energy() {
        let d = square(0.125);
        let phi = ScalarField::constant(d.clone(), 1.3);
        let spec = PotentialSpec::new(2, 0.1).unwrap();
        let w = d.whole();
        assert_eq!(energy_fn_eps(&phi, &spec, &w).total, 0.0);
        assert_eq!(energy_sym(&phi, &BaseProfile::Cosine, &w), 0.0);
        assert_eq!(energy_xy(&exp_map(&phi, 1), &w), 0.0);
        assert!(gradient_fn_eps(&phi, &spec, &vec![false; d.n_sites()]).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_bond_values() {
        let d = Arc::new(build_domain(Shape::rect([0.0, 0.0], 1.0, 1.0), 0.9999).unwrap());
        let phi = ScalarField::from_fn(d.clone(), |p| if p[0] > 0.5 { PI } else { 0.0 });
        let w = d.whole();
        // Two horizontal bonds carry Δ = π.
        assert!((energy_sym(&phi, &BaseProfile::Cosine, &w) - 4.0).abs() < 1e-14);
        assert!((energy_xy(&exp_map(&phi, 1), &w) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn horizontal_wall_energy_is_length() {
        let eps = 1.0 / 32.0;
        let d = Arc::new(build_domain(Shape::rect([0.0, 0.0], 1.0 - eps, 1.0), eps).unwrap());
        let phi = ScalarField::from_fn(d.clone(), |p| if p[1] > 0.5 + 0.25 * eps { PI } else { 0.0 });
        let spec = PotentialSpec::new(2, eps).unwrap();
        let e = energy_fn_eps(&phi, &spec, &d.whole());
        assert_eq!(e.n_bonds_plateau, 32);
        assert!((e.total - 1.0).abs() < 1e-14);
        assert_eq!(e.main, 0.0);
    }

    #[test]
    fn n1_equals_sym() {
        let d = square(0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = PotentialSpec::new(1, 0.125).unwrap();
        for _ in 0..100 {
            let phi = random_field(&d, &mut rng, 20.0);
            let e = energy_fn_eps(&phi, &spec, &d.whole());
            assert_eq!(e.n_bonds_plateau, 0);
            let s = energy_sym(&phi, &BaseProfile::Cosine, &d.whole());
            assert!((e.total - s).abs() < 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn xy_of_exp_is_sym() {
        let d = square(0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = random_field(&d, &mut rng, 12.0);
        let a = energy_xy(&exp_map(&theta, 1), &d.whole());
        let b = energy_sym(&theta, &BaseProfile::Cosine, &d.whole());
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn comparison_chain_and_dirichlet_bound() {
        let d = square(0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = BaseProfile::CosineQuartic { c: 0.2 };
        for _ in 0..200 {
            let n = rng.gen_range(1..5u32);
            let spec = PotentialSpec::with_base(n, 0.25, base).unwrap();
            let phi = random_field(&d, &mut rng, 8.0);
            let region = d
                .region_mask(&Region::Shape(Shape::rect([0.25, 0.0], 0.5, 0.75)))
                .unwrap();
            let f = energy_fn_eps(&phi, &spec, &region).total;
            let s = energy_sym(&phi.scaled(n as f64), &base, &region);
            let w = exp_map(&phi, n);
            let x = energy_xy(&w, &region);
            let dir = dirichlet_energy(&interpolate_affine(&w), &region);
            assert!(f >= s - 1e-12 && s >= x - 1e-12 && x >= dir - 1e-12);
        }
    }

    #[test]
    fn gauge_invariance_and_additivity() {
        let d = square(0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = PotentialSpec::new(3, 0.125).unwrap();
        let phi = random_field(&d, &mut rng, 6.0);
        let shifted = ScalarField::from_fn(d.clone(), |p| {
            phi.values()[d.site_at([(p[0] * 8.0).round() as i64, (p[1] * 8.0).round() as i64]).unwrap()] + 0.77
        });
        let w = d.whole();
        let e0 = energy_fn_eps(&phi, &spec, &w).total;
        let e1 = energy_fn_eps(&shifted, &spec, &w).total;
        assert!((e0 - e1).abs() < 1e-9);
        // Cells are split into two halves along a dual line; shared bonds are counted on both sides.
        let left = d.region_mask(&Region::Shape(Shape::rect([0.0, 0.0], 0.5, 1.0))).unwrap();
        let right = d.region_mask(&Region::Shape(Shape::rect([0.5, 0.0], 0.5, 1.0))).unwrap();
        let shared: Vec<usize> = (0..d.bonds().len()).filter(|&k| left.bonds[k] && right.bonds[k]).collect();
        let mut cut = d.whole();
        cut.bonds = shared.iter().fold(vec![false; d.bonds().len()], |mut m, &k| {
            m[k] = true;
            m
        });
        let sum = energy_fn_eps(&phi, &spec, &left).total + energy_fn_eps(&phi, &spec, &right).total
            - energy_fn_eps(&phi, &spec, &cut).total;
        assert!((sum - e0).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = square(0.125);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let frozen: Vec<bool> = d.boundary_mask().to_vec();
        let mut checked = 0;
        for trial in 0..100 {
            let n = 1 + trial % 3;
            let spec = PotentialSpec::new(n, 0.05).unwrap();
            let phi = random_field(&d, &mut rng, 4.0);
            let dir: Vec<f64> = (0..d.n_sites())
                .map(|s| if frozen[s] { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let h = 1e-6;
            let shift = |sgn: f64| {
                let v = phi.values().iter().zip(&dir).map(|(a, b)| a + sgn * h * b).collect();
                ScalarField::new(d.clone(), v).unwrap()
            };
            // Skip fields with a bond near a kink.
            let kinky = d.bonds().iter().any(|b| {
                let t0 = shift(-2.0).diff(b.a, b.b);
                let t1 = shift(2.0).diff(b.a, b.b);
                spec.on_plateau(t0) != spec.on_plateau(t1) || spec.in_plateau_band(t0) != spec.in_plateau_band(t1)
            });
            if kinky {
                continue;
            }
            let w = d.whole();
            let fd = (energy_fn_eps(&shift(1.0), &spec, &w).total - energy_fn_eps(&shift(-1.0), &spec, &w).total)
                / (2.0 * h);
            let g = gradient_fn_eps(&phi, &spec, &frozen);
            let dd: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            assert!((fd - dd).abs() <= 1e-5 * dd.abs().max(1e-2), "fd={fd} dd={dd}");
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn midpoint_is_stationary() {
        // Two cells side by side; the middle column is free, both neighbours in each row frozen.
        let d = Arc::new(build_domain(Shape::rect([0.0, 0.0], 2.0, 1.0), 0.9999).unwrap());
        assert_eq!(d.n_sites(), 6);
        let mid_bottom = d.site_at([1, 0]).unwrap();
        let mid_top = d.site_at([1, 1]).unwrap();
        let phi = ScalarField::from_fn(d.clone(), |p| if p[0] < 0.5 { 0.0 } else if p[0] < 1.5 { 0.2 } else { 0.4 });
        let mut frozen = vec![true; 6];
        frozen[mid_bottom] = false;
        frozen[mid_top] = false;
        let g = gradient_fn_eps(&phi, &PotentialSpec::new(1, 0.1).unwrap(), &frozen);
        assert!(g[mid_bottom].abs() < 1e-15 && g[mid_top].abs() < 1e-15);
    }
}
