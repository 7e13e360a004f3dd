//! Discrete vorticity: the projection `P`, elastic differences, cell vorticity, the
//! vorticity measure, the discrete Stokes identity and flat norms of atomic measures.

mod assignment;
mod lp_oracle;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::lattice::{LatticeDomain, RegionMask, Shape};

pub use assignment::min_cost_assignment;
pub use lp_oracle::{flat_norm_lp_oracle, LP_MAX_ATOMS, LP_MAX_RESOLUTION};

/// Relative tolerance for deciding that `t` is equidistant from two multiples of 2π.
const TIE_TOL: f64 = 1e-12;

/// Nearest element of 2πℤ to `t`; the smaller one on ties.
pub fn project_p(t: f64) -> f64 {
    let lo = (t / TAU).floor() * TAU;
    let hi = lo + TAU;
    let (dlo, dhi) = (t - lo, hi - t);
    if (dlo - dhi).abs() <= TIE_TOL * t.abs().max(PI) || dlo < dhi {
        lo
    } else {
        hi
    }
}

/// Componentwise order of grid indices.
fn leq(a: [i64; 2], b: [i64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1]
}

/// `d^el ψ(i, j)`: the phase difference reduced to the signed distance from 2πℤ.
pub fn elastic_diff(psi: &ScalarField, i: usize, j: usize) -> Result<f64> {
    let d = psi.domain();
    d.bond_between(i, j).ok_or(Error::NotNeighbors(i, j))?;
    Ok(elastic_diff_unchecked(d, psi.values(), i, j))
}

pub(crate) fn elastic_diff_unchecked(d: &LatticeDomain, v: &[f64], i: usize, j: usize) -> f64 {
    let t = v[j] - v[i];
    if leq(d.sites()[i], d.sites()[j]) {
        t - project_p(t)
    } else {
        t + project_p(-t)
    }
}

/// Counterclockwise circulation `Σ d^el` around `cell`, before division by 2π.
fn circulation(d: &LatticeDomain, v: &[f64], cell: usize) -> f64 {
    let [ll, lr, ur, ul] = d.cells()[cell].corners;
    elastic_diff_unchecked(d, v, ll, lr)
        + elastic_diff_unchecked(d, v, lr, ur)
        + elastic_diff_unchecked(d, v, ur, ul)
        + elastic_diff_unchecked(d, v, ul, ll)
}

/// `α_ψ(i) = (1/2π) Σ_ccw d^el ψ`; an integer in `{-1, 0, 1}`.
pub fn cell_vorticity(psi: &ScalarField, cell: usize) -> Result<i32> {
    let d = psi.domain();
    if cell >= d.cells().len() {
        return Err(Error::InvalidCell(cell));
    }
    Ok((circulation(d, psi.values(), cell) / TAU).round() as i32)
}

/// Raw `α` before rounding, for checking that the circulation is an exact multiple of 2π.
pub fn cell_vorticity_raw(psi: &ScalarField, cell: usize) -> Result<f64> {
    let d = psi.domain();
    if cell >= d.cells().len() {
        return Err(Error::InvalidCell(cell));
    }
    Ok(circulation(d, psi.values(), cell) / TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub y: f64,
    /// Weight in units of π.
    pub d: i32,
}

impl Atom {
    pub fn pos(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// A signed atomic measure `π Σ d_k δ_{x_k}` on a convex domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VorticityMeasure {
    pub atoms: Vec<Atom>,
    pub domain_id: String,
    pub domain: Shape,
}

impl VorticityMeasure {
    pub fn new(domain: Shape, atoms: Vec<Atom>) -> Result<Self> {
        if let Some(a) = atoms.iter().find(|a| a.d == 0) {
            return Err(Error::InvalidParameter(format!(
                "atom at ({}, {}) has zero weight",
                a.x, a.y
            )));
        }
        if let Some(a) = atoms.iter().find(|a| !domain.contains(a.pos(), 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "atom at ({}, {}) lies outside {}",
                a.x,
                a.y,
                domain.id()
            )));
        }
        Ok(VorticityMeasure {
            atoms,
            domain_id: domain.id(),
            domain,
        })
    }

    pub fn empty(domain: Shape) -> Self {
        VorticityMeasure {
            atoms: Vec::new(),
            domain_id: domain.id(),
            domain,
        }
    }

    /// Total `Σ |d_k|`.
    pub fn mass(&self) -> u32 {
        self.atoms.iter().map(|a| a.d.unsigned_abs()).sum()
    }

    pub fn negated(&self) -> Self {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.d = -a.d;
        }
        m
    }
}

/// `μ(ψ) = π Σ α_ψ(i) δ` at the centers of cells with nonzero vorticity.
pub fn vorticity_measure(psi: &ScalarField) -> VorticityMeasure {
    let d = psi.domain();
    let v = psi.values();
    let alphas: Vec<i32> = (0..d.cells().len())
        .into_par_iter()
        .map(|c| (circulation(d, v, c) / TAU).round() as i32)
        .collect();
    let atoms = alphas
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .map(|(c, &a)| {
            let [x, y] = d.cell_center(c);
            Atom { x, y, d: a }
        })
        .collect();
    VorticityMeasure {
        atoms,
        domain_id: d.shape().id(),
        domain: *d.shape(),
    }
}

/// Both sides of the discrete Stokes identity on a cell region: the sum of `d^el` along
/// the counterclockwise boundary edges and `2π Σ α` over the region's cells.
pub fn stokes_check(psi: &ScalarField, region: &RegionMask) -> Result<(f64, f64)> {
    let d = psi.domain();
    check_simply_connected(d, region)?;
    let v = psi.values();
    let mut boundary = 0.0;
    let mut interior = 0i64;
    for (c, cell) in d.cells().iter().enumerate() {
        if !region.cells[c] {
            continue;
        }
        interior += (circulation(d, v, c) / TAU).round() as i64;
        let [ix, iy] = cell.index;
        let [ll, lr, ur, ul] = cell.corners;
        let sides = [
            ([ix, iy - 1], ll, lr),
            ([ix + 1, iy], lr, ur),
            ([ix, iy + 1], ur, ul),
            ([ix - 1, iy], ul, ll),
        ];
        for (nb, a, b) in sides {
            let outside = d.cell_at(nb).is_none_or(|n| !region.cells[n]);
            if outside {
                boundary += elastic_diff_unchecked(d, v, a, b);
            }
        }
    }
    Ok((boundary, TAU * interior as f64))
}

/// A closed union of cells is simply connected when it is connected (cells sharing a
/// corner count as touching) and its Euler characteristic `V - E + F` is 1.
fn check_simply_connected(d: &LatticeDomain, region: &RegionMask) -> Result<()> {
    let cells: Vec<usize> = (0..d.cells().len()).filter(|&c| region.cells[c]).collect();
    if cells.is_empty() {
        return Ok(());
    }
    let mut seen = vec![false; d.cells().len()];
    let mut stack = vec![cells[0]];
    seen[cells[0]] = true;
    let mut reached = 0;
    while let Some(c) = stack.pop() {
        reached += 1;
        let [ix, iy] = d.cells()[c].index;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(n) = d.cell_at([ix + dx, iy + dy]) {
                    if region.cells[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
    }
    if reached != cells.len() {
        return Err(Error::NotSimplyConnected(format!(
            "region has {} cells but only {reached} are connected",
            cells.len()
        )));
    }
    let mask = d.mask_from_cells(region.cells.clone());
    let v = mask.sites.iter().filter(|&&s| s).count() as i64;
    let e = mask.bonds.iter().filter(|&&b| b).count() as i64;
    let f = cells.len() as i64;
    let chi = v - e + f;
    if chi != 1 {
        return Err(Error::NotSimplyConnected(format!(
            "region has Euler characteristic {chi}"
        )));
    }
    Ok(())
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Minimal connection of `μ`, scaled by π: every unit of positive weight is joined to a
/// unit of negative weight or to the boundary, at Euclidean cost.
pub fn flat_norm(mu: &VorticityMeasure) -> Result<f64> {
    if !mu.domain.is_convex() {
        return Err(Error::UnsupportedDomain(format!(
            "{} is not convex",
            mu.domain_id
        )));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for a in &mu.atoms {
        let bucket = if a.d > 0 { &mut pos } else { &mut neg };
        bucket.extend(std::iter::repeat_n(a.pos(), a.d.unsigned_abs() as usize));
    }
    let (p, n) = (pos.len(), neg.len());
    let size = p + n;
    let bd = |x: [f64; 2]| mu.domain.boundary_distance(x);
    // Rows: positives, then one boundary slot per negative.
    // Columns: negatives, then one boundary slot per positive.
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|r| {
            (0..size)
                .map(|c| match (r < p, c < n) {
                    (true, true) => dist(pos[r], neg[c]),
                    (true, false) => bd(pos[r]),
                    (false, true) => bd(neg[c]),
                    (false, false) => 0.0,
                })
                .collect()
        })
        .collect();
    let (total, _) = min_cost_assignment(&cost);
    Ok(PI * total)
}

/// `flat_norm(μ₁ − μ₂)`.
pub fn flat_distance(mu1: &VorticityMeasure, mu2: &VorticityMeasure) -> Result<f64> {
    if mu1.domain != mu2.domain {
        return Err(Error::InvalidParameter(format!(
            "measures live on different domains: {} and {}",
            mu1.domain_id, mu2.domain_id
        )));
    }
    let mut m = mu1.clone();
    m.atoms.extend(mu2.negated().atoms);
    flat_norm(&m)
}
