//! Vortex-plus-string initial fields.
//!
//! The total vortex field `ϑ = Σ d_k θ(· − x_k)` is divided by `n` by integrating its
//! elastic differences along bonds that do not cross a prescribed string. Loops around a
//! fractional core always cross its string, so the integration is consistent up to
//! multiples of 2π, and the phase jumps by about `2π/n` across each string.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::lattice::LatticeDomain;
use crate::polar_angle;
use crate::topology::{elastic_diff_unchecked, vorticity_measure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Core {
    pub x: f64,
    pub y: f64,
    /// Degree in units of `1/n`.
    pub d: i32,
}

impl Core {
    pub fn pos(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexPrescription {
    pub n: u32,
    pub cores: Vec<Core>,
    /// Polylines; each endpoint is a core or lies on (or outside) the boundary.
    #[serde(default)]
    pub strings: Vec<Vec<[f64; 2]>>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test.
pub(crate) fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

impl VortexPrescription {
    /// Check the prescription against a domain and return the strings with boundary
    /// endpoints pushed 2ε outward, so that every boundary bond next to the endpoint is cut.
    fn resolve(&self, domain: &LatticeDomain) -> Result<Vec<Vec<[f64; 2]>>> {
        let eps = domain.epsilon();
        let shape = domain.shape();
        let bad = |m: String| Err(Error::InvalidPrescription(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        for (k, c) in self.cores.iter().enumerate() {
            if c.d == 0 {
                return bad(format!("core {k} has zero degree"));
            }
            if !(c.x.is_finite() && c.y.is_finite()) || !shape.contains(c.pos(), 0.0) {
                return bad(format!("core {k} lies outside the domain"));
            }
            if shape.boundary_distance(c.pos()) < 2.0 * eps {
                return bad(format!("core {k} is closer than 2ε to the boundary"));
            }
            for (l, o) in self.cores.iter().enumerate().take(k) {
                if dist(c.pos(), o.pos()) < 2.0 * eps {
                    return bad(format!("cores {l} and {k} are closer than 2ε"));
                }
            }
        }
        if self.n == 1 && !self.strings.is_empty() {
            return bad("strings carry no phase jump when n = 1".into());
        }
        let near_core = |p: [f64; 2]| self.cores.iter().position(|c| dist(c.pos(), p) <= 1e-9 * eps.max(1.0));
        let at_boundary = |p: [f64; 2]| !shape.contains(p, 0.0) || shape.boundary_distance(p) <= eps;
        let mut ends = vec![0usize; self.cores.len()];
        let mut resolved = Vec::with_capacity(self.strings.len());
        for (s, path) in self.strings.iter().enumerate() {
            if path.len() < 2 {
                return bad(format!("string {s} needs at least two points"));
            }
            if path.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return bad(format!("string {s} has a non-finite point"));
            }
            let mut path = path.clone();
            let last = path.len() - 1;
            for (end, prev) in [(0usize, 1usize), (last, last - 1)] {
                let p = path[end];
                if let Some(c) = near_core(p) {
                    ends[c] += 1;
                } else if at_boundary(p) {
                    let q = path[prev];
                    let len = dist(p, q);
                    if len > 0.0 {
                        let t = 2.0 * eps / len;
                        path[end] = [p[0] + t * (p[0] - q[0]), p[1] + t * (p[1] - q[1])];
                    }
                } else {
                    return bad(format!(
                        "string {s} ends at ({}, {}), which is neither a core nor the boundary",
                        p[0], p[1]
                    ));
                }
            }
            resolved.push(path);
        }
        if self.n >= 2 {
            for (k, &e) in ends.iter().enumerate() {
                let fractional = self.cores[k].d.rem_euclid(self.n as i32) != 0;
                if fractional && e != 1 {
                    return bad(format!("core {k} must end exactly one string, found {e}"));
                }
            }
        }
        Ok(resolved)
    }
}

/// `φ ≈ Σ (d_k/n) θ(· − x_k)` with `2π/n` jumps across the prescribed strings.
pub fn construct_field(domain: &Arc<LatticeDomain>, prescription: &VortexPrescription) -> Result<ScalarField> {
    let strings = prescription.resolve(domain)?;
    let n = prescription.n as f64;
    let d = domain.as_ref();
    // The angle fields are centred on the cell holding each core, so a core near a cell
    // edge still winds around its own cell.
    let mut centres = Vec::with_capacity(prescription.cores.len());
    for c in &prescription.cores {
        let cell = d.cell_containing(c.pos()).ok_or_else(|| {
            Error::InvalidPrescription(format!("core ({}, {}) is not inside a cell", c.x, c.y))
        })?;
        centres.push((d.cell_center(cell), c.d as f64));
    }
    let theta: Vec<f64> = (0..d.n_sites())
        .map(|s| {
            let p = d.site_pos(s);
            centres.iter().map(|&(c, w)| w * polar_angle([p[0] - c[0], p[1] - c[1]])).sum()
        })
        .collect();

    let segments: Vec<([f64; 2], [f64; 2])> = strings
        .iter()
        .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
        .collect();
    let cut: Vec<bool> = d
        .bonds()
        .iter()
        .map(|b| {
            let (p, q) = (d.site_pos(b.a), d.site_pos(b.b));
            segments.iter().any(|&(a, c)| segments_intersect(p, q, a, c))
        })
        .collect();

    let mut phi = vec![f64::NAN; d.n_sites()];
    let mut queue = VecDeque::new();
    let other = |k: usize, s: usize| {
        let b = d.bonds()[k];
        if b.a == s {
            b.b
        } else {
            b.a
        }
    };
    for root in 0..d.n_sites() {
        if !phi[root].is_nan() {
            continue;
        }
        // A new component is seeded from an assigned neighbour across a string.
        let seeded = d.incident(root).iter().find_map(|&(k, _)| {
            let j = other(k, root);
            (!phi[j].is_nan()).then(|| phi[j] + elastic_diff_unchecked(d, &theta, j, root) / n + TAU / n)
        });
        phi[root] = seeded.unwrap_or(theta[root] / n);
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            for &(k, _) in d.incident(i) {
                let j = other(k, i);
                if cut[k] || !phi[j].is_nan() {
                    continue;
                }
                phi[j] = phi[i] + elastic_diff_unchecked(d, &theta, i, j) / n;
                queue.push_back(j);
            }
        }
    }
    let field = ScalarField::new(domain.clone(), phi)?;

    // The induced vorticity must be the prescribed one.
    let mu = vorticity_measure(&field.scaled(n));
    let mut expected: Vec<(usize, i32)> = Vec::new();
    for c in &prescription.cores {
        let cell = d.cell_containing(c.pos()).ok_or_else(|| {
            Error::InvalidPrescription(format!("core ({}, {}) is not inside a cell", c.x, c.y))
        })?;
        match expected.iter_mut().find(|(k, _)| *k == cell) {
            Some(e) => e.1 += c.d,
            None => expected.push((cell, c.d)),
        }
    }
    expected.retain(|&(_, w)| w != 0);
    let mut got: Vec<(usize, i32)> = mu
        .atoms
        .iter()
        .map(|a| (d.cell_containing(a.pos()).expect("atoms sit at cell centers"), a.d))
        .collect();
    expected.sort_unstable();
    got.sort_unstable();
    if expected != got {
        return Err(Error::InvalidPrescription(format!(
            "constructed vorticity {got:?} differs from the prescription {expected:?}; cores are too close"
        )));
    }
    Ok(field)
}
