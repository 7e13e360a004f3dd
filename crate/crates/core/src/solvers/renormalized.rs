//! `w(σ) = ½ ∫_{Ω_ε ∖ ∪ B_σ(x_k)} |∇v|² − M π |log σ|` for piecewise affine `v`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::InterpolatedField;
use crate::sum::Neumaier;
use crate::topology::VorticityMeasure;

/// How triangles meeting a ball are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallExclusion {
    /// Integrate exactly over the part of each triangle outside the balls.
    #[default]
    ExactClip,
    /// Drop every triangle that meets a ball.
    WholeTriangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedEstimate {
    /// `(σ, w(σ))` in the order given.
    pub values: Vec<(f64, f64)>,
    /// `w` at the smallest σ.
    pub w: f64,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Signed area of `B_r(0) ∩ Co(0, a, b)`.
fn wedge_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let sector = |u: [f64; 2], v: [f64; 2]| 0.5 * r * r * cross(u, v).atan2(dot(u, v));
    let r2 = r * r;
    if dot(a, a) <= r2 && dot(b, b) <= r2 {
        return 0.5 * cross(a, b);
    }
    let d = [b[0] - a[0], b[1] - a[1]];
    let qa = dot(d, d);
    if qa == 0.0 {
        return 0.0;
    }
    let qb = dot(a, d);
    let qc = dot(a, a) - r2;
    let disc = qb * qb - qa * qc;
    if disc <= 0.0 {
        return sector(a, b);
    }
    let s = disc.sqrt();
    let (t1, t2) = ((-qb - s) / qa, (-qb + s) / qa);
    if t2 <= 0.0 || t1 >= 1.0 {
        return sector(a, b);
    }
    let (t1, t2) = (t1.max(0.0), t2.min(1.0));
    let p1 = [a[0] + t1 * d[0], a[1] + t1 * d[1]];
    let p2 = [a[0] + t2 * d[0], a[1] + t2 * d[1]];
    sector(a, p1) + 0.5 * cross(p1, p2) + sector(p2, b)
}

/// Area of the intersection of a triangle with the disk `B_r(c)`.
pub fn triangle_disk_area(tri: [[f64; 2]; 3], c: [f64; 2], r: f64) -> f64 {
    let rel = tri.map(|p| [p[0] - c[0], p[1] - c[1]]);
    (wedge_area(rel[0], rel[1], r) + wedge_area(rel[1], rel[2], r) + wedge_area(rel[2], rel[0], r)).abs()
}

/// Distance from `p` to a closed triangle.
fn point_triangle_distance(tri: [[f64; 2]; 3], p: [f64; 2]) -> f64 {
    let s = |a: [f64; 2], b: [f64; 2]| cross([b[0] - a[0], b[1] - a[1]], [p[0] - a[0], p[1] - a[1]]);
    let (d0, d1, d2) = (s(tri[0], tri[1]), s(tri[1], tri[2]), s(tri[2], tri[0]));
    if (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0) {
        return 0.0;
    }
    let seg = |a: [f64; 2], b: [f64; 2]| {
        let d = [b[0] - a[0], b[1] - a[1]];
        let t = (dot([p[0] - a[0], p[1] - a[1]], d) / dot(d, d)).clamp(0.0, 1.0);
        (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
    };
    seg(tri[0], tri[1]).min(seg(tri[1], tri[2])).min(seg(tri[2], tri[0]))
}

/// `w(σ)` for each σ; `sigmas` must be strictly decreasing, larger than 2ε, with
/// pairwise disjoint balls around the atoms of `mu`.
pub fn renormalized_energy_estimate(
    v: &InterpolatedField,
    mu: &VorticityMeasure,
    sigmas: &[f64],
    exclusion: BallExclusion,
) -> Result<RenormalizedEstimate> {
    let dom = v.domain();
    let eps = dom.epsilon();
    if sigmas.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    for (k, &s) in sigmas.iter().enumerate() {
        if !(s > 2.0 * eps && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ = {s} must exceed 2ε = {}", 2.0 * eps)));
        }
        if k > 0 && s >= sigmas[k - 1] {
            return Err(Error::InvalidParameter("radii must be strictly decreasing".into()));
        }
    }
    for (k, a) in mu.atoms.iter().enumerate() {
        if !dom.shape().contains(a.pos(), 0.0) || dom.shape().boundary_distance(a.pos()) == 0.0 {
            return Err(Error::InvalidParameter(format!("atom {k} is not interior")));
        }
        for (l, b) in mu.atoms.iter().enumerate().take(k) {
            if (a.x - b.x).hypot(a.y - b.y) <= 2.0 * sigmas[0] {
                return Err(Error::OverlappingBalls(l, k));
            }
        }
    }
    let m = mu.mass() as f64;
    let mut values = Vec::with_capacity(sigmas.len());
    let half_area = 0.5 * eps * eps;
    for &sigma in sigmas {
        let mut acc = Neumaier::default();
        for c in 0..dom.cells().len() {
            let (lo, hi) = dom.cell_triangles(c)?;
            let g2 = v.grad_norm2(c);
            for (tri, dens) in [(lo.vertices, g2[0]), (hi.vertices, g2[1])] {
                if dens == 0.0 {
                    continue;
                }
                let area = match exclusion {
                    BallExclusion::ExactClip => {
                        let inside: f64 = mu
                            .atoms
                            .iter()
                            .map(|a| triangle_disk_area(tri, a.pos(), sigma))
                            .sum();
                        (half_area - inside).max(0.0)
                    }
                    BallExclusion::WholeTriangle => {
                        if mu.atoms.iter().any(|a| point_triangle_distance(tri, a.pos()) < sigma) {
                            0.0
                        } else {
                            half_area
                        }
                    }
                };
                acc.add(0.5 * dens * area);
            }
        }
        values.push((sigma, acc.value() - m * PI * sigma.ln().abs()));
    }
    let w = values.last().expect("nonempty").1;
    Ok(RenormalizedEstimate { values, w })
}
