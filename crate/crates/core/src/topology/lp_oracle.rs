//! Dual (test-function) formulation of the flat norm, solved as a linear program on a grid.
//!
//! Maximize `Σ d_k η(x_k)` over grid functions with `|η(p)| ≤ dist(p, ∂Ω)` and
//! `|η(p) − η(q)| ≤ |p − q|` along a 16-direction stencil. Atoms are extra nodes linked to
//! nearby grid nodes and to each other with exact Euclidean distances.

use std::f64::consts::PI;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use super::VorticityMeasure;
use crate::error::{Error, Result};

pub const LP_MAX_ATOMS: usize = 6;
pub const LP_MAX_RESOLUTION: usize = 64;

/// Primitive offsets `(a, b)` with `max(|a|, |b|) ≤ 3`, one per direction up to sign.
fn stencil() -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for a in 0..=3i64 {
        for b in -3..=3i64 {
            if (a == 0 && b <= 0) || gcd(a, b) != 1 {
                continue;
            }
            out.push((a, b));
        }
    }
    out
}

fn add_lipschitz(lp: &mut Problem, p: Variable, q: Variable, len: f64) {
    lp.add_constraint([(p, 1.0), (q, -1.0)], ComparisonOp::Le, len);
    lp.add_constraint([(q, 1.0), (p, -1.0)], ComparisonOp::Le, len);
}

/// π times the LP maximum on a grid of spacing `max(width, height) / resolution`.
pub fn flat_norm_lp_oracle(mu: &VorticityMeasure, resolution: usize) -> Result<f64> {
    if mu.atoms.len() > LP_MAX_ATOMS {
        return Err(Error::ResourceLimit(format!(
            "{} atoms exceed the oracle limit of {LP_MAX_ATOMS}",
            mu.atoms.len()
        )));
    }
    if resolution == 0 || resolution > LP_MAX_RESOLUTION {
        return Err(Error::ResourceLimit(format!(
            "grid resolution must lie in 1..={LP_MAX_RESOLUTION}, got {resolution}"
        )));
    }
    if !mu.domain.is_convex() {
        return Err(Error::UnsupportedDomain(format!("{} is not convex", mu.domain_id)));
    }
    if mu.atoms.is_empty() {
        return Ok(0.0);
    }
    let shape = mu.domain;
    let (lo, hi) = shape.bbox();
    let h = (hi[0] - lo[0]).max(hi[1] - lo[1]) / resolution as f64;
    let nx = ((hi[0] - lo[0]) / h + 1e-9).floor() as i64;
    let ny = ((hi[1] - lo[1]) / h + 1e-9).floor() as i64;
    let node_pos = |a: i64, b: i64| [lo[0] + a as f64 * h, lo[1] + b as f64 * h];

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // Grid nodes strictly inside the domain; boundary nodes are the constant 0 and are
    // implied by the distance bounds.
    let mut grid: Vec<Option<Variable>> = Vec::with_capacity(((nx + 1) * (ny + 1)) as usize);
    for a in 0..=nx {
        for b in 0..=ny {
            let p = node_pos(a, b);
            let var = if shape.contains(p, 0.0) {
                let r = shape.boundary_distance(p);
                (r > 1e-12 * h).then(|| lp.add_var(0.0, (-r, r)))
            } else {
                None
            };
            grid.push(var);
        }
    }
    let at = |a: i64, b: i64| -> Option<Variable> {
        if a < 0 || b < 0 || a > nx || b > ny {
            None
        } else {
            grid[(a * (ny + 1) + b) as usize]
        }
    };
    for (da, db) in stencil() {
        let len = h * (da as f64).hypot(db as f64);
        for a in 0..=nx {
            for b in 0..=ny {
                if let (Some(p), Some(q)) = (at(a, b), at(a + da, b + db)) {
                    add_lipschitz(&mut lp, p, q, len);
                }
            }
        }
    }

    // Atoms at the same position share a node.
    let mut sites: Vec<([f64; 2], i64)> = Vec::new();
    for atom in &mu.atoms {
        match sites.iter_mut().find(|(p, _)| *p == atom.pos()) {
            Some(s) => s.1 += atom.d as i64,
            None => sites.push((atom.pos(), atom.d as i64)),
        }
    }
    let mut atom_vars = Vec::with_capacity(sites.len());
    for &(p, d) in &sites {
        let r = shape.boundary_distance(p);
        let var = lp.add_var(d as f64, (-r, r));
        let (ca, cb) = (((p[0] - lo[0]) / h).round() as i64, ((p[1] - lo[1]) / h).round() as i64);
        for a in ca - 3..=ca + 3 {
            for b in cb - 3..=cb + 3 {
                let q = node_pos(a, b);
                let len = (p[0] - q[0]).hypot(p[1] - q[1]);
                if len <= 2.0 * h {
                    if let Some(g) = at(a, b) {
                        add_lipschitz(&mut lp, var, g, len);
                    }
                }
            }
        }
        for (&(q, _), &other) in sites.iter().zip(&atom_vars) {
            add_lipschitz(&mut lp, var, other, (p[0] - q[0]).hypot(p[1] - q[1]));
        }
        atom_vars.push(var);
    }

    let sol = lp.solve().map_err(|e| Error::Lp(e.to_string()))?;
    Ok(PI * sol.objective())
}
