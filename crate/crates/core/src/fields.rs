//! Phase fields, spin fields and their extensions to the continuum.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Axis, LatticeDomain, RegionMask};
use crate::sum::Neumaier;

/// A real phase per site.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_sites() {
            return Err(Error::FieldMismatch(format!(
                "{} values for {} sites",
                values.len(),
                domain.n_sites()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::FieldMismatch(format!("non-finite value at site {k}")));
        }
        Ok(ScalarField { domain, values })
    }

    pub fn constant(domain: Arc<LatticeDomain>, c: f64) -> Self {
        let values = vec![c; domain.n_sites()];
        ScalarField { domain, values }
    }

    /// Sample `f` at every site position.
    pub fn from_fn(domain: Arc<LatticeDomain>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.n_sites()).map(|s| f(domain.site_pos(s))).collect();
        ScalarField { domain, values }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        ScalarField {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Phase difference `φ(j) - φ(i)`.
    pub fn diff(&self, i: usize, j: usize) -> f64 {
        self.values[j] - self.values[i]
    }

    /// CSV dump with header `ix,iy,x,y,phi`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["ix", "iy", "x", "y", "phi"])?;
        for (s, &[ix, iy]) in self.domain.sites().iter().enumerate() {
            let [x, y] = self.domain.site_pos(s);
            w.serialize((ix, iy, x, y, self.values[s]))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a field dump; every site of `domain` must appear exactly once.
    pub fn read_csv<R: Read>(domain: Arc<LatticeDomain>, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["ix", "iy", "x", "y", "phi"] {
            return Err(Error::FieldMismatch(format!("unexpected header {headers:?}")));
        }
        let mut values = vec![f64::NAN; domain.n_sites()];
        for rec in r.deserialize() {
            let (ix, iy, _x, _y, phi): (i64, i64, f64, f64, f64) = rec?;
            let s = domain
                .site_at([ix, iy])
                .ok_or_else(|| Error::FieldMismatch(format!("site ({ix},{iy}) not in domain")))?;
            values[s] = phi;
        }
        ScalarField::new(domain, values)
    }
}

/// A unit vector per site.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinField {
    domain: Arc<LatticeDomain>,
    values: Vec<[f64; 2]>,
}

impl SpinField {
    pub fn new(domain: Arc<LatticeDomain>, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != domain.n_sites() {
            return Err(Error::FieldMismatch(format!(
                "{} spins for {} sites",
                values.len(),
                domain.n_sites()
            )));
        }
        if let Some(k) = values
            .iter()
            .position(|v| (v[0].hypot(v[1]) - 1.0).abs() > 1e-12)
        {
            return Err(Error::FieldMismatch(format!("spin at site {k} is not unit")));
        }
        Ok(SpinField { domain, values })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn diff(&self, i: usize, j: usize) -> [f64; 2] {
        sub(self.values[j], self.values[i])
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm2(a: [f64; 2]) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

/// Site-wise `(cos mφ, sin mφ)`.
pub fn exp_map(phi: &ScalarField, multiplier: u32) -> SpinField {
    let m = multiplier as f64;
    let values = phi
        .values
        .iter()
        .map(|&p| {
            let (s, c) = (m * p).sin_cos();
            [c, s]
        })
        .collect();
    SpinField {
        domain: Arc::clone(&phi.domain),
        values,
    }
}

/// Distance from `t` to 2πℤ.
pub fn dist_to_2pi_z(t: f64) -> f64 {
    let r = t.rem_euclid(std::f64::consts::TAU);
    r.min(std::f64::consts::TAU - r)
}

/// One connected polyline of dual segments.
#[derive(Debug, Clone, PartialEq)]
pub struct StringComponent {
    pub bonds: Vec<usize>,
    /// Dual vertices (cell centers) of odd degree.
    pub endpoints: Vec<[f64; 2]>,
}

/// Jump pairs of a phase field and the dual segments that carry the strings.
#[derive(Debug, Clone, PartialEq)]
pub struct StringSet {
    pub epsilon: f64,
    pub jump_bonds: Vec<usize>,
    pub dual_segments: Vec<[[f64; 2]; 2]>,
    pub length_1norm: f64,
    pub components: Vec<StringComponent>,
    /// Per cell: whether one of its four edges is a jump pair.
    pub jump_cells: Vec<bool>,
}

/// Dual vertices (as lower-left cell indices) joined by the dual edge of `bond`.
fn dual_vertices(domain: &LatticeDomain, bond: usize) -> [[i64; 2]; 2] {
    let b = domain.bonds()[bond];
    let [ix, iy] = domain.sites()[b.a];
    match b.axis {
        Axis::X => [[ix, iy - 1], [ix, iy]],
        Axis::Y => [[ix - 1, iy], [ix, iy]],
    }
}

fn dual_center(eps: f64, v: [i64; 2]) -> [f64; 2] {
    [(v[0] as f64 + 0.5) * eps, (v[1] as f64 + 0.5) * eps]
}

/// Bonds with `dist(Δφ, 2πℤ) > π/n`, with their dual segments and connected components.
pub fn jump_pairs(phi: &ScalarField, n: u32) -> StringSet {
    let domain = &phi.domain;
    let eps = domain.epsilon();
    let threshold = std::f64::consts::PI / n as f64;
    let jump_bonds: Vec<usize> = domain
        .bonds()
        .iter()
        .enumerate()
        .filter(|(_, b)| dist_to_2pi_z(phi.diff(b.a, b.b)) > threshold)
        .map(|(k, _)| k)
        .collect();

    let dual_segments = jump_bonds
        .iter()
        .map(|&k| dual_vertices(domain, k).map(|v| dual_center(eps, v)))
        .collect();

    let mut is_jump = vec![false; domain.bonds().len()];
    for &k in &jump_bonds {
        is_jump[k] = true;
    }
    let jump_cells = domain
        .cells()
        .iter()
        .map(|c| c.edges.iter().any(|&e| is_jump[e]))
        .collect();

    StringSet {
        epsilon: eps,
        length_1norm: eps * jump_bonds.len() as f64,
        components: string_components(domain, &jump_bonds),
        jump_bonds,
        dual_segments,
        jump_cells,
    }
}

fn string_components(domain: &LatticeDomain, jump_bonds: &[usize]) -> Vec<StringComponent> {
    let mut vid: HashMap<[i64; 2], usize> = HashMap::new();
    let mut verts: Vec<[i64; 2]> = Vec::new();
    let mut edges = Vec::with_capacity(jump_bonds.len());
    for &k in jump_bonds {
        let [u, v] = dual_vertices(domain, k).map(|d| {
            *vid.entry(d).or_insert_with(|| {
                verts.push(d);
                verts.len() - 1
            })
        });
        edges.push((u, v));
    }
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut degree = vec![0usize; verts.len()];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru.max(rv)] = ru.min(rv);
        }
    }
    // Keyed by root; roots are ordered by first appearance through the sorted bond list.
    let mut by_root: BTreeMap<usize, StringComponent> = BTreeMap::new();
    for (e, &(u, _)) in edges.iter().enumerate() {
        let r = find(&mut parent, u);
        by_root
            .entry(r)
            .or_insert_with(|| StringComponent {
                bonds: Vec::new(),
                endpoints: Vec::new(),
            })
            .bonds
            .push(jump_bonds[e]);
    }
    let eps = domain.epsilon();
    for (v, &d) in verts.iter().enumerate() {
        if degree[v] % 2 == 1 {
            let r = find(&mut parent, v);
            if let Some(c) = by_root.get_mut(&r) {
                c.endpoints.push(dual_center(eps, d));
            }
        }
    }
    let mut comps: Vec<StringComponent> = by_root.into_values().collect();
    comps.sort_by_key(|c| c.bonds[0]);
    comps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub endpoints: Vec<[f64; 2]>,
    pub n_bonds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringSummary {
    pub length_1norm: f64,
    pub n_components: usize,
    pub components: Vec<ComponentSummary>,
}

pub fn extract_strings(strings: &StringSet) -> StringSummary {
    StringSummary {
        length_1norm: strings.length_1norm,
        n_components: strings.components.len(),
        components: strings
            .components
            .iter()
            .map(|c| ComponentSummary {
                endpoints: c.endpoints.clone(),
                n_bonds: c.bonds.len(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpMode {
    /// `A(w)` on every triangle.
    Affine,
    /// Constant `w(i)` on open jump cells, `A(w)` elsewhere.
    JumpCellConstant,
}

/// Gradient of an affine map `R² → R²`, stored as its two columns `∂/∂x₁`, `∂/∂x₂`.
pub type Gradient = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedField {
    domain: Arc<LatticeDomain>,
    mode: InterpMode,
    /// Per cell: the lower-left value `w(i)`.
    anchor: Vec<[f64; 2]>,
    /// Per cell: gradients on `T⁻` and `T⁺`.
    grads: Vec<[Gradient; 2]>,
    jump_cells: Vec<bool>,
}

impl InterpolatedField {
    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn mode(&self) -> InterpMode {
        self.mode
    }

    pub fn jump_cells(&self) -> &[bool] {
        &self.jump_cells
    }

    /// Gradients on `(T⁻, T⁺)` of `cell`; zero on jump cells.
    pub fn gradients(&self, cell: usize) -> [Gradient; 2] {
        if self.jump_cells[cell] {
            [[[0.0; 2]; 2]; 2]
        } else {
            self.grads[cell]
        }
    }

    /// `|∇|²` on `(T⁻, T⁺)` of `cell`.
    pub fn grad_norm2(&self, cell: usize) -> [f64; 2] {
        self.gradients(cell)
            .map(|g| norm2(g[0]) + norm2(g[1]))
    }

    /// Point evaluation; zero outside `Ω_ε`.
    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let eps = self.domain.epsilon();
        let Some(c) = self.domain.cell_containing(p) else {
            return [0.0, 0.0];
        };
        let [ix, iy] = self.domain.cells()[c].index;
        let (lx, ly) = (p[0] - ix as f64 * eps, p[1] - iy as f64 * eps);
        let interior = lx > 0.0 && ly > 0.0 && lx < eps && ly < eps;
        if self.jump_cells[c] && interior {
            return self.anchor[c];
        }
        let g = if ly <= lx { self.grads[c][0] } else { self.grads[c][1] };
        let w = self.anchor[c];
        [
            w[0] + g[0][0] * lx + g[1][0] * ly,
            w[1] + g[0][1] * lx + g[1][1] * ly,
        ]
    }

    /// Interior cell edges across which the field is discontinuous.
    pub fn discontinuity_edges(&self) -> Vec<usize> {
        let d = &self.domain;
        let mut out = Vec::new();
        let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); d.bonds().len()];
        for (c, cell) in d.cells().iter().enumerate() {
            for (slot, &e) in cell.edges.iter().enumerate() {
                owners[e].push((c, slot));
            }
        }
        for (e, own) in owners.iter().enumerate() {
            if own.len() != 2 {
                continue;
            }
            let b = d.bonds()[e];
            let trace = |c: usize| -> [[f64; 2]; 2] {
                if self.jump_cells[c] {
                    [self.anchor[c]; 2]
                } else {
                    [self.eval_corner(c, b.a), self.eval_corner(c, b.b)]
                }
            };
            let (t0, t1) = (trace(own[0].0), trace(own[1].0));
            let gap = (0..2).map(|k| norm2(sub(t0[k], t1[k]))).fold(0.0, f64::max);
            if gap > 1e-24 {
                out.push(e);
            }
        }
        out
    }

    fn eval_corner(&self, cell: usize, site: usize) -> [f64; 2] {
        let c = &self.domain.cells()[cell];
        let eps = self.domain.epsilon();
        let [ix, iy] = c.index;
        let [sx, sy] = self.domain.sites()[site];
        let (lx, ly) = ((sx - ix) as f64 * eps, (sy - iy) as f64 * eps);
        let g = if ly <= lx { self.grads[cell][0] } else { self.grads[cell][1] };
        let w = self.anchor[cell];
        [
            w[0] + g[0][0] * lx + g[1][0] * ly,
            w[1] + g[0][1] * lx + g[1][1] * ly,
        ]
    }
}

fn affine_parts(w: &SpinField) -> (Vec<[f64; 2]>, Vec<[Gradient; 2]>) {
    let d = &w.domain;
    let inv = 1.0 / d.epsilon();
    let scale = |v: [f64; 2]| [v[0] * inv, v[1] * inv];
    let mut anchor = Vec::with_capacity(d.cells().len());
    let mut grads = Vec::with_capacity(d.cells().len());
    for c in d.cells() {
        let [ll, lr, ur, ul] = c.corners;
        anchor.push(w.values[ll]);
        let lower = [scale(w.diff(ll, lr)), scale(w.diff(lr, ur))];
        let upper = [scale(w.diff(ul, ur)), scale(w.diff(ll, ul))];
        grads.push([lower, upper]);
    }
    (anchor, grads)
}

/// Piecewise affine interpolation `A(w)` on the two-triangle subdivision.
pub fn interpolate_affine(w: &SpinField) -> InterpolatedField {
    let (anchor, grads) = affine_parts(w);
    InterpolatedField {
        jump_cells: vec![false; anchor.len()],
        domain: Arc::clone(&w.domain),
        mode: InterpMode::Affine,
        anchor,
        grads,
    }
}

/// `û_φ`: constant `u_φ(i)` on open jump cells, `A(u_φ)` elsewhere.
pub fn interpolate_u_hat(phi: &ScalarField, n: u32) -> InterpolatedField {
    let u = exp_map(phi, 1);
    let (anchor, grads) = affine_parts(&u);
    InterpolatedField {
        jump_cells: jump_pairs(phi, n).jump_cells,
        domain: Arc::clone(&phi.domain),
        mode: InterpMode::JumpCellConstant,
        anchor,
        grads,
    }
}

/// `½ ∫ |∇v|²` over the region's cells, exact per triangle.
pub fn dirichlet_energy(interp: &InterpolatedField, region: &RegionMask) -> f64 {
    let eps = interp.domain.epsilon();
    let tri_area = 0.5 * eps * eps;
    let mut acc = Neumaier::default();
    for c in 0..interp.domain.cells().len() {
        if !region.cells[c] {
            continue;
        }
        let [lo, hi] = interp.grad_norm2(c);
        acc.add(0.5 * tri_area * (lo + hi));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_domain, Shape};
    use std::f64::consts::PI;

    fn square(eps: f64) -> Arc<LatticeDomain> {
        Arc::new(build_domain(Shape::unit_square(), eps).unwrap())
    }

    #[test]
    fn exp_map_basics() {
        let d = square(0.25);
        let z = exp_map(&ScalarField::constant(d.clone(), 0.0), 1);
        assert!(z.values().iter().all(|&v| v == [1.0, 0.0]));
        let mut vals = vec![0.0; d.n_sites()];
        vals[3] = PI / 2.0;
        let w = exp_map(&ScalarField::new(d.clone(), vals).unwrap(), 2);
        assert!((w.values()[3][0] + 1.0).abs() < 1e-15 && w.values()[3][1].abs() < 1e-15);
    }

    #[test]
    fn exp_map_homomorphism() {
        let d = square(0.125);
        let phi = ScalarField::from_fn(d, |p| 3.7 * p[0] - 11.0 * p[1] * p[1]);
        let a = exp_map(&phi, 3);
        let b = exp_map(&phi.scaled(3.0), 1);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_field_rejects_non_unit() {
        let d = square(0.5);
        assert!(SpinField::new(d.clone(), vec![[1.0, 0.1]; d.n_sites()]).is_err());
        assert!(SpinField::new(d.clone(), vec![[1.0, 0.0]; 3]).is_err());
    }

    #[test]
    fn jump_pair_thresholds() {
        let d = Arc::new(build_domain(Shape::rect([0.0, 0.0], 1.0, 1.0), 1.0 / 1.0001).unwrap());
        let field = |delta: f64| {
            ScalarField::from_fn(d.clone(), |p| if p[0] > 0.5 { delta } else { 0.0 })
        };
        let horizontal = d.bonds().iter().filter(|b| b.axis == Axis::X).count();
        assert_eq!(jump_pairs(&field(PI), 2).jump_bonds.len(), horizontal);
        for n in 1..=31 {
            assert!(jump_pairs(&field(0.1), n).jump_bonds.is_empty());
        }
        assert!(jump_pairs(&field(2.0 * PI + 0.1), 2).jump_bonds.is_empty());
    }

    #[test]
    fn horizontal_wall_length() {
        let eps = 1.0 / 32.0;
        // 31 cells wide: 32 site columns, so the wall crosses 32 vertical bonds.
        let d = Arc::new(build_domain(Shape::rect([0.0, 0.0], 1.0 - eps, 1.0), eps).unwrap());
        let phi = ScalarField::from_fn(d, |p| if p[1] > 0.5 + 0.25 * eps { PI } else { 0.0 });
        let s = jump_pairs(&phi, 2);
        assert_eq!(s.jump_bonds.len(), 32);
        let sum = extract_strings(&s);
        assert!((sum.length_1norm - 1.0).abs() < 1e-15);
        assert_eq!(sum.n_components, 1);
        assert_eq!(sum.components[0].endpoints.len(), 2);
        assert!((s.length_1norm / eps).fract() == 0.0);
    }

    #[test]
    fn no_strings() {
        let d = square(0.25);
        let s = jump_pairs(&ScalarField::constant(d, 1.0), 2);
        let sum = extract_strings(&s);
        assert_eq!(sum.length_1norm, 0.0);
        assert_eq!(sum.n_components, 0);
    }

    #[test]
    fn diagonal_wall_is_anisotropic() {
        let eps = 1.0 / 32.0;
        let d = square(eps);
        let phi = ScalarField::from_fn(d, |p| if p[1] - p[0] > 0.3 * eps { PI } else { 0.0 });
        let s = jump_pairs(&phi, 2);
        // Euclidean length √2; every step of the staircase is one horizontal and one vertical crossing.
        assert!((s.length_1norm - 2.0).abs() <= 2.0 * eps + 1e-12, "{}", s.length_1norm);
        assert_eq!(extract_strings(&s).n_components, 1);
    }

    #[test]
    fn one_cell_dirichlet_energy() {
        for eps in [1.0, 0.5, 0.1] {
            let d = Arc::new(build_domain(Shape::rect([0.0, 0.0], eps, eps), eps * 0.999).unwrap());
            assert_eq!(d.cells().len(), 1);
            let c = d.cells()[0];
            let mut vals = vec![[0.0; 2]; 4];
            for (k, v) in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]].into_iter().enumerate() {
                vals[c.corners[k]] = v;
            }
            let w = SpinField::new(d.clone(), vals).unwrap();
            let e = dirichlet_energy(&interpolate_affine(&w), &d.whole());
            assert!((e - 2.0).abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn affine_interpolation_matches_corners_and_constants() {
        let d = square(0.25);
        let phi = ScalarField::from_fn(d.clone(), |p| 2.0 * p[0] + p[1] * p[1]);
        let w = exp_map(&phi, 1);
        let a = interpolate_affine(&w);
        for c in d.cells() {
            for &s in &c.corners {
                let p = d.site_pos(s);
                // Nudge into the cell so the lookup lands on this cell.
                let cc = d.cell_center(d.cell_at(c.index).unwrap());
                let q = [p[0] + 1e-12 * (cc[0] - p[0]), p[1] + 1e-12 * (cc[1] - p[1])];
                let v = a.eval(q);
                assert!((v[0] - w.values()[s][0]).abs() < 1e-9);
                assert!((v[1] - w.values()[s][1]).abs() < 1e-9);
            }
        }
        let k = interpolate_affine(&exp_map(&ScalarField::constant(d.clone(), 0.7), 1));
        assert_eq!(dirichlet_energy(&k, &d.whole()), 0.0);
        assert!(a.discontinuity_edges().is_empty());
    }

    #[test]
    fn u_hat_constant_on_jump_cells() {
        let eps = 0.125;
        let d = square(eps);
        let phi = ScalarField::from_fn(d.clone(), |p| {
            if p[1] > 0.5 + 0.25 * eps {
                PI
            } else {
                0.0
            }
        });
        let u = exp_map(&phi, 1);
        let uh = interpolate_u_hat(&phi, 2);
        let n_jump = uh.jump_cells().iter().filter(|&&j| j).count();
        assert_eq!(n_jump, 8);
        for (c, cell) in d.cells().iter().enumerate() {
            if uh.jump_cells()[c] {
                let p = d.cell_center(c);
                assert_eq!(uh.eval(p), u.values()[cell.corners[0]]);
                assert_eq!(uh.eval([p[0] + 0.3 * eps, p[1] - 0.2 * eps]), u.values()[cell.corners[0]]);
            }
        }
        // û jumps across the top edges of the jump-cell row, parallel to the dual wall path.
        let jumps = uh.discontinuity_edges();
        let s = jump_pairs(&phi, 2);
        assert_eq!(jumps.len(), s.jump_bonds.len() - 1);
        for e in jumps {
            let b = d.bonds()[e];
            assert_eq!(b.axis, Axis::X);
            assert!((d.site_pos(b.a)[1] - (0.5 + eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn u_hat_without_jumps_is_affine() {
        let d = square(0.25);
        let phi = ScalarField::from_fn(d.clone(), |p| p[0] - 0.5 * p[1]);
        let a = interpolate_affine(&exp_map(&phi, 1));
        let u = interpolate_u_hat(&phi, 2);
        for c in 0..d.cells().len() {
            assert_eq!(a.gradients(c), u.gradients(c));
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = square(0.25);
        let phi = ScalarField::from_fn(d.clone(), |p| p[0] * 3.0 - p[1]);
        let mut buf = Vec::new();
        phi.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("ix,iy,x,y,phi\n"));
        let back = ScalarField::read_csv(d, buf.as_slice()).unwrap();
        assert_eq!(back, phi);
    }
}
