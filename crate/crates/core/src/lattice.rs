//! The ε-lattice: sites, nearest-neighbour bonds, unit cells and the discrete boundary.
//!
//! A domain is built by masking: a cell `i + εQ` (with `Q = [0,1]²`) is kept when it lies
//! inside the closed shape. Sites are the corners of kept cells, bonds are the edges of
//! kept cells, and the discrete boundary is the set of sites lying on the topological
//! boundary of the union of kept cells. All adjacency is integer arithmetic on grid
//! indices; positions are `ε · index`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Relative tolerance (in units of ε) for the cell-inside-shape test.
const MASK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Rect {
        origin: [f64; 2],
        width: f64,
        height: f64,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
}

impl Shape {
    pub fn rect(origin: [f64; 2], width: f64, height: f64) -> Self {
        Shape::Rect {
            origin,
            width,
            height,
        }
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn unit_square() -> Self {
        Shape::rect([0.0, 0.0], 1.0, 1.0)
    }

    pub fn unit_disk() -> Self {
        Shape::disk([0.0, 0.0], 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::Rect {
                origin,
                width,
                height,
            } => {
                if !(origin[0].is_finite() && origin[1].is_finite()) {
                    return Err(Error::DegenerateShape("non-finite origin".into()));
                }
                if !(width.is_finite() && height.is_finite()) || width <= 0.0 || height <= 0.0 {
                    return Err(Error::DegenerateShape(format!(
                        "rectangle {width} x {height} has no area"
                    )));
                }
            }
            Shape::Disk { center, radius } => {
                if !(center[0].is_finite() && center[1].is_finite()) {
                    return Err(Error::DegenerateShape("non-finite center".into()));
                }
                if !radius.is_finite() || radius <= 0.0 {
                    return Err(Error::DegenerateShape(format!(
                        "disk of radius {radius} has no area"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest extent: min(width, height) or the diameter.
    pub fn min_extent(&self) -> f64 {
        match *self {
            Shape::Rect { width, height, .. } => width.min(height),
            Shape::Disk { radius, .. } => 2.0 * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Shape::Rect { width, height, .. } => width.hypot(height),
            Shape::Disk { radius, .. } => 2.0 * radius,
        }
    }

    /// Both supported shapes are convex; kept as a query so the flat-norm code can
    /// reject future shapes that are not.
    pub fn is_convex(&self) -> bool {
        matches!(self, Shape::Rect { .. } | Shape::Disk { .. })
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Shape::Rect {
                origin,
                width,
                height,
            } => (origin, [origin[0] + width, origin[1] + height]),
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }

    pub fn center(&self) -> [f64; 2] {
        match *self {
            Shape::Rect {
                origin,
                width,
                height,
            } => [origin[0] + 0.5 * width, origin[1] + 0.5 * height],
            Shape::Disk { center, .. } => center,
        }
    }

    /// Closed-set membership with an absolute slack `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        match *self {
            Shape::Rect {
                origin,
                width,
                height,
            } => {
                p[0] >= origin[0] - tol
                    && p[0] <= origin[0] + width + tol
                    && p[1] >= origin[1] - tol
                    && p[1] <= origin[1] + height + tol
            }
            Shape::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) <= radius + tol
            }
        }
    }

    /// Euclidean distance from `p` to the boundary curve.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        match *self {
            Shape::Rect {
                origin,
                width,
                height,
            } => {
                let (lo, hi) = (origin, [origin[0] + width, origin[1] + height]);
                if self.contains(p, 0.0) {
                    (p[0] - lo[0])
                        .min(hi[0] - p[0])
                        .min(p[1] - lo[1])
                        .min(hi[1] - p[1])
                } else {
                    let dx = (lo[0] - p[0]).max(p[0] - hi[0]).max(0.0);
                    let dy = (lo[1] - p[1]).max(p[1] - hi[1]).max(0.0);
                    dx.hypot(dy)
                }
            }
            Shape::Disk { center, radius } => {
                ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs()
            }
        }
    }

    /// Short identifier used in serialized measures and reports.
    pub fn id(&self) -> String {
        match *self {
            Shape::Rect {
                origin,
                width,
                height,
            } => format!("rect({},{};{}x{})", origin[0], origin[1], width, height),
            Shape::Disk { center, radius } => {
                format!("disk({},{};r={})", center[0], center[1], radius)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Unordered bond, stored with `a` the lexicographically smaller endpoint so that
/// `b = a + ε e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub axis: Axis,
}

/// Unit cell `i + εQ`. Corners are counterclockwise from the lower-left site;
/// edges are bottom, right, top, left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub index: [i64; 2],
    pub corners: [usize; 4],
    pub edges: [usize; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [[f64; 2]; 3],
}

impl Triangle {
    pub fn signed_area(&self) -> f64 {
        let [p, q, r] = self.vertices;
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let [p, q, r] = self.vertices;
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDomain {
    epsilon: f64,
    shape: Shape,
    sites: Vec<[i64; 2]>,
    lo: [i64; 2],
    dims: [usize; 2],
    site_lookup: Vec<u32>,
    cell_lookup: Vec<u32>,
    bonds: Vec<Bond>,
    cells: Vec<Cell>,
    boundary: Vec<bool>,
    incident_offsets: Vec<usize>,
    incident: Vec<(usize, f64)>,
}

/// Build the masked lattice domain `Ω_ε` for `shape` at spacing `epsilon`.
pub fn build_domain(shape: Shape, epsilon: f64) -> Result<LatticeDomain> {
    LatticeDomain::build(shape, epsilon)
}

impl LatticeDomain {
    pub fn build(shape: Shape, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lattice spacing must be positive, got {epsilon}"
            )));
        }
        shape.validate()?;
        if epsilon >= shape.min_extent() {
            return Err(Error::EmptyDomain { epsilon });
        }

        let tol = MASK_TOL * epsilon;
        let (bmin, bmax) = shape.bbox();
        let ix0 = (bmin[0] / epsilon).floor() as i64 - 1;
        let iy0 = (bmin[1] / epsilon).floor() as i64 - 1;
        let ix1 = (bmax[0] / epsilon).ceil() as i64 + 1;
        let iy1 = (bmax[1] / epsilon).ceil() as i64 + 1;
        let dims = [(ix1 - ix0 + 1) as usize, (iy1 - iy0 + 1) as usize];
        let lo = [ix0, iy0];
        let flat = |ix: i64, iy: i64| (ix - lo[0]) as usize * dims[1] + (iy - lo[1]) as usize;
        let pos = |ix: i64, iy: i64| [ix as f64 * epsilon, iy as f64 * epsilon];

        // Cell mask keyed by lower-left corner; the last row/column is never a cell.
        let mut cell_in = vec![false; dims[0] * dims[1]];
        for ix in ix0..ix1 {
            for iy in iy0..iy1 {
                let inside = [(0, 0), (1, 0), (1, 1), (0, 1)]
                    .iter()
                    .all(|&(dx, dy)| shape.contains(pos(ix + dx, iy + dy), tol));
                cell_in[flat(ix, iy)] = inside;
            }
        }
        let has_cell = |ix: i64, iy: i64| -> bool {
            ix >= ix0 && iy >= iy0 && ix < ix1 && iy < iy1 && cell_in[flat(ix, iy)]
        };

        let mut sites = Vec::new();
        let mut site_lookup = vec![NONE; dims[0] * dims[1]];
        for ix in ix0..=ix1 {
            for iy in iy0..=iy1 {
                let touches = has_cell(ix, iy)
                    || has_cell(ix - 1, iy)
                    || has_cell(ix - 1, iy - 1)
                    || has_cell(ix, iy - 1);
                if touches {
                    site_lookup[flat(ix, iy)] = sites.len() as u32;
                    sites.push([ix, iy]);
                }
            }
        }
        if sites.is_empty() {
            return Err(Error::EmptyDomain { epsilon });
        }

        let mut bonds = Vec::new();
        let mut bond_x = vec![NONE; dims[0] * dims[1]];
        let mut bond_y = vec![NONE; dims[0] * dims[1]];
        for (s, &[ix, iy]) in sites.iter().enumerate() {
            if has_cell(ix, iy) || has_cell(ix, iy - 1) {
                let b = site_lookup[flat(ix + 1, iy)] as usize;
                bond_x[flat(ix, iy)] = bonds.len() as u32;
                bonds.push(Bond {
                    a: s,
                    b,
                    axis: Axis::X,
                });
            }
            if has_cell(ix, iy) || has_cell(ix - 1, iy) {
                let b = site_lookup[flat(ix, iy + 1)] as usize;
                bond_y[flat(ix, iy)] = bonds.len() as u32;
                bonds.push(Bond {
                    a: s,
                    b,
                    axis: Axis::Y,
                });
            }
        }

        let mut cells = Vec::new();
        let mut cell_lookup = vec![NONE; dims[0] * dims[1]];
        for &[ix, iy] in &sites {
            if !has_cell(ix, iy) {
                continue;
            }
            let s = |dx: i64, dy: i64| site_lookup[flat(ix + dx, iy + dy)] as usize;
            let corners = [s(0, 0), s(1, 0), s(1, 1), s(0, 1)];
            let edges = [
                bond_x[flat(ix, iy)] as usize,
                bond_y[flat(ix + 1, iy)] as usize,
                bond_x[flat(ix, iy + 1)] as usize,
                bond_y[flat(ix, iy)] as usize,
            ];
            cell_lookup[flat(ix, iy)] = cells.len() as u32;
            cells.push(Cell {
                index: [ix, iy],
                corners,
                edges,
            });
        }

        let boundary = sites
            .iter()
            .map(|&[ix, iy]| {
                let n = [(0, 0), (-1, 0), (-1, -1), (0, -1)]
                    .iter()
                    .filter(|&&(dx, dy)| has_cell(ix + dx, iy + dy))
                    .count();
                n < 4
            })
            .collect();

        let mut degree = vec![0usize; sites.len()];
        for b in &bonds {
            degree[b.a] += 1;
            degree[b.b] += 1;
        }
        let mut incident_offsets = vec![0usize; sites.len() + 1];
        for s in 0..sites.len() {
            incident_offsets[s + 1] = incident_offsets[s] + degree[s];
        }
        let mut fill = incident_offsets.clone();
        let mut incident = vec![(0usize, 0.0f64); incident_offsets[sites.len()]];
        for (k, b) in bonds.iter().enumerate() {
            incident[fill[b.a]] = (k, -1.0);
            fill[b.a] += 1;
            incident[fill[b.b]] = (k, 1.0);
            fill[b.b] += 1;
        }

        Ok(LatticeDomain {
            epsilon,
            shape,
            sites,
            lo,
            dims,
            site_lookup,
            cell_lookup,
            bonds,
            cells,
            boundary,
            incident_offsets,
            incident,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[[i64; 2]] {
        &self.sites
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_boundary(&self, site: usize) -> bool {
        self.boundary[site]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.sites.len()).filter(move |&s| self.boundary[s])
    }

    /// Incident bonds of `site` with orientation sign: `+1` when the site is the bond's
    /// `b` endpoint, `-1` when it is `a`.
    pub fn incident(&self, site: usize) -> &[(usize, f64)] {
        &self.incident[self.incident_offsets[site]..self.incident_offsets[site + 1]]
    }

    /// Ordered pairs `(i, j)` with `|i - j| = ε`; each bond appears in both orientations.
    pub fn ordered_bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bonds.iter().flat_map(|b| [(b.a, b.b), (b.b, b.a)])
    }

    pub fn site_pos(&self, site: usize) -> [f64; 2] {
        let [ix, iy] = self.sites[site];
        [ix as f64 * self.epsilon, iy as f64 * self.epsilon]
    }

    fn flat(&self, ix: i64, iy: i64) -> Option<usize> {
        let dx = ix - self.lo[0];
        let dy = iy - self.lo[1];
        if dx < 0 || dy < 0 || dx as usize >= self.dims[0] || dy as usize >= self.dims[1] {
            None
        } else {
            Some(dx as usize * self.dims[1] + dy as usize)
        }
    }

    pub fn site_at(&self, index: [i64; 2]) -> Option<usize> {
        self.flat(index[0], index[1])
            .map(|f| self.site_lookup[f])
            .filter(|&s| s != NONE)
            .map(|s| s as usize)
    }

    /// Cell whose lower-left corner has grid index `index`.
    pub fn cell_at(&self, index: [i64; 2]) -> Option<usize> {
        self.flat(index[0], index[1])
            .map(|f| self.cell_lookup[f])
            .filter(|&c| c != NONE)
            .map(|c| c as usize)
    }

    /// Cell containing the point `p` (lower-left convention on shared edges).
    pub fn cell_containing(&self, p: [f64; 2]) -> Option<usize> {
        let ix = (p[0] / self.epsilon).floor() as i64;
        let iy = (p[1] / self.epsilon).floor() as i64;
        self.cell_at([ix, iy])
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let [ix, iy] = self.cells[cell].index;
        [
            (ix as f64 + 0.5) * self.epsilon,
            (iy as f64 + 0.5) * self.epsilon,
        ]
    }

    /// Bond index joining `i` and `j`, if they are nearest neighbours in the domain.
    pub fn bond_between(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.sites.len() || j >= self.sites.len() {
            return None;
        }
        self.incident(i)
            .iter()
            .map(|&(k, _)| k)
            .find(|&k| self.bonds[k].a == j || self.bonds[k].b == j)
    }

    /// The two triangles `T⁻ = Co(i, i+εe₁, i+εe₁+εe₂)` and `T⁺ = Co(i, i+εe₁+εe₂, i+εe₂)`.
    pub fn cell_triangles(&self, cell: usize) -> Result<(Triangle, Triangle)> {
        let c = self.cells.get(cell).ok_or(Error::InvalidCell(cell))?;
        let [ll, lr, ur, ul] = c.corners.map(|s| self.site_pos(s));
        Ok((
            Triangle {
                vertices: [ll, lr, ur],
            },
            Triangle {
                vertices: [ll, ur, ul],
            },
        ))
    }

    pub fn whole(&self) -> RegionMask {
        RegionMask {
            cells: vec![true; self.cells.len()],
            bonds: vec![true; self.bonds.len()],
            sites: vec![true; self.sites.len()],
        }
    }

    /// Resolve a region into cell, bond and site masks following the `D_ε` construction:
    /// cells inside the closed region, and the edges and corners of those cells.
    pub fn region_mask(&self, region: &Region) -> Result<RegionMask> {
        let cells: Vec<bool> = match region {
            Region::All => return Ok(self.whole()),
            Region::Shape(shape) => {
                shape.validate()?;
                let tol = MASK_TOL * self.epsilon;
                self.cells
                    .iter()
                    .map(|c| {
                        c.corners
                            .iter()
                            .all(|&s| shape.contains(self.site_pos(s), tol))
                    })
                    .collect()
            }
            Region::Cells(list) => {
                let mut mask = vec![false; self.cells.len()];
                for &c in list {
                    *mask.get_mut(c).ok_or(Error::InvalidCell(c))? = true;
                }
                mask
            }
        };
        Ok(self.mask_from_cells(cells))
    }

    pub fn mask_from_cells(&self, cells: Vec<bool>) -> RegionMask {
        let mut bonds = vec![false; self.bonds.len()];
        let mut sites = vec![false; self.sites.len()];
        for (c, _) in self.cells.iter().enumerate().filter(|(k, _)| cells[*k]) {
            for &e in &self.cells[c].edges {
                bonds[e] = true;
            }
            for &s in &self.cells[c].corners {
                sites[s] = true;
            }
        }
        RegionMask {
            cells,
            bonds,
            sites,
        }
    }
}

/// A subdomain `D` used to localize energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    All,
    Shape(Shape),
    /// Explicit list of cell indices.
    Cells(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    pub cells: Vec<bool>,
    pub bonds: Vec<bool>,
    pub sites: Vec<bool>,
}

impl RegionMask {
    pub fn n_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_half() {
        let d = build_domain(Shape::unit_square(), 0.5).unwrap();
        assert_eq!(d.n_sites(), 9);
        assert_eq!(d.bonds().len(), 12);
        assert_eq!(d.cells().len(), 4);
        assert_eq!(d.boundary_sites().count(), 8);
    }

    #[test]
    fn unit_square_quarter() {
        let d = build_domain(Shape::unit_square(), 0.25).unwrap();
        assert_eq!(d.n_sites(), 25);
        assert_eq!(d.bonds().len(), 40);
        assert_eq!(d.cells().len(), 16);
    }

    #[test]
    fn rectangle_counts_match_formula() {
        for (w, h, eps) in [(2.0, 1.0, 0.125), (3.0, 0.5, 0.25), (1.0, 1.0, 1.0 / 3.0)] {
            let d = build_domain(Shape::rect([0.0, 0.0], w, h), eps).unwrap();
            let (nw, nh) = ((w / eps).round() as usize, (h / eps).round() as usize);
            assert_eq!(d.cells().len(), nw * nh);
            assert_eq!(d.bonds().len(), (nw + 1) * nh + nw * (nh + 1));
        }
    }

    #[test]
    fn degenerate_and_empty() {
        assert!(matches!(
            build_domain(Shape::rect([0.0, 0.0], 0.0, 1.0), 0.1),
            Err(Error::DegenerateShape(_))
        ));
        assert!(matches!(
            build_domain(Shape::unit_square(), 1.0),
            Err(Error::EmptyDomain { .. })
        ));
        assert!(matches!(
            build_domain(Shape::unit_square(), -0.1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn triangles_at_origin() {
        let d = build_domain(Shape::rect([0.0, 0.0], 3.0, 3.0), 1.0).unwrap();
        let c = d.cell_at([0, 0]).unwrap();
        let (lo, hi) = d.cell_triangles(c).unwrap();
        assert_eq!(lo.vertices, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert_eq!(hi.vertices, [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(d.cell_triangles(99).is_err());
    }

    #[test]
    fn translated_triangles_and_areas() {
        let eps = 0.25;
        let d = build_domain(Shape::rect([0.0, 0.0], 2.0, 2.0), eps).unwrap();
        let (o_lo, o_hi) = d.cell_triangles(d.cell_at([0, 0]).unwrap()).unwrap();
        let (t_lo, t_hi) = d.cell_triangles(d.cell_at([2, 3]).unwrap()).unwrap();
        for (o, t) in [(o_lo, t_lo), (o_hi, t_hi)] {
            assert!((t.area() - eps * eps / 2.0).abs() < 1e-15);
            for k in 0..3 {
                assert!((t.vertices[k][0] - o.vertices[k][0] - 2.0 * eps).abs() < 1e-15);
                assert!((t.vertices[k][1] - o.vertices[k][1] - 3.0 * eps).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn disk_boundary_includes_concave_corners() {
        let d = build_domain(Shape::unit_disk(), 0.25).unwrap();
        for s in 0..d.n_sites() {
            let [ix, iy] = d.sites()[s];
            let around = [(0, 0), (-1, 0), (-1, -1), (0, -1)]
                .iter()
                .filter(|&&(dx, dy)| d.cell_at([ix + dx, iy + dy]).is_some())
                .count();
            assert_eq!(d.is_boundary(s), around < 4);
        }
    }

    #[test]
    fn micro_disk_has_five_interior_sites() {
        let d = build_domain(Shape::disk([0.0, 0.0], 2.5), 1.0).unwrap();
        assert_eq!(d.n_sites(), 21);
        let interior = (0..d.n_sites()).filter(|&s| !d.is_boundary(s)).count();
        assert_eq!(interior, 5);
    }

    #[test]
    fn region_mask_of_subrectangle() {
        let d = build_domain(Shape::unit_square(), 0.25).unwrap();
        let m = d
            .region_mask(&Region::Shape(Shape::rect([0.0, 0.0], 0.5, 1.0)))
            .unwrap();
        assert_eq!(m.n_cells(), 8);
        assert_eq!(m.bonds.iter().filter(|&&b| b).count(), 3 * 4 + 2 * 5);
    }

    #[test]
    fn shape_json_rejects_unknown_keys() {
        let ok: Shape = serde_json::from_str(r#"{"kind":"disk","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(ok, Shape::unit_disk());
        assert!(serde_json::from_str::<Shape>(
            r#"{"kind":"disk","center":[0,0],"radius":1,"radus":2}"#
        )
        .is_err());
    }
}
