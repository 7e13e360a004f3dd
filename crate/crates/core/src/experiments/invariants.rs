//! Randomized property checks: vorticity range, discrete Stokes identity, the tie rule,
//! the energy comparison chain, the interpolation bound and the flat-norm oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::energy::{energy_fn_eps, energy_sym, energy_xy};
use crate::error::{Error, Result};
use crate::fields::{dirichlet_energy, exp_map, interpolate_affine, ScalarField};
use crate::lattice::{build_domain, LatticeDomain, Region, Shape};
use crate::polar_angle;
use crate::potentials::{BaseProfile, PotentialSpec};
use crate::topology::{
    cell_vorticity, cell_vorticity_raw, flat_norm, flat_norm_lp_oracle, stokes_check, Atom, VorticityMeasure,
};

/// Largest allowed gap between the two sides of the Stokes identity.
pub const STOKES_TOL: f64 = 1e-10;
/// Largest allowed distance of the raw cell vorticity from an integer.
pub const INTEGRALITY_TOL: f64 = 1e-9;
/// Relative slack for the energy inequalities, which hold with equality in places.
pub const CHAIN_REL_TOL: f64 = 1e-12;
/// Relative part of the flat-norm oracle tolerance; the grid part is `π·atoms·h·√2/2`.
pub const FLAT_REL_TOL: f64 = 0.02;

const CHUNK: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest amount by which a checked inequality or identity failed (0 if it never did).
    pub max_defect: f64,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            trials: 0,
            violations: 0,
            max_defect: 0.0,
        }
    }

    fn record(&mut self, defect: f64, violated: bool) {
        self.trials += 1;
        if violated {
            self.violations += 1;
        }
        if defect > self.max_defect {
            self.max_defect = defect;
        }
    }

    fn merge(&mut self, other: CheckResult) {
        self.trials += other.trials;
        self.violations += other.violations;
        self.max_defect = self.max_defect.max(other.max_defect);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn rng_for(seed: u64, check: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((check << 32) | chunk);
    rng
}

/// Small domains the random fields live on.
fn domain_pool() -> Result<Vec<Arc<LatticeDomain>>> {
    let mut out = Vec::new();
    for m in 2..=8 {
        out.push(Arc::new(build_domain(Shape::unit_square(), 1.0 / m as f64)?));
    }
    out.push(Arc::new(build_domain(Shape::rect([-0.3, 0.2], 1.1, 0.7), 0.1)?));
    out.push(Arc::new(build_domain(Shape::unit_disk(), 0.25)?));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldKind {
    Uniform,
    Vortices,
    /// Values in (π/2)ℤ: many bond differences sit exactly on a tie of `P`.
    Ties,
}

fn random_field(rng: &mut ChaCha8Rng, dom: &Arc<LatticeDomain>, kind: FieldKind) -> ScalarField {
    match kind {
        FieldKind::Uniform => {
            let amp = [0.3, PI, 3.0 * PI][rng.gen_range(0..3)];
            let v = (0..dom.n_sites()).map(|_| rng.gen_range(-amp..amp)).collect();
            ScalarField::new(dom.clone(), v).expect("finite")
        }
        FieldKind::Vortices => {
            let (lo, hi) = dom.shape().bbox();
            let k = rng.gen_range(1..=3);
            let cores: Vec<([f64; 2], f64)> = (0..k)
                .map(|_| {
                    let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
                    (p, [-2.0, -1.0, 1.0, 2.0][rng.gen_range(0..4)])
                })
                .collect();
            let noise = rng.gen_range(0.0..0.8);
            let v = (0..dom.n_sites())
                .map(|s| {
                    let p = dom.site_pos(s);
                    let base: f64 = cores.iter().map(|(c, d)| d * polar_angle([p[0] - c[0], p[1] - c[1]])).sum();
                    base + noise * rng.gen_range(-1.0..1.0)
                })
                .collect();
            ScalarField::new(dom.clone(), v).expect("finite")
        }
        FieldKind::Ties => {
            let v = (0..dom.n_sites()).map(|_| 0.5 * PI * rng.gen_range(-6..=6) as f64).collect();
            ScalarField::new(dom.clone(), v).expect("finite")
        }
    }
}

fn random_subregion(rng: &mut ChaCha8Rng, dom: &LatticeDomain) -> Region {
    let (lo, hi) = dom.shape().bbox();
    let eps = dom.epsilon();
    let mut span = |k: usize| {
        let a = rng.gen_range(lo[k]..hi[k]);
        let b = rng.gen_range(lo[k]..hi[k]);
        (a.min(b), (a - b).abs().max(eps))
    };
    let (x, w) = span(0);
    let (y, h) = span(1);
    Region::Shape(Shape::rect([x, y], w, h))
}

/// Vorticity range/integrality and the Stokes identity on one field.
fn topology_checks(
    rng: &mut ChaCha8Rng,
    phi: &ScalarField,
    range: &mut CheckResult,
    stokes: &mut CheckResult,
) -> Result<()> {
    let dom = phi.domain();
    let mut defect = 0.0f64;
    for c in 0..dom.cells().len() {
        let raw = cell_vorticity_raw(phi, c)?;
        let a = cell_vorticity(phi, c)?;
        defect = defect.max((raw - a as f64).abs()).max((a.abs() - 1).max(0) as f64);
    }
    range.record(defect, defect > INTEGRALITY_TOL);
    let mut regions = vec![dom.whole()];
    let sub = dom.region_mask(&random_subregion(rng, dom))?;
    if sub.n_cells() > 0 {
        regions.push(sub);
    }
    let mut defect = 0.0f64;
    for r in &regions {
        let (lhs, rhs) = stokes_check(phi, r)?;
        defect = defect.max((lhs - rhs).abs());
    }
    stokes.record(defect, defect > STOKES_TOL);
    Ok(())
}

fn chain_tol(a: f64, b: f64) -> f64 {
    CHAIN_REL_TOL * 1f64.max(a.abs()).max(b.abs())
}

/// `F⁽ⁿ⁾_ε(φ) ≥ F^sym_ε(nφ) ≥ XY_ε(e^{inφ})` and `XY_ε(w) ≥ ½∫|∇A(w)|²`.
fn chain_checks(rng: &mut ChaCha8Rng, pool: &[Arc<LatticeDomain>], chain: &mut CheckResult, dir: &mut CheckResult) -> Result<()> {
    let dom = pool.choose(rng).expect("nonempty pool");
    let n: u32 = rng.gen_range(1..=4);
    let base = if rng.gen_bool(0.5) {
        BaseProfile::Cosine
    } else {
        BaseProfile::CosineQuartic { c: rng.gen_range(0.0..2.0) }
    };
    let kind = [FieldKind::Uniform, FieldKind::Vortices][rng.gen_range(0..2)];
    let phi = random_field(rng, dom, kind).scaled(1.0 / n as f64);
    let whole = dom.whole();
    let spec = PotentialSpec::with_base(n, dom.epsilon(), base)?;
    let f_n = energy_fn_eps(&phi, &spec, &whole).total;
    let f_sym = energy_sym(&phi.scaled(n as f64), &base, &whole);
    let w = exp_map(&phi, n);
    let xy = energy_xy(&w, &whole);
    let d1 = (f_sym - f_n).max(0.0);
    let d2 = (xy - f_sym).max(0.0);
    chain.record(d1.max(d2), d1 > chain_tol(f_n, f_sym) || d2 > chain_tol(f_sym, xy));
    let dirichlet = dirichlet_energy(&interpolate_affine(&w), &whole);
    let d3 = (dirichlet - xy).max(0.0);
    dir.record(d3, d3 > chain_tol(xy, dirichlet));
    Ok(())
}

/// Random measure with 1 to `max_atoms` atoms of weight ±1, at least 0.02 from the boundary.
fn random_measure(rng: &mut ChaCha8Rng, shape: Shape, max_atoms: usize) -> Result<VorticityMeasure> {
    let (lo, hi) = shape.bbox();
    let k = rng.gen_range(1..=max_atoms);
    let mut atoms: Vec<Atom> = Vec::with_capacity(k);
    while atoms.len() < k {
        let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
        if !shape.contains(p, 0.0) || shape.boundary_distance(p) < 0.02 || atoms.iter().any(|a| a.pos() == p) {
            continue;
        }
        atoms.push(Atom {
            x: p[0],
            y: p[1],
            d: if rng.gen_bool(0.5) { 1 } else { -1 },
        });
    }
    VorticityMeasure::new(shape, atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnormRow {
    pub instance: usize,
    pub atoms: usize,
    pub exact: f64,
    pub lp: f64,
    pub abs_diff: f64,
    pub allowed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnormReport {
    pub resolution: usize,
    pub rows: Vec<FlatnormRow>,
    pub violations: usize,
    pub passed: bool,
}

/// Exact minimal connection against the LP oracle on random measures with up to 4 atoms.
pub fn flatnorm_rows(shape: Shape, instances: usize, resolution: usize, seed: u64) -> Result<Vec<FlatnormRow>> {
    let (lo, hi) = shape.bbox();
    let h = (hi[0] - lo[0]).max(hi[1] - lo[1]) / resolution as f64;
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, 6, i as u64);
            let mu = random_measure(&mut rng, shape, 4)?;
            let exact = flat_norm(&mu)?;
            let lp = flat_norm_lp_oracle(&mu, resolution)?;
            let allowed = FLAT_REL_TOL * exact + PI * mu.atoms.len() as f64 * h * 0.5f64.sqrt();
            let abs_diff = (lp - exact).abs();
            Ok(FlatnormRow {
                instance: i,
                atoms: mu.atoms.len(),
                exact,
                lp,
                abs_diff,
                allowed,
                ok: abs_diff <= allowed,
            })
        })
        .collect()
}

pub fn run_flatnorm_check(cfg: &ExperimentConfig) -> Result<FlatnormReport> {
    let shape = cfg.domain.ok_or_else(|| Error::Config("flatnorm-check needs a domain".into()))?;
    let res = cfg.checks.lp_resolution;
    let rows = flatnorm_rows(shape, cfg.checks.flatnorm_instances, res, cfg.seed)?;
    let violations = rows.iter().filter(|r| !r.ok).count();
    Ok(FlatnormReport {
        resolution: res,
        rows,
        violations,
        passed: violations == 0,
    })
}

/// Run `trials` draws of `body` in deterministic chunks, each with its own RNG stream.
fn chunked<F>(trials: usize, seed: u64, check: u64, names: [&str; 2], body: F) -> Result<[CheckResult; 2]>
where
    F: Fn(&mut ChaCha8Rng, &mut CheckResult, &mut CheckResult) -> Result<()> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Result<[CheckResult; 2]>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, check, k as u64);
            let mut a = CheckResult::new(names[0]);
            let mut b = CheckResult::new(names[1]);
            for _ in k * CHUNK..((k + 1) * CHUNK).min(trials) {
                body(&mut rng, &mut a, &mut b)?;
            }
            Ok([a, b])
        })
        .collect();
    let mut out = [CheckResult::new(names[0]), CheckResult::new(names[1])];
    for p in parts {
        let [a, b] = p?;
        out[0].merge(a);
        out[1].merge(b);
    }
    Ok(out)
}

pub fn run_invariant_suite(cfg: &ExperimentConfig) -> Result<InvariantReport> {
    let pool = domain_pool()?;
    let seed = cfg.seed;
    let counts = cfg.checks;
    let [range, stokes] = chunked(counts.topology_fields, seed, 1, ["vorticity-range", "stokes-identity"], |rng, a, b| {
        let dom = pool.choose(rng).expect("nonempty pool");
        let kind = [FieldKind::Uniform, FieldKind::Vortices][rng.gen_range(0..2)];
        let phi = random_field(rng, dom, kind);
        topology_checks(rng, &phi, a, b)
    })?;
    let ties_n = (counts.topology_fields / 10).max(1);
    let [tie_range, tie_stokes] = chunked(ties_n, seed, 2, ["tie-rule-range", "tie-rule-stokes"], |rng, a, b| {
        let dom = pool.choose(rng).expect("nonempty pool");
        let phi = random_field(rng, dom, FieldKind::Ties);
        topology_checks(rng, &phi, a, b)
    })?;
    let [chain, dir] = chunked(counts.chain_fields, seed, 3, ["comparison-chain", "xy-dirichlet-bound"], |rng, a, b| {
        chain_checks(rng, &pool, a, b)
    })?;
    let mut flat = CheckResult::new("flat-norm-oracle");
    for row in flatnorm_rows(Shape::unit_square(), counts.flatnorm_instances, counts.lp_resolution, seed)? {
        flat.record((row.abs_diff - row.allowed).max(0.0), !row.ok);
    }
    let checks = vec![range, stokes, tie_range, tie_stokes, chain, dir, flat];
    let passed = checks.iter().all(CheckResult::passed);
    Ok(InvariantReport { checks, passed })
}

/// Field with a bond difference of exactly π: `P` must break the tie and the cell
/// vorticities stay in `{-1, 0, 1}`.
pub fn tie_example() -> Result<(Vec<i32>, f64)> {
    let dom = Arc::new(build_domain(Shape::unit_square(), 0.5)?);
    let centre = dom.site_at([1, 1]).expect("center site");
    let mut v = vec![0.0; dom.n_sites()];
    v[centre] = PI;
    let phi = ScalarField::new(dom.clone(), v)?;
    let alphas = (0..dom.cells().len()).map(|c| cell_vorticity(&phi, c)).collect::<Result<Vec<_>>>()?;
    let (lhs, rhs) = stokes_check(&phi, &dom.whole())?;
    Ok((alphas, (lhs - rhs).abs()))
}
