//! Descent on `F_ε⁽ⁿ⁾` with frozen sites: L-BFGS with Armijo backtracking, or plain
//! gradient steps of fixed length.

use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_and_gradient, energy_only};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::potentials::PotentialSpec;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepRule {
    /// Steepest descent with step `step`; a step that raises the energy is rejected and
    /// the step length halved.
    Fixed { step: f64 },
    /// L-BFGS direction with Armijo backtracking.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationConfig {
    pub max_iters: usize,
    /// Stop when the sup-norm of the free-site gradient drops below this.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Extra runs from randomly perturbed starts; the lowest energy is kept.
    pub restarts: usize,
    /// Amplitude (radians) of the uniform perturbation used by restarts.
    pub perturbation: f64,
    pub seed: u64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            max_iters: 20_000,
            grad_tol: 1e-7,
            step_rule: StepRule::Backtracking,
            restarts: 0,
            perturbation: 0.3,
            seed: 0,
            memory: 8,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.memory == 0 {
            return Err(Error::InvalidParameter("memory must be >= 1".into()));
        }
        if let StepRule::Fixed { step } = self.step_rule {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed step must be positive, got {step}")));
            }
        }
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err(Error::InvalidParameter("perturbation must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// No step along the descent direction lowered the energy.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub field: ScalarField,
    pub energy: f64,
    pub grad_norm: f64,
    pub termination: Termination,
    /// Log of the run that produced `field`.
    pub log: Vec<IterRecord>,
    /// Index of the winning run; 0 is the unperturbed start.
    pub run: usize,
}

/// Write an iteration log as CSV `iter,energy,grad_norm`.
pub fn write_log_csv<W: Write>(log: &[IterRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in log {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Minimize `F_ε⁽ⁿ⁾` over the free sites, starting from `phi0` and from `cfg.restarts`
/// perturbations of it.
pub fn relax(
    phi0: &ScalarField,
    spec: &PotentialSpec,
    frozen: &[bool],
    cfg: &RelaxationConfig,
) -> Result<RelaxOutcome> {
    cfg.validate()?;
    let mut best = relax_once(phi0, spec, frozen, cfg)?;
    for run in 1..=cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(run as u64));
        let start = perturbed(phi0, frozen, cfg.perturbation, 1.0, &mut rng);
        let mut out = relax_once(&start, spec, frozen, cfg)?;
        out.run = run;
        if out.energy < best.energy {
            best = out;
        }
    }
    Ok(best)
}

/// `phi0 + sign · U(-a, a)` on free sites.
pub(crate) fn perturbed(
    phi0: &ScalarField,
    frozen: &[bool],
    amplitude: f64,
    sign: f64,
    rng: &mut ChaCha8Rng,
) -> ScalarField {
    let mut v = phi0.values().to_vec();
    for (s, x) in v.iter_mut().enumerate() {
        let r: f64 = rng.gen_range(-1.0..1.0);
        if !frozen[s] {
            *x += sign * amplitude * r;
        }
    }
    ScalarField::new(phi0.domain().clone(), v).expect("perturbation keeps values finite")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// L-BFGS two-loop recursion: returns `-H g`.
fn lbfgs_direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Bonds within this phase distance of a plateau edge count as sitting on the kink.
const KINK_TOL: f64 = 1e-10;
/// Cap on the kink neighbourhood used for search directions.
const DELTA_MAX: f64 = 1e-2;

/// Minimum-norm element of the subdifferential of `F_ε⁽ⁿ⁾` at `x`, restricted to free
/// sites. `g` is the gradient with the smooth-side selection on every kink bond. On a
/// kink bond the slope may be any multiple `λ s` of its smooth slope `s` with `λ ∈ [0, 1]`;
/// the `λ`s are chosen by projected coordinate descent on `|g|²`.
fn min_norm_subgradient(
    domain: &crate::lattice::LatticeDomain,
    x: &[f64],
    g: &[f64],
    spec: &PotentialSpec,
    frozen: &[bool],
    tol: f64,
) -> Vec<f64> {
    let bonds = domain.bonds();
    let nf = spec.n as f64;
    let mut kinks: Vec<(usize, usize, f64, f64)> = Vec::new();
    for b in bonds {
        let t = x[b.b] - x[b.a];
        if !spec.in_plateau_band(t) {
            continue;
        }
        let s = nf * spec.base.derivative(nf * t.rem_euclid(std::f64::consts::TAU));
        let gap = spec.eval_base(nf * t) - spec.epsilon;
        if gap.abs() > tol * s.abs().max(1e-300) {
            continue;
        }
        let lambda = if spec.on_plateau(t) { 0.0 } else { 1.0 };
        kinks.push((b.a, b.b, s, lambda));
    }
    let mut g = g.to_vec();
    if kinks.is_empty() {
        return g;
    }
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for (a, b, s, lambda) in kinks.iter_mut() {
            let (fa, fb) = (!frozen[*a], !frozen[*b]);
            let cnt = fa as u8 + fb as u8;
            if cnt == 0 || *s == 0.0 {
                continue;
            }
            let ga = if fa { g[*a] } else { 0.0 };
            let gb = if fb { g[*b] } else { 0.0 };
            let step = *s * (gb - ga) / (*s * *s * cnt as f64);
            let new = (*lambda - step).clamp(0.0, 1.0);
            let dl = new - *lambda;
            if dl != 0.0 {
                if fa {
                    g[*a] -= dl * *s;
                }
                if fb {
                    g[*b] += dl * *s;
                }
                *lambda = new;
                moved = moved.max(dl.abs());
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    g
}

/// A single descent run without restarts.
pub(crate) fn relax_once(
    phi0: &ScalarField,
    spec: &PotentialSpec,
    frozen: &[bool],
    cfg: &RelaxationConfig,
) -> Result<RelaxOutcome> {
    let domain = phi0.domain().clone();
    if frozen.len() != domain.n_sites() {
        return Err(Error::FieldMismatch(format!(
            "frozen mask has {} entries for {} sites",
            frozen.len(),
            domain.n_sites()
        )));
    }
    if !frozen.iter().any(|&f| f) {
        return Err(Error::InvalidParameter(
            "at least one site must be frozen to fix the global phase".into(),
        ));
    }
    let mut x = phi0.values().to_vec();
    // `g` is always the minimum-norm subgradient, which vanishes at kink minimizers.
    let (mut f, g0) = energy_and_gradient(&domain, &x, spec, frozen, None);
    let mut g = min_norm_subgradient(&domain, &x, &g0, spec, frozen, KINK_TOL);
    let mut gnorm = sup_norm(&g);
    // Direction gradient: bonds the last step could have crossed count as kinks.
    let mut gd = g.clone();
    let mut log = vec![IterRecord {
        iter: 0,
        energy: f,
        grad_norm: gnorm,
    }];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut fixed_step = match cfg.step_rule {
        StepRule::Fixed { step } => step,
        StepRule::Backtracking => 0.0,
    };
    let mut termination = Termination::MaxIters;
    let mut trial = vec![0.0; x.len()];

    for iter in 1..=cfg.max_iters {
        if gnorm < cfg.grad_tol {
            termination = Termination::Converged;
            break;
        }
        let accepted = match cfg.step_rule {
            StepRule::Fixed { .. } => {
                let mut ok = None;
                for _ in 0..=MAX_HALVINGS {
                    for k in 0..x.len() {
                        trial[k] = x[k] - fixed_step * g[k];
                    }
                    let ft = energy_only(&domain, &trial, spec);
                    if ft < f {
                        ok = Some(ft);
                        break;
                    }
                    fixed_step *= 0.5;
                }
                ok
            }
            StepRule::Backtracking => {
                let mut found = None;
                // Quasi-Newton direction, then steepest descent, then exact steepest descent.
                for attempt in 0..3 {
                    let gref = if attempt == 2 { &g } else { &gd };
                    let mut dir = if hist.is_empty() || attempt >= 1 {
                        let scale = 1.0 / sup_norm(gref).max(1.0);
                        gref.iter().map(|gi| -scale * gi).collect()
                    } else {
                        lbfgs_direction(gref, &hist)
                    };
                    for (d, &fz) in dir.iter_mut().zip(frozen) {
                        if fz {
                            *d = 0.0;
                        }
                    }
                    let slope = dot(gref, &dir);
                    if !(slope < 0.0) {
                        hist.clear();
                        continue;
                    }
                    let mut step = 1.0;
                    for _ in 0..=MAX_HALVINGS {
                        for k in 0..x.len() {
                            trial[k] = x[k] + step * dir[k];
                        }
                        let ft = energy_only(&domain, &trial, spec);
                        if ft < f && ft <= f + ARMIJO_C * step * slope {
                            found = Some(ft);
                            break;
                        }
                        step *= 0.5;
                    }
                    if found.is_some() {
                        break;
                    }
                    hist.clear();
                }
                found
            }
        };
        if accepted.is_none() {
            termination = Termination::Stagnated;
            break;
        }
        let (f_new, g_sel) = energy_and_gradient(&domain, &trial, spec, frozen, None);
        let g_new = min_norm_subgradient(&domain, &trial, &g_sel, spec, frozen, KINK_TOL);
        debug_assert!(f_new <= f);
        let moved = trial.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let new_delta = moved.clamp(KINK_TOL, DELTA_MAX);
        let gd_new = if new_delta > KINK_TOL {
            min_norm_subgradient(&domain, &trial, &g_sel, spec, frozen, new_delta)
        } else {
            g_new.clone()
        };
        if matches!(cfg.step_rule, StepRule::Backtracking) {
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gd_new.iter().zip(&gd).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                if hist.len() == cfg.memory {
                    hist.pop_front();
                }
                hist.push_back((s, y, 1.0 / sy));
            }
        }
        std::mem::swap(&mut x, &mut trial);
        f = f_new;
        g = g_new;
        gd = gd_new;
        gnorm = sup_norm(&g);
        log.push(IterRecord {
            iter,
            energy: f,
            grad_norm: gnorm,
        });
    }
    if termination == Termination::MaxIters && gnorm < cfg.grad_tol {
        termination = Termination::Converged;
    }
    Ok(RelaxOutcome {
        field: ScalarField::new(domain, x)?,
        energy: f,
        grad_norm: gnorm,
        termination,
        log,
        run: 0,
    })
}
