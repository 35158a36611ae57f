//! Pseudo-arclength continuation of `λ ↦ u_λ` from `(0, 0)`, fold location
//! and the extremal profile.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, Origin, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{
    jacobian, newton_solve, residual_vector, scaled_residual_norm, solve_minimal, step_is_negligible, Problem,
};
use crate::stability::{linearization_eigenvalue, principal_eigenvalue, StabilityCertificate};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    /// Base step; the actual arclength step is `ds (1 + ‖u‖∞)`.
    pub ds: f64,
    pub max_points: usize,
    pub sup_limit: f64,
    /// Scaled residual tolerance of the corrector.
    pub tol: f64,
    pub theta_u: f64,
    pub theta_lambda: f64,
    /// Times the step is quartered when `Δλ` changes sign.
    pub fold_refinements: usize,
    /// Stop this many points after the first fold.
    pub points_after_fold: Option<usize>,
    pub corrector_cap: usize,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            ds: 0.05,
            max_points: 2000,
            sup_limit: 1e3,
            tol: 1e-10,
            theta_u: 1.0,
            theta_lambda: 1.0,
            fold_refinements: 4,
            points_after_fold: None,
            corrector_cap: 12,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            return Err(invalid("ds", "must be positive"));
        }
        if self.max_points < 2 {
            return Err(invalid("max_points", "need at least 2"));
        }
        if !(self.sup_limit > 0.0) {
            return Err(invalid("sup_limit", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(self.theta_u > 0.0 && self.theta_lambda > 0.0) {
            return Err(invalid("theta", "weights must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: GridFunction,
    pub arclength: f64,
    pub sup_norm: f64,
    /// Filled on request by [`Branch::fill_stability`].
    pub mu1: Option<f64>,
    /// Smallest eigenvalue of the corrector's own linearization, recorded
    /// where the tracer needed it to locate a fold on a flat stretch of `λ`.
    pub jacobian_mu1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fold {
    pub lambda_star: f64,
    pub sup_at_fold: f64,
    /// Branch point nearest the turning point.
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub grid: Arc<RadialGrid>,
    pub nonlinearity: Nonlinearity,
    pub points: Vec<BranchPoint>,
    pub fold: Option<Fold>,
}

impl Branch {
    pub fn certificate(&self, index: usize) -> Result<StabilityCertificate> {
        let p = self
            .points
            .get(index)
            .ok_or_else(|| invalid("index", "outside the branch"))?;
        principal_eigenvalue(&p.u, &self.nonlinearity, p.lambda)
    }

    /// Computes `mu1` at every point that lacks it.
    pub fn fill_stability(&mut self) -> Result<()> {
        for i in 0..self.points.len() {
            if self.points[i].mu1.is_none() {
                let mu = self.certificate(i)?.mu1;
                self.points[i].mu1 = Some(mu);
            }
        }
        Ok(())
    }

    /// Points before the first decrease of `λ`.
    pub fn minimal_segment(&self) -> &[BranchPoint] {
        let end = self
            .points
            .windows(2)
            .position(|w| w[1].lambda < w[0].lambda)
            .map(|i| i + 1)
            .unwrap_or(self.points.len());
        &self.points[..end]
    }
}

struct State {
    u: Vec<f64>,
    lambda: f64,
}

fn weighted_dot(a: &[f64], b: &[f64], theta_u: f64) -> f64 {
    theta_u * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Traces the branch from `(λ, u) = (0, 0)` with a secant predictor and a
/// bordered Newton corrector on `Δ_h u + λ f(u) = 0` plus the arclength
/// equation. The arclength norm is `θ_u ‖δu‖²_rms + θ_λ δλ²` over the
/// nodes including `r = R`.
pub fn trace_branch(grid: Arc<RadialGrid>, f: Nonlinearity, settings: &ContinuationSettings) -> Result<Branch> {
    settings.validate()?;
    f.validate()?;
    let len = grid.len();
    let last = grid.cells();
    let problem0 = Problem::new(grid.clone(), f, 0.0)?;
    let mut points = vec![BranchPoint {
        lambda: 0.0,
        u: GridFunction::zeros(grid.clone()),
        arclength: 0.0,
        sup_norm: 0.0,
        mu1: None,
        jacobian_mu1: None,
    }];

    // initial tangent (du/dλ, 1) from J b = -f(0)
    let zero = vec![0.0; len];
    let rhs: Vec<f64> = zero[..last].iter().map(|&v| -f.eval(v)).collect();
    let b = jacobian(&problem0, &zero)
        .solve(&rhs)
        .ok_or_else(|| invalid("grid", "singular Laplacian"))?;
    let mut tangent_u = vec![0.0; len];
    tangent_u[..last].copy_from_slice(&b);
    tangent_u.iter_mut().for_each(|v| *v = -*v);
    let mut tangent_l = 1.0;
    normalize(&mut tangent_u, &mut tangent_l, settings);

    let mut current = State {
        u: zero,
        lambda: 0.0,
    };
    let mut factor = 1.0;
    let min_factor = 1.0 / 1024.0;
    let mut refinement = 0;
    let mut fold_seen_at: Option<usize> = None;
    let mut arclength = 0.0;
    let mut lambda_max = 0.0f64;

    while points.len() < settings.max_points {
        let sup = current.u.iter().cloned().fold(0.0, f64::max);
        let step = settings.ds * factor * (1.0 + sup);
        let (next, iterations) = match correct(&grid, f, &current, &tangent_u, tangent_l, step, settings) {
            Ok(v) => v,
            Err(_) => {
                factor *= 0.5;
                if factor < min_factor {
                    if fold_seen_at.is_some() {
                        break;
                    }
                    return Err(Error::CorrectorFailure {
                        lambda: current.lambda,
                        min_step: settings.ds * min_factor,
                    });
                }
                continue;
            }
        };
        let dl = next.lambda - current.lambda;
        let candidate = GridFunction::new(grid.clone(), next.u.clone(), Origin::Regular)?;
        let mut jacobian_mu1 = None;
        let mut turned = next.lambda < lambda_max - lambda_noise(lambda_max);
        if fold_seen_at.is_none() && !turned && dl.abs() <= lambda_noise(next.lambda) {
            // λ is flat to roundoff: only the spectrum can locate the fold
            let here = points.len() - 1;
            if points[here].jacobian_mu1.is_none() {
                points[here].jacobian_mu1 =
                    Some(linearization_eigenvalue(&points[here].u, &f, points[here].lambda)?);
            }
            let mu = linearization_eigenvalue(&candidate, &f, next.lambda)?;
            jacobian_mu1 = Some(mu);
            turned = points[here].jacobian_mu1.unwrap_or(0.0) > 0.0 && mu < 0.0;
        }
        if fold_seen_at.is_none() && turned && refinement < settings.fold_refinements {
            refinement += 1;
            factor = (factor * 0.25).max(min_factor);
            continue;
        }

        // secant tangent
        let mut du: Vec<f64> = next.u.iter().zip(&current.u).map(|(a, b)| a - b).collect();
        let mut dlam = dl;
        let taken = (weighted_dot(&du, &du, settings.theta_u) + settings.theta_lambda * dlam * dlam).sqrt();
        normalize(&mut du, &mut dlam, settings);
        tangent_u = du;
        tangent_l = dlam;
        arclength += taken;

        let sup_norm = candidate.max_value();
        points.push(BranchPoint {
            lambda: next.lambda,
            u: candidate,
            arclength,
            sup_norm,
            mu1: None,
            jacobian_mu1,
        });
        if fold_seen_at.is_none() && turned {
            fold_seen_at = Some(points.len() - 1);
        }
        lambda_max = lambda_max.max(next.lambda);
        current = next;
        if iterations <= 4 && factor < 1.0 {
            factor = (factor * 1.5).min(1.0);
        }
        if sup_norm > settings.sup_limit || current.lambda < 0.0 {
            break;
        }
        if let (Some(k), Some(at)) = (settings.points_after_fold, fold_seen_at) {
            if points.len() - 1 >= at + k {
                break;
            }
        }
    }

    let mut branch = Branch {
        grid,
        nonlinearity: f,
        points,
        fold: None,
    };
    branch.fold = detect_fold(&branch).ok();
    Ok(branch)
}

/// Changes of `λ` below this (relative) are treated as roundoff.
const LAMBDA_RESOLUTION: f64 = 1e-12;

fn lambda_noise(lambda: f64) -> f64 {
    LAMBDA_RESOLUTION * lambda.abs().max(1.0)
}

fn normalize(u: &mut [f64], l: &mut f64, settings: &ContinuationSettings) {
    let norm = (weighted_dot(u, u, settings.theta_u) + settings.theta_lambda * *l * *l).sqrt();
    u.iter_mut().for_each(|v| *v /= norm);
    *l /= norm;
}

/// Bordered Newton corrector from the predictor `x + step t`.
fn correct(
    grid: &Arc<RadialGrid>,
    f: Nonlinearity,
    from: &State,
    tu: &[f64],
    tl: f64,
    step: f64,
    settings: &ContinuationSettings,
) -> Result<(State, usize)> {
    let last = grid.cells();
    let mut u: Vec<f64> = from.u.iter().zip(tu).map(|(a, t)| a + step * t).collect();
    u[last] = 0.0;
    let mut lambda = from.lambda + step * tl;
    let constraint = |u: &[f64], lambda: f64| {
        let du: Vec<f64> = u.iter().zip(&from.u).map(|(a, b)| a - b).collect();
        weighted_dot(&du, tu, settings.theta_u) + settings.theta_lambda * (lambda - from.lambda) * tl - step
    };
    let fail = |iterations, residual: f64, reason: &str| Error::NonConvergence {
        iterations,
        residual,
        reason: reason.into(),
    };
    for iteration in 0..=settings.corrector_cap {
        if !lambda.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(fail(iteration, f64::NAN, "non-finite iterate"));
        }
        let problem = Problem {
            grid: grid.clone(),
            nonlinearity: f,
            lambda,
        };
        let norm = scaled_residual_norm(&problem, &u);
        let n_res = constraint(&u, lambda);
        if iteration == settings.corrector_cap {
            return Err(fail(iteration, norm, "corrector cap"));
        }
        let j = jacobian(&problem, &u);
        let rhs: Vec<f64> = residual_vector(&problem, &u).iter().map(|v| -v).collect();
        let col: Vec<f64> = u[..last].iter().map(|&v| f.eval(v)).collect();
        let scale = settings.theta_u / (last + 1) as f64;
        let row: Vec<f64> = tu[..last].iter().map(|t| scale * t).collect();
        let bordered = Bordered {
            j: &j,
            col: &col,
            row: &row,
            corner: settings.theta_lambda * tl,
        };
        let (du, dl) = bordered
            .solve(&rhs, -n_res)
            .ok_or_else(|| fail(iteration, norm, "singular bordered system"))?;
        let negligible = step_is_negligible(&du, &u, settings.tol) && dl.abs() <= settings.tol * (1.0 + lambda.abs());
        for i in 0..last {
            u[i] += du[i];
        }
        lambda += dl;
        if norm <= settings.tol && negligible {
            return Ok((State { u, lambda }, iteration));
        }
    }
    Err(fail(settings.corrector_cap, f64::NAN, "corrector cap"))
}

/// `[J col; rowᵀ corner]`, solved by block elimination plus one step of
/// iterative refinement, which keeps the solve accurate when `J` is nearly
/// singular at a fold.
struct Bordered<'a> {
    j: &'a Tridiagonal,
    col: &'a [f64],
    row: &'a [f64],
    corner: f64,
}

impl Bordered<'_> {
    fn apply(&self, x: &[f64], y: f64) -> (Vec<f64>, f64) {
        let mut top = self.j.matvec(x);
        top.iter_mut().zip(self.col).for_each(|(t, c)| *t += c * y);
        let bottom = dot(self.row, x) + self.corner * y;
        (top, bottom)
    }

    fn eliminate(&self, b: &[f64], beta: f64, w: &[f64]) -> Option<(Vec<f64>, f64)> {
        let v = self.j.solve(b)?;
        let denom = self.corner - dot(self.row, w);
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        let y = (beta - dot(self.row, &v)) / denom;
        Some((v.iter().zip(w).map(|(a, c)| a - y * c).collect(), y))
    }

    fn solve(&self, b: &[f64], beta: f64) -> Option<(Vec<f64>, f64)> {
        let w = self.j.solve(self.col)?;
        let (mut x, mut y) = self.eliminate(b, beta, &w)?;
        let (ax, ay) = self.apply(&x, y);
        let rb: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let (dx, dy) = self.eliminate(&rb, beta - ay, &w)?;
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        y += dy;
        Some((x, y))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// First turning point of the branch.
///
/// Normally this is the first point where `λ` drops below its running
/// maximum, and `λ⋆` is the vertex of the parabola in arclength through the
/// maximum and its neighbours. Where `λ` is flat to roundoff (the discrete
/// fold of a branch whose continuum limit is singular) the fold is instead
/// the first sign change of the recorded `jacobian_mu1` from positive to
/// negative; then
/// `λ⋆` is the largest `λ` reached and the fold sup-norm is the midpoint of
/// the bracketing pair.
pub fn detect_fold(branch: &Branch) -> Result<Fold> {
    let pts = &branch.points;
    let mut running = f64::NEG_INFINITY;
    let mut by_lambda = None;
    for (i, p) in pts.iter().enumerate() {
        if i > 0 && p.lambda < running - lambda_noise(running) {
            by_lambda = Some(i);
            break;
        }
        running = running.max(p.lambda);
    }
    let by_spectrum = pts
        .windows(2)
        .position(|w| {
            matches!((w[0].jacobian_mu1, w[1].jacobian_mu1), (Some(a), Some(b)) if a > 0.0 && b < 0.0)
        })
        .map(|i| i + 1);
    match (by_lambda, by_spectrum) {
        (Some(i), Some(j)) if j < i => Ok(spectral_fold(pts, j)),
        (Some(i), _) => lambda_fold(pts, i),
        (None, Some(j)) => Ok(spectral_fold(pts, j)),
        (None, None) => Err(Error::NoFold),
    }
}

fn spectral_fold(pts: &[BranchPoint], j: usize) -> Fold {
    let lambda_star = pts[..=j].iter().map(|p| p.lambda).fold(f64::NEG_INFINITY, f64::max);
    Fold {
        lambda_star,
        sup_at_fold: 0.5 * (pts[j - 1].sup_norm + pts[j].sup_norm),
        index: j - 1,
    }
}

fn lambda_fold(pts: &[BranchPoint], drop: usize) -> Result<Fold> {
    let k = (0..drop)
        .max_by(|&a, &b| pts[a].lambda.total_cmp(&pts[b].lambda))
        .ok_or(Error::NoFold)?;
    if k == 0 {
        return Err(Error::NoFold);
    }
    let (s0, s1, s2) = (pts[k - 1].arclength, pts[k].arclength, pts[k + 1].arclength);
    let (l0, l1, l2) = (pts[k - 1].lambda, pts[k].lambda, pts[k + 1].lambda);
    let (v0, v1, v2) = (pts[k - 1].sup_norm, pts[k].sup_norm, pts[k + 1].sup_norm);
    let (lambda_star, s_star) = parabola_vertex(s0, s1, s2, l0, l1, l2).unwrap_or((l1, s1));
    let s_star = s_star.clamp(s0, s2);
    let sup_at_fold = lagrange(s0, s1, s2, v0, v1, v2, s_star);
    let index = if (s_star - s1).abs() <= (s_star - s2).abs() { k } else { k + 1 };
    Ok(Fold {
        lambda_star: lambda_star.max(l1),
        sup_at_fold,
        index,
    })
}

fn lagrange(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, x: f64) -> f64 {
    y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
}

fn parabola_vertex(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> Option<(f64, f64)> {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    Some((lagrange(x0, x1, x2, y0, y1, y2, xv), xv))
}

/// Minimal-branch solution at `λ⋆(1 - tol)`, approximating the extremal
/// solution from below.
pub fn extremal_profile(branch: &Branch, tol: f64) -> Result<GridFunction> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", "must lie in (0, 1)"));
    }
    let fold = match branch.fold {
        Some(f) => f,
        None => detect_fold(branch)?,
    };
    let target = fold.lambda_star * (1.0 - tol);
    let minimal = branch.minimal_segment();
    let seed = minimal
        .iter()
        .rev()
        .find(|p| p.lambda <= target)
        .or_else(|| minimal.first())
        .ok_or(Error::NoFold)?;
    let problem = Problem::new(branch.grid.clone(), branch.nonlinearity, target)?;
    let tol_solve = 1e-10;
    match newton_solve(&problem, &seed.u, tol_solve) {
        Ok(s) => {
            // Newton may jump to the upper branch; the minimal solution lies
            // below every branch point with larger λ
            let above = minimal.iter().find(|p| p.lambda >= target);
            let below_upper = above
                .map(|p| s.u.values().iter().zip(p.u.values()).all(|(a, b)| *a <= b + 1e-8 * (1.0 + b.abs())))
                .unwrap_or(true);
            if below_upper {
                return Ok(s.u);
            }
            Ok(solve_minimal(&problem, tol_solve)?.u)
        }
        Err(_) => Ok(solve_minimal(&problem, tol_solve)?.u),
    }
}
