//! Nonlinear solvers for `-Δu = λ f(u)` in `B_R` with `u(R) = 0`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, RadialGrid};
use crate::laplacian::{laplacian_values, negative_laplacian_matrix, stencil_magnitude};
use crate::nonlinearity::Nonlinearity;
use crate::tridiag::Tridiagonal;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_CAP: usize = 50;
const MIN_DAMPING: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Arc<RadialGrid>,
    pub nonlinearity: Nonlinearity,
    pub lambda: f64,
}

impl Problem {
    pub fn new(grid: Arc<RadialGrid>, nonlinearity: Nonlinearity, lambda: f64) -> Result<Self> {
        nonlinearity.validate()?;
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid("lambda", format!("must be finite and nonnegative, got {lambda}")));
        }
        Ok(Self {
            grid,
            nonlinearity,
            lambda,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.nonlinearity, lambda)
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension()
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: Problem,
    pub u: GridFunction,
    /// Scaled max-norm of the discrete residual, see [`scaled_residual_norm`].
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Pointwise residual `Δu + λ f(u)` at every valid node.
pub fn residual(problem: &Problem, u: &GridFunction) -> Result<GridFunction> {
    if !(Arc::ptr_eq(&problem.grid, u.grid()) || *problem.grid == **u.grid()) {
        return Err(Error::GridMismatch);
    }
    let first = u.first_valid();
    let mut values = laplacian_values(&problem.grid, u.values(), first, first == 0);
    for (i, v) in values.iter_mut().enumerate().skip(first) {
        *v += problem.lambda * problem.nonlinearity.eval(u.values()[i]);
    }
    for v in values.iter_mut().take(first) {
        *v = 0.0;
    }
    u.with_values(values)
}

/// Max over unknown nodes of `|Δ_h u + λ f(u)|_i / max(s_i, 1)`, where `s_i`
/// is the stencil magnitude plus `λ|f(u_i)|`. On strongly graded meshes the
/// stencil entries near the origin reach `1/h²`, so the plain residual has a
/// roundoff floor far above any useful tolerance; the scaled form is a
/// componentwise backward error there and the plain residual elsewhere.
pub fn scaled_residual_norm(problem: &Problem, u: &[f64]) -> f64 {
    let grid = &problem.grid;
    let lap = laplacian_values(grid, u, 0, true);
    let f = &problem.nonlinearity;
    (0..grid.cells())
        .map(|i| {
            let source = problem.lambda * f.eval(u[i]);
            let r = lap[i] + source;
            let scale = stencil_magnitude(grid, u, i) + source.abs();
            r.abs() / scale.max(1.0)
        })
        .fold(0.0, f64::max)
}

pub(crate) fn residual_vector(problem: &Problem, u: &[f64]) -> Vec<f64> {
    let lap = laplacian_values(&problem.grid, u, 0, true);
    (0..problem.grid.cells())
        .map(|i| lap[i] + problem.lambda * problem.nonlinearity.eval(u[i]))
        .collect()
}

/// Jacobian `Δ_h + λ f'_-(u)` of the residual over the unknown nodes.
pub(crate) fn jacobian(problem: &Problem, u: &[f64]) -> Tridiagonal {
    let mut j = negative_laplacian_matrix(&problem.grid);
    for v in j.lower.iter_mut().chain(j.upper.iter_mut()) {
        *v = -*v;
    }
    for (i, d) in j.diag.iter_mut().enumerate() {
        *d = -*d + problem.lambda * problem.nonlinearity.deriv_left(u[i]);
    }
    j
}

/// `‖δ‖∞ <= tol (1 + ‖u‖∞)`: the Newton update is below the tolerance
/// relative to the iterate. Together with a small scaled residual this is the
/// convergence test; the update is insensitive to the roundoff floor of the
/// residual on strongly graded meshes.
pub(crate) fn step_is_negligible(step: &[f64], u: &[f64], tol: f64) -> bool {
    let size = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    step.iter().all(|s| s.abs() <= tol * (1.0 + size))
}

/// Damped Newton iteration from `u0`, Dirichlet `u(R) = 0`. Converged once
/// the scaled residual is below `tol` and the next Newton update is
/// negligible; that final update is applied.
pub fn newton_solve(problem: &Problem, u0: &GridFunction, tol: f64) -> Result<Solution> {
    newton_solve_capped(problem, u0, tol, DEFAULT_NEWTON_CAP)
}

pub fn newton_solve_capped(problem: &Problem, u0: &GridFunction, tol: f64, cap: usize) -> Result<Solution> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if !(Arc::ptr_eq(&problem.grid, u0.grid()) || *problem.grid == **u0.grid()) {
        return Err(Error::GridMismatch);
    }
    if u0.is_singular() {
        return Err(Error::SingularAtOrigin);
    }
    let last = problem.grid.cells();
    let mut u = u0.values().to_vec();
    u[last] = 0.0;
    let mut norm = scaled_residual_norm(problem, &u);
    let mut iterations = 0;
    loop {
        let r = residual_vector(problem, &u);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = jacobian(problem, &u).solve(&rhs).ok_or_else(|| Error::NonConvergence {
            iterations,
            residual: norm,
            reason: "singular Jacobian".into(),
        })?;
        if norm <= tol && step_is_negligible(&step, &u, tol) {
            for (t, s) in u.iter_mut().zip(&step) {
                *t += s;
            }
            norm = scaled_residual_norm(problem, &u);
            break;
        }
        if iterations == cap {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
                reason: "iteration cap reached".into(),
            });
        }
        iterations += 1;
        let mut damping = 1.0;
        loop {
            let mut trial = u.clone();
            for (t, s) in trial.iter_mut().zip(&step) {
                *t += damping * s;
            }
            let trial_norm = scaled_residual_norm(problem, &trial);
            // at the roundoff floor the residual no longer decreases reliably
            if trial_norm.is_finite() && (trial_norm < norm || (norm <= tol && trial_norm <= tol)) {
                u = trial;
                norm = trial_norm;
                break;
            }
            damping *= 0.5;
            if damping < MIN_DAMPING {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: norm,
                    reason: "damping underflow".into(),
                });
            }
        }
    }
    Ok(Solution {
        problem: problem.clone(),
        u: GridFunction::new(problem.grid.clone(), u, crate::grid::Origin::Regular)?,
        residual_norm: norm,
        converged: true,
        iterations,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MonotoneSettings {
    pub tol: f64,
    /// Divergence is declared once `sup u` exceeds this value.
    pub cap: f64,
    pub max_iterations: usize,
}

impl Default for MonotoneSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            cap: 1e3,
            max_iterations: 1_000_000,
        }
    }
}

/// Picard iteration `-Δ u^{(j)} = λ f(u^{(j-1)})` from `u^{(0)} = 0`.
///
/// For nonnegative nondecreasing `f` the iterates increase nodally and, when
/// they converge, the limit is the minimal solution. Stops once successive
/// iterates differ by at most `tol` and the scaled residual is below `tol`.
pub fn monotone_iteration(problem: &Problem, tol: f64, cap: f64) -> Result<Solution> {
    monotone_iteration_with(
        problem,
        MonotoneSettings {
            tol,
            cap,
            ..Default::default()
        },
    )
}

pub fn monotone_iteration_with(problem: &Problem, settings: MonotoneSettings) -> Result<Solution> {
    monotone_trace(problem, settings, |_| {})
}

/// As [`monotone_iteration_with`], handing every iterate to `observe`.
pub fn monotone_trace(
    problem: &Problem,
    settings: MonotoneSettings,
    mut observe: impl FnMut(&[f64]),
) -> Result<Solution> {
    if !(settings.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if !(settings.cap > 0.0) {
        return Err(invalid("cap", "must be positive"));
    }
    let grid = &problem.grid;
    let last = grid.cells();
    let operator = negative_laplacian_matrix(grid);
    let f = &problem.nonlinearity;
    let mut u = vec![0.0; grid.len()];
    observe(&u);
    for iteration in 1..=settings.max_iterations {
        let rhs: Vec<f64> = u[..last].iter().map(|&v| problem.lambda * f.eval(v)).collect();
        let next = operator.solve(&rhs).ok_or_else(|| Error::NonConvergence {
            iterations: iteration,
            residual: f64::NAN,
            reason: "singular Laplacian".into(),
        })?;
        let diff = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        u[..last].copy_from_slice(&next);
        observe(&u);
        let sup = u.iter().cloned().fold(0.0, f64::max);
        if !sup.is_finite() || sup > settings.cap {
            return Err(Error::Divergence {
                iterations: iteration,
                sup,
            });
        }
        if diff <= settings.tol {
            let norm = scaled_residual_norm(problem, &u);
            if norm <= settings.tol {
                return Ok(Solution {
                    problem: problem.clone(),
                    u: GridFunction::new(grid.clone(), u, crate::grid::Origin::Regular)?,
                    residual_norm: norm,
                    converged: true,
                    iterations: iteration,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iterations,
        residual: scaled_residual_norm(problem, &u),
        reason: "monotone iteration cap reached".into(),
    })
}

/// Minimal solution: monotone iteration to a loose tolerance, then Newton
/// polish from below.
pub fn solve_minimal(problem: &Problem, tol: f64) -> Result<Solution> {
    let rough = monotone_iteration_with(
        problem,
        MonotoneSettings {
            tol: (tol * 1e4).max(1e-9),
            cap: 1e3,
            max_iterations: 2_000_000,
        },
    );
    match rough {
        Ok(s) if s.residual_norm <= tol => Ok(s),
        Ok(s) => newton_solve(problem, &s.u, tol),
        Err(e @ Error::Divergence { .. }) => Err(e),
        Err(Error::NonConvergence { .. }) => {
            newton_solve(problem, &GridFunction::zeros(problem.grid.clone()), tol)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grading;

    fn grid(m: usize, n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(m, Grading::Power(2.0), n, 1.0).unwrap())
    }

    #[test]
    fn constant_source_solved_in_one_newton_step() {
        let g = Arc::new(RadialGrid::new(64, Grading::Power(2.0), 3, 1.5).unwrap());
        let lambda = 2.5;
        let p = Problem::new(g.clone(), Nonlinearity::constant(1.0).unwrap(), lambda).unwrap();
        let s = newton_solve(&p, &GridFunction::zeros(g.clone()), 1e-10).unwrap();
        assert_eq!(s.iterations, 1);
        for (r, v) in g.nodes().iter().zip(s.u.values()) {
            let exact = lambda * (1.5 * 1.5 - r * r) / 6.0;
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_residual_of_zero_is_one() {
        let g = grid(32, 3);
        let p = Problem::new(g.clone(), Nonlinearity::Exponential, 1.0).unwrap();
        let r = residual(&p, &GridFunction::zeros(g)).unwrap();
        assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn linear_problem_residual_vanishes() {
        let g = grid(64, 3);
        let p = Problem::new(g.clone(), Nonlinearity::constant(1.0).unwrap(), 6.0).unwrap();
        let u = GridFunction::from_fn(g, |r| 1.0 - r * r).unwrap();
        let r = residual(&p, &u).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn newton_small_lambda_exponential() {
        let g = grid(256, 3);
        let p = Problem::new(g.clone(), Nonlinearity::Exponential, 0.5).unwrap();
        let s = newton_solve(&p, &GridFunction::zeros(g), 1e-10).unwrap();
        assert!(s.converged && s.residual_norm <= 1e-10);
        assert!(s.u.values()[..256].iter().all(|&v| v > 0.0 && v < 0.1));
    }

    #[test]
    fn newton_fails_beyond_fold() {
        let g = grid(256, 3);
        let p = Problem::new(g.clone(), Nonlinearity::Exponential, 20.0).unwrap();
        assert!(matches!(
            newton_solve(&p, &GridFunction::zeros(g), 1e-10),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn monotone_constant_source_single_step() {
        let g = grid(64, 4);
        let p = Problem::new(g.clone(), Nonlinearity::constant(1.0).unwrap(), 3.0).unwrap();
        let s = monotone_iteration(&p, 1e-10, 100.0).unwrap();
        // the second iterate confirms the first
        assert!(s.iterations <= 2);
        for (r, v) in g.nodes().iter().zip(s.u.values()) {
            assert!((v - 3.0 * (1.0 - r * r) / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_diverges_beyond_fold() {
        let g = grid(128, 3);
        let p = Problem::new(g, Nonlinearity::Exponential, 20.0).unwrap();
        assert!(matches!(monotone_iteration(&p, 1e-10, 100.0), Err(Error::Divergence { .. })));
    }

    #[test]
    fn monotone_iterates_increase() {
        let g = grid(128, 5);
        let p = Problem::new(g, Nonlinearity::power(3.0).unwrap(), 1.0).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        let mut ok = true;
        monotone_trace(&p, MonotoneSettings::default(), |u| {
            if let Some(q) = &prev {
                ok &= u.iter().zip(q).all(|(a, b)| *a >= *b);
            }
            prev = Some(u.to_vec());
        })
        .unwrap();
        assert!(ok);
    }

    #[test]
    fn rejects_bad_lambda() {
        let g = grid(16, 3);
        assert!(Problem::new(g.clone(), Nonlinearity::Exponential, f64::NAN).is_err());
        assert!(Problem::new(g, Nonlinearity::Exponential, -1.0).is_err());
    }
}
