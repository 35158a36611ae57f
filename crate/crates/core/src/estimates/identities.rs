use crate::error::{invalid, Error, Result};
use crate::grid::{one_sided, GridFunction};
use crate::nonlinearity::Nonlinearity;
use crate::oracles::ball_lambda1;
use crate::quadrature::{cell_integral, nodal_integral};
use crate::report::EstimateReport;
use crate::solver::Solution;

use super::norms::{lebesgue_norm, Target};

const RANGE_SAMPLES: usize = 1024;

/// Ceiling for `‖∇u‖_{L²(B_{1/2})} / ‖u‖_{L¹(B_1)}` on the minimal branches of
/// the exponential and power families, `3 <= n <= 9`. The largest measured
/// ratio there is about 0.65.
pub const GRADIENT_L1_CONSTANT: f64 = 1.0;

/// Relative defect of the Pohozaev identity on `B_R`,
///
/// ```text
/// (R/2) ∫_{∂B_R} u_ν²  =  n ∫ λF(u)  -  (n-2)/2 ∫ |∇u|²
/// ```
///
/// divided by the largest of the three terms.
pub fn pohozaev_residual(s: &Solution) -> Result<f64> {
    if !s.converged {
        return Err(Error::Precondition("Pohozaev residual needs a converged solution".into()));
    }
    let grid = &s.problem.grid;
    let u = s.u.values();
    let n = grid.dimension() as f64;
    let radius = grid.radius();
    let last = grid.cells();
    let omega = grid.sphere_area();
    let nodes = grid.nodes();
    let du = one_sided(
        nodes[last],
        nodes[last - 1],
        nodes[last - 2],
        u[last],
        u[last - 1],
        u[last - 2],
    );
    let boundary = 0.5 * radius * omega * radius.powf(n - 1.0) * du * du;
    let f = &s.problem.nonlinearity;
    let big_f: Vec<f64> = u.iter().map(|&v| s.problem.lambda * f.antiderivative(v)).collect();
    let potential = n * omega * nodal_integral(grid, &big_f, 0, 0.0, radius, n - 1.0);
    let sq: Vec<f64> = s.u.cell_slopes().iter().map(|v| v * v).collect();
    let dirichlet = 0.5 * (n - 2.0) * omega * cell_integral(grid, &sq, 0, 0.0, radius, n - 1.0);
    let scale = boundary.abs().max(potential.abs()).max(dirichlet.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((boundary - potential + dirichlet).abs() / scale)
}

/// Weighted `L¹` bound for solutions with `λf(t) >= At - B`, `A > λ₁`:
/// `(A - λ₁) ∫ u Φ₁ <= B ∫ Φ₁`.
pub fn l1_bound_check(s: &Solution, a: f64, b: f64) -> Result<EstimateReport> {
    if !(b >= 0.0) {
        return Err(invalid("B", format!("need B >= 0, got {b}")));
    }
    let grid = &s.problem.grid;
    let eig = ball_lambda1(grid.clone())?;
    if !(a > eig.lambda1) {
        return Err(Error::Precondition(format!(
            "need A > lambda1 = {:.8}, got A = {a}",
            eig.lambda1
        )));
    }
    let f = &s.problem.nonlinearity;
    let lambda = s.problem.lambda;
    let top = s.u.max_value().max(0.0);
    let samples = (0..=RANGE_SAMPLES)
        .map(|k| top * k as f64 / RANGE_SAMPLES as f64)
        .chain(s.u.values().iter().cloned());
    for t in samples {
        let lower = a * t - b;
        if lambda * f.eval(t) < lower - 1e-12 * lower.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "lambda f(t) >= A t - B fails at t = {t}"
            )));
        }
    }
    let omega = grid.sphere_area();
    let n1 = grid.dimension() as f64 - 1.0;
    let radius = grid.radius();
    let phi = eig.phi1.values();
    let u_phi: Vec<f64> = s.u.values().iter().zip(phi).map(|(u, p)| u * p).collect();
    let lhs = (a - eig.lambda1) * omega * nodal_integral(grid, &u_phi, 0, 0.0, radius, n1);
    let rhs = b * omega * nodal_integral(grid, phi, 0, 0.0, radius, n1);
    Ok(EstimateReport::new("l1_bound", lhs, rhs)
        .with_param("A", a)
        .with_param("B", b)
        .with_param("lambda1", eig.lambda1)
        .with_param("lambda", lambda))
}

/// `‖∇u‖_{L²(B_{ρ/2})} <= C ‖u‖_{L¹(B_ρ)}` with `ρ` the grid radius.
pub fn gradient_l1_check(u: &GridFunction, c: f64) -> Result<EstimateReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("C", format!("need a positive constant, got {c}")));
    }
    let radius = u.grid().radius();
    let grad = lebesgue_norm(u, 2.0, 0.5 * radius, Target::Gradient)?;
    let l1 = lebesgue_norm(u, 1.0, radius, Target::Value)?;
    Ok(EstimateReport::new("gradient_l1", grad, c * l1)
        .with_param("C", c)
        .with_param("l1", l1))
}

/// `max_{0 <= t <= t_max} (A t - λ f(t))`, the smallest `B` with
/// `λ f(t) >= A t - B` on `[0, t_max]`. The gap is concave for the convex
/// nonlinearities, so golden-section search finds it.
pub fn affine_gap(f: &Nonlinearity, lambda: f64, a: f64, t_max: f64) -> Result<f64> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", "must be positive"));
    }
    let g = |t: f64| a * t - lambda * f.eval(t);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, t_max);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * t_max {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        }
    }
    Ok([g(0.0), g(t_max), g1, g2, g(0.5 * (lo + hi))]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}
