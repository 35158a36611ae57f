//! Second variation `Q(ξ) = ∫ |∇ξ|² - λ f'_-(u) ξ²` and its spectral
//! certificate, plus the test-function inequalities satisfied by every
//! stable solution.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, Origin, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::{cell_integral, gauss_legendre8, power_integral_real};
use crate::report::EstimateReport;
use crate::tridiag::SymTridiagonal;

/// Absolute tolerance on `mu1` for the stability verdict.
pub const TOL_EIG: f64 = 1e-7;
const MAX_INVERSE_STEPS: usize = 500;

#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub mu1: f64,
    /// Positive on the unknown nodes, `‖φ₁‖₂ = 1` in `L²(B_R)`.
    pub phi1: GridFunction,
    pub stable: bool,
    /// `|mu1| < TOL_EIG`.
    pub marginal: bool,
    pub iterations: usize,
    /// Spherical-harmonic degree of the mode.
    pub mode: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub mu1: f64,
    pub stable: bool,
    pub marginal: bool,
    pub iterations: usize,
    pub mode: usize,
}

impl StabilityCertificate {
    pub fn summary(&self) -> CertificateSummary {
        CertificateSummary {
            mu1: self.mu1,
            stable: self.stable,
            marginal: self.marginal,
            iterations: self.iterations,
            mode: self.mode,
        }
    }
}

/// `Q(ξ)` evaluated exactly on the piecewise-linear interpolant of `ξ`, with
/// the potential interpolated cellwise.
///
/// For a singular profile `ξ` must vanish up to and including the first
/// positive node, where the eigenproblem puts its inner Dirichlet condition.
pub fn quadratic_form(u: &GridFunction, f: &Nonlinearity, lambda: f64, xi: &GridFunction) -> Result<f64> {
    if !u.same_grid(xi) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let last = grid.cells();
    let x = xi.values();
    if x[last].abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "test function must vanish at r = R, got {}",
            x[last]
        )));
    }
    let lo = inner_dirichlet(u, 0);
    if x[..lo].iter().any(|v| *v != 0.0) {
        return Err(Error::Precondition(
            "test function must vanish on the excised origin of a singular profile".into(),
        ));
    }
    let w = nodal_potential(u, f, lambda, lo);
    let sv = SecondVariation::new(grid, &w, 0.0, lo);
    Ok(grid.sphere_area() * sv.form(x))
}

/// First unknown node of the eigenproblem.
fn inner_dirichlet(u: &GridFunction, k: usize) -> usize {
    if u.is_singular() {
        u.first_valid() + 1
    } else if k > 0 {
        1
    } else {
        0
    }
}

/// `λ f'_-(u)` at the valid nodes, zero on the excised ones.
fn nodal_potential(u: &GridFunction, f: &Nonlinearity, lambda: f64, lo: usize) -> Vec<f64> {
    let first = u.first_valid().min(lo);
    u.values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < first { 0.0 } else { lambda * f.deriv_left(v) })
        .collect()
}

/// Cell matrices of `∫ |ξ'|² r^{n-1}` and `∫ V ξ² r^{n-1}` for piecewise-linear
/// `ξ`, where `V = W - A/r²`. The nodal potential `W` is interpolated as a
/// power of `r` on cells away from the origin where it is positive, linearly
/// otherwise, so `c/r²` potentials are integrated exactly. Evaluating `Q` on
/// the interpolant keeps Hardy-type inequalities valid for the discrete form.
struct SecondVariation {
    /// `∫_cell r^{n-1} / h²`
    stiff: Vec<f64>,
    pot_diag: Vec<f64>,
    pot_off: Vec<f64>,
}

impl SecondVariation {
    fn new(grid: &RadialGrid, w: &[f64], angular: f64, lo: usize) -> Self {
        let nodes = grid.nodes();
        let cells = grid.cells();
        let s = grid.dimension() as f64 - 1.0;
        let mut stiff = vec![0.0; cells];
        let mut pot_diag = vec![0.0; cells + 1];
        let mut pot_off = vec![0.0; cells];
        for c in lo.saturating_sub(1)..cells {
            let (r0, r1) = (nodes[c], nodes[c + 1]);
            let h = r1 - r0;
            stiff[c] = power_integral_real(r0, r1, s) / (h * h);
            let power = if r0 > 0.0 && w[c] > 0.0 && w[c + 1] > 0.0 {
                Some((w[c + 1] / w[c]).ln() / (r1 / r0).ln())
            } else {
                None
            };
            let v = |r: f64| {
                let wr = match power {
                    Some(k) => w[c] * (r / r0).powf(k),
                    None => w[c] + (w[c + 1] - w[c]) * (r - r0) / h,
                };
                (wr - angular / (r * r)) * r.powf(s)
            };
            let left = |r: f64| (r1 - r) / h;
            let right = |r: f64| (r - r0) / h;
            pot_diag[c] += gauss_legendre8(|r| v(r) * left(r) * left(r), r0, r1);
            pot_diag[c + 1] += gauss_legendre8(|r| v(r) * right(r) * right(r), r0, r1);
            pot_off[c] = gauss_legendre8(|r| v(r) * left(r) * right(r), r0, r1);
        }
        Self {
            stiff,
            pot_diag,
            pot_off,
        }
    }

    /// The finite-volume linearization of the solver: midpoint fluxes and
    /// the potential lumped on dual cells.
    fn lumped(grid: &RadialGrid, w: &[f64]) -> Self {
        Self {
            stiff: grid.stiffness().to_vec(),
            pot_diag: w.iter().zip(grid.dual_measure()).map(|(v, m)| v * m).collect(),
            pot_off: vec![0.0; grid.cells()],
        }
    }

    fn form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.stiff.len() {
            acc += self.stiff[c] * (x[c + 1] - x[c]).powi(2) - 2.0 * self.pot_off[c] * x[c] * x[c + 1];
        }
        acc - x.iter().zip(&self.pot_diag).map(|(v, p)| p * v * v).sum::<f64>()
    }
}

/// `‖ξ‖²` in `L²(B_R)` with the dual-cell rule.
pub fn l2_norm_squared(xi: &GridFunction) -> f64 {
    let grid = xi.grid();
    grid.sphere_area()
        * xi.values()
            .iter()
            .zip(grid.dual_measure())
            .skip(xi.first_valid())
            .map(|(v, m)| m * v * v)
            .sum::<f64>()
}

/// Principal eigenpair of `-Δ - λ f'_-(u)` on radial functions, Dirichlet at `R`.
pub fn principal_eigenvalue(u: &GridFunction, f: &Nonlinearity, lambda: f64) -> Result<StabilityCertificate> {
    principal_eigenvalue_mode(u, f, lambda, 0)
}

/// Principal eigenpair on the spherical-harmonic mode of degree `k`, whose
/// angular part adds `k(k+n-2)/r²` to the operator.
pub fn principal_eigenvalue_mode(
    u: &GridFunction,
    f: &Nonlinearity,
    lambda: f64,
    k: usize,
) -> Result<StabilityCertificate> {
    let grid = u.grid();
    let angular = (k * (k + grid.dimension() - 2)) as f64;
    // singular profiles: Dirichlet at the first positive node
    let lo = inner_dirichlet(u, k);
    let w = nodal_potential(u, f, lambda, lo);
    if w[lo..].iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("potential is not finite at the unknown nodes".into()));
    }
    let sv = SecondVariation::new(grid, &w, angular, lo);
    let (mu1, phi, iterations) = eigen_with_potential(grid, &sv, lo)?;
    let phi1 = GridFunction::new(grid.clone(), phi, Origin::Regular)?;
    Ok(StabilityCertificate {
        mu1,
        stable: mu1 >= -TOL_EIG,
        marginal: mu1.abs() < TOL_EIG,
        phi1,
        iterations,
        mode: k,
    })
}

/// Smallest eigenvalue of `-Δ_h - λ f'_-(u)` with the solver's
/// finite-volume stencil; it vanishes exactly where the Newton Jacobian is
/// singular, so it locates the turning point of the discrete branch.
pub(crate) fn linearization_eigenvalue(u: &GridFunction, f: &Nonlinearity, lambda: f64) -> Result<f64> {
    let w = nodal_potential(u, f, lambda, 0);
    let sv = SecondVariation::lumped(u.grid(), &w);
    Ok(eigen_with_potential(u.grid(), &sv, 0)?.0)
}

/// Smallest eigenvalue of `(K - P) φ = μ m φ` on unknowns `lo..M`, with `K`
/// and `P` the exact cell matrices on piecewise-linear functions and `m` the
/// dual-cell masses.
///
/// A Sturm-count bisection brackets `μ₁` from below, starting at the
/// Gershgorin bound minus one; shifted inverse iteration from the lower end
/// of the bracket then converges in a few steps even when the potential is
/// of size `1/h²`.
fn eigen_with_potential(grid: &Arc<RadialGrid>, sv: &SecondVariation, lo: usize) -> Result<(f64, Vec<f64>, usize)> {
    let m = grid.dual_measure();
    let hi_idx = grid.cells();
    let size = hi_idx.saturating_sub(lo);
    if size < 2 {
        return Err(invalid("grid", "too few unknowns for the eigenproblem"));
    }
    let c = &sv.stiff;
    let sqrt_m: Vec<f64> = (lo..hi_idx).map(|i| m[i].sqrt()).collect();
    let mut sym = SymTridiagonal {
        diag: vec![0.0; size],
        off: vec![0.0; size - 1],
    };
    for (j, i) in (lo..hi_idx).enumerate() {
        let left = if i == 0 { 0.0 } else { c[i - 1] };
        sym.diag[j] = (left + c[i] - sv.pot_diag[i]) / m[i];
        if j + 1 < size {
            sym.off[j] = -(c[i] + sv.pot_off[i]) / (sqrt_m[j] * sqrt_m[j + 1]);
        }
    }
    let gersh = sym.gershgorin().0;

    // bracket [a, b] with no eigenvalue below a and at least one below b
    let mut a = gersh - 1.0;
    let mut width = 1.0f64.max(a.abs());
    let mut b = a + width;
    let mut guard = 0;
    while sym.count_below(b) == 0 {
        a = b;
        width *= 2.0;
        b = a + width;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Stagnation(guard));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if sym.count_below(mid) == 0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-9 * b.abs().max(1.0) {
            break;
        }
    }
    let shift = a - 1e-9 * b.abs().max(1.0);

    let shifted = sym.shifted(shift);
    let plain = sym.shifted(0.0);
    let mut y = vec![1.0 / (size as f64).sqrt(); size];
    let mut rq_prev = f64::NAN;
    let mut rq = f64::NAN;
    let mut steps = 0;
    for step in 1..=MAX_INVERSE_STEPS {
        steps = step;
        let z = shifted.solve(&y).ok_or(Error::Stagnation(step))?;
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sign = if z.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let next: Vec<f64> = z.iter().map(|v| sign * v / norm).collect();
        let change = next.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        y = next;
        let ty = plain.matvec(&y);
        rq = y.iter().zip(&ty).map(|(a, b)| a * b).sum::<f64>();
        if (rq - rq_prev).abs() <= 1e-10 * rq.abs().max(1.0) && change <= 1e-10 {
            break;
        }
        rq_prev = rq;
        if step == MAX_INVERSE_STEPS {
            return Err(Error::Stagnation(step));
        }
    }

    // back to nodal values, normalised in L²(B_R) and made positive
    let mut phi = vec![0.0; grid.len()];
    for (j, i) in (lo..hi_idx).enumerate() {
        phi[i] = y[j] / sqrt_m[j];
    }
    let sign = if phi.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / (grid.sphere_area() * y.iter().map(|v| v * v).sum::<f64>()).sqrt();
    phi.iter_mut().for_each(|v| *v *= scale);
    Ok((rq, phi, steps))
}

/// `(n-2)²/4 - 2(n-2)`: nonnegative exactly when the log profile is stable.
pub fn hardy_margin(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(invalid("n", format!("hardy margin needs n >= 3, got {n}")));
    }
    let d = n as f64 - 2.0;
    Ok(d * d / 4.0 - 2.0 * d)
}

/// Radial weight `|x|^{-a}` family used in the test-function argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestWeight {
    /// `a = n - 2`, valid for `3 <= n <= 9`.
    Critical,
    /// `8 < a < 2(1 + √(n-1))`, `n >= 11`.
    Power(f64),
    /// `|x|^{-4}|log|x||^{-δ/2}` at `n = 10`.
    Log10(f64),
}

/// Lipschitz cutoff: 1 on `[0, ρ]`, linear down to 0 at `3ρ/2`.
fn cutoff_sup_constant(a: f64) -> f64 {
    // on the annulus: (a-2) r ζ |ζ'| <= 3(a-2)^+, r² ζ'² <= 9
    3.0 * (a - 2.0).max(0.0) + 9.0
}

/// Weighted radial-derivative inequality for stable solutions,
///
/// ```text
/// κ ∫_{B_ρ} |∇u|² |x|^{-a} dx  <=  C ρ^{-a} ∫_{B_{3ρ/2} \ B_ρ} |∇u|² dx
/// ```
///
/// with `κ = n - 2 + a - a²/4` and the constant `C` obtained from the
/// cutoff `ζ` (1 on `B_ρ`, linear to 0 on `B_{3ρ/2}`). For radial `u`,
/// `|x|^{-n}|x·∇u|² = |∇u|²|x|^{2-n}`, so `a = n-2` is the critical weight.
pub fn weighted_test_inequality(u: &GridFunction, rho: f64, weight: TestWeight) -> Result<EstimateReport> {
    let grid = u.grid();
    let n = grid.dimension();
    let nf = n as f64;
    let radius = grid.radius();
    if !(rho > 0.0 && rho < 2.0 * radius / 3.0) {
        return Err(invalid("rho", format!("need 0 < rho < 2R/3, got {rho}")));
    }
    let slopes = u.cell_slopes();
    let sq: Vec<f64> = slopes.iter().map(|s| s * s).collect();
    let first = u.first_valid();
    let omega = grid.sphere_area();
    let annulus = omega * cell_integral(grid, &sq, first, rho, 1.5 * rho, nf - 1.0);
    match weight {
        TestWeight::Critical => {
            if !(3..=9).contains(&n) {
                return Err(invalid("weight", format!("critical weight needs 3 <= n <= 9, got n = {n}")));
            }
            let a = nf - 2.0;
            let coefficient = (nf - 2.0) * (10.0 - nf) / 4.0;
            let constant = cutoff_sup_constant(a);
            // |x|^{-n}|x·∇u|² dx = u'² r dr ω
            let lhs = coefficient * omega * cell_integral(grid, &sq, first, 0.0, rho, 1.0);
            let rhs = constant * rho.powf(2.0 - nf) * annulus;
            Ok(EstimateReport::new("weighted_critical", lhs, rhs)
                .with_param("n", nf)
                .with_param("rho", rho)
                .with_param("a", a)
                .with_param("coefficient", coefficient)
                .with_param("C", constant))
        }
        TestWeight::Power(a) => {
            let upper = 2.0 * (1.0 + (nf - 1.0).sqrt());
            if n < 11 {
                return Err(invalid("weight", format!("power weight needs n >= 11, got n = {n}")));
            }
            if !(a > 8.0 && a < upper) {
                return Err(invalid("a", format!("need 8 < a < {upper:.6}, got {a}")));
            }
            let coefficient = nf - 2.0 + a - a * a / 4.0;
            let constant = cutoff_sup_constant(a);
            let lhs = coefficient * omega * cell_integral(grid, &sq, first, 0.0, rho, nf - 1.0 - a);
            let rhs = constant * rho.powf(-a) * annulus;
            Ok(EstimateReport::new("weighted_power", lhs, rhs)
                .with_param("n", nf)
                .with_param("rho", rho)
                .with_param("a", a)
                .with_param("coefficient", coefficient)
                .with_param("C", constant))
        }
        TestWeight::Log10(delta) => {
            if n != 10 {
                return Err(invalid("weight", format!("log weight needs n = 10, got n = {n}")));
            }
            if !(delta > 0.0) {
                return Err(invalid("delta", "must be positive"));
            }
            if !(1.5 * rho < 1.0) || -(rho.ln()) <= delta / 12.0 {
                return Err(invalid("rho", "log weight needs |log ρ| > δ/12 and 3ρ/2 < 1"));
            }
            // η = r^{-4} L^{-δ/2} ζ with L = |log r|; the radial identity gives
            // κ(r) = 3δ/L - δ²/(4L²) against the weight r^{-8} L^{-δ}
            let mids = grid.midpoints();
            let weighted: Vec<f64> = sq
                .iter()
                .zip(mids)
                .map(|(s, &r)| {
                    let l = -r.ln();
                    let kappa = 3.0 * delta / l - delta * delta / (4.0 * l * l);
                    s * kappa * l.powf(-delta)
                })
                .collect();
            // r^{-8} r^{n-1} = r
            let lhs = omega * cell_integral(grid, &weighted, first, 0.0, rho, 1.0);
            let constant = 27.0;
            let weight_sup = rho.powi(-8) * (-(1.5 * rho).ln()).powf(-delta);
            let rhs = constant * weight_sup * annulus;
            Ok(EstimateReport::new("weighted_log10", lhs, rhs)
                .with_param("n", nf)
                .with_param("rho", rho)
                .with_param("delta", delta)
                .with_param("C", constant))
        }
    }
}

/// Radial curvature density `𝒜² = (n-1) u'² / r²` per cell.
pub fn curvature_density(u: &GridFunction) -> Vec<f64> {
    let grid = u.grid();
    let n1 = grid.dimension() as f64 - 1.0;
    u.cell_slopes()
        .iter()
        .zip(grid.midpoints())
        .map(|(s, r)| n1 * s * s / (r * r))
        .collect()
}

/// `∫ 𝒜² η² <= ∫ |∇u|² |∇η|²` for radial `u`.
pub fn curvature_test_inequality(u: &GridFunction, eta: &GridFunction) -> Result<EstimateReport> {
    if !u.same_grid(eta) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let last = grid.cells();
    if eta.values()[last].abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "cutoff must vanish at r = R, got {}",
            eta.values()[last]
        )));
    }
    let nf = grid.dimension() as f64;
    let first = u.first_valid();
    let density = curvature_density(u);
    let e = eta.values();
    let eta_mid: Vec<f64> = e.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let eta_slope = eta.cell_slopes();
    let slopes = u.cell_slopes();
    let lhs_density: Vec<f64> = density.iter().zip(&eta_mid).map(|(d, h)| d * h * h).collect();
    let rhs_density: Vec<f64> = slopes
        .iter()
        .zip(&eta_slope)
        .map(|(s, d)| s * s * d * d)
        .collect();
    let omega = grid.sphere_area();
    let r = grid.radius();
    let lhs = omega * cell_integral(grid, &lhs_density, first, 0.0, r, nf - 1.0);
    let rhs = omega * cell_integral(grid, &rhs_density, first, 0.0, r, nf - 1.0);
    Ok(EstimateReport::new("curvature", lhs, rhs).with_param("n", nf))
}
