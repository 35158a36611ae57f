use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use super::powers::radial_power_integral;
use crate::quadrature::cell_integral;

/// Which function a norm is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Value,
    /// `|∇u| = |u'|`, from the cell difference quotients.
    Gradient,
}

fn check_radius(u: &GridFunction, rho: f64) -> Result<()> {
    let radius = u.grid().radius();
    if !(rho > 0.0) || rho > radius * (1.0 + 1e-12) {
        return Err(invalid("rho", format!("need 0 < rho <= R = {radius}, got {rho}")));
    }
    Ok(())
}

/// `‖·‖_{L^p(B_ρ)}` of `u` or `∇u`; `p = ∞` gives the largest nodal (or
/// cell) value on `[0, ρ]`. Values are integrated with the cellwise power
/// interpolation of [`PowerIntegrand`](super::powers::PowerIntegrand),
/// gradients as cell constants.
pub fn lebesgue_norm(u: &GridFunction, p: f64, rho: f64, target: Target) -> Result<f64> {
    check_radius(u, rho)?;
    if !(p >= 1.0) {
        return Err(invalid("p", format!("need p >= 1, got {p}")));
    }
    let grid = u.grid();
    let first = u.first_valid();
    let s = grid.dimension() as f64 - 1.0;
    let nodes = grid.nodes();
    match target {
        Target::Value => {
            let v = u.values();
            if p.is_infinite() {
                return Ok((first..grid.len())
                    .take_while(|&i| nodes[i] <= rho)
                    .map(|i| v[i].abs())
                    .fold(0.0, f64::max));
            }
            Ok((grid.sphere_area() * radial_power_integral(u, p, rho)).powf(1.0 / p))
        }
        Target::Gradient => {
            let slopes = u.cell_slopes();
            if p.is_infinite() {
                return Ok((first..grid.cells())
                    .take_while(|&c| nodes[c] < rho)
                    .map(|c| slopes[c].abs())
                    .fold(0.0, f64::max));
            }
            let g: Vec<f64> = slopes.iter().map(|x| x.abs().powf(p)).collect();
            Ok((grid.sphere_area() * cell_integral(grid, &g, first, 0.0, rho, s)).powf(1.0 / p))
        }
    }
}

/// `sup |u(x) - u(y)| / |x - y|^α` over `B_ρ`, as the maximum over pairs of
/// valid nodes in `[0, ρ]`.
///
/// For radial `u` this is exact on the node set: `|x - y| >= ||x| - |y||`
/// with equality for points on a common ray, so every pair of radii is
/// realised with the smallest possible distance.
pub fn holder_seminorm(u: &GridFunction, alpha: f64, rho: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("need 0 < alpha <= 1, got {alpha}")));
    }
    check_radius(u, rho)?;
    let grid = u.grid();
    let nodes = grid.nodes();
    let v = u.values();
    let end = nodes.partition_point(|&r| r <= rho * (1.0 + 1e-12));
    let mut best = 0.0f64;
    for i in u.first_valid()..end {
        for j in i + 1..end {
            let q = (v[j] - v[i]).abs() / (nodes[j] - nodes[i]).powf(alpha);
            best = best.max(q);
        }
    }
    Ok(best)
}

/// `‖u‖_{C^α(B̄_ρ)} = sup |u| + [u]_α`.
pub fn holder_norm(u: &GridFunction, alpha: f64, rho: f64) -> Result<f64> {
    Ok(lebesgue_norm(u, f64::INFINITY, rho, Target::Value)? + holder_seminorm(u, alpha, rho)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialQuantities {
    /// `ρ^{2-n} ∫_{B_ρ} |∇u|²`.
    pub d: f64,
    /// `∫_{B_ρ} |x|^{-n} |x·∇u|²`.
    pub rq: f64,
}

/// Scaled Dirichlet energy and weighted radial energy on `B_ρ`.
///
/// For a profile singular at the origin the integrand `r u'²` of the second
/// quantity must be integrable at 0; this is checked from the decay of
/// `r² u'²` between the first valid cell and the cell four times further out.
pub fn radial_quantities(u: &GridFunction, rho: f64) -> Result<RadialQuantities> {
    check_radius(u, rho)?;
    let grid = u.grid();
    let n = grid.dimension() as f64;
    let first = u.first_valid();
    let slopes = u.cell_slopes();
    let sq: Vec<f64> = slopes.iter().map(|s| s * s).collect();
    if u.is_singular() {
        let mids = grid.midpoints();
        let a = first;
        let b = mids.partition_point(|&r| r < 4.0 * mids[a]).min(grid.cells() - 1);
        let (ta, tb) = (mids[a] * mids[a] * sq[a], mids[b] * mids[b] * sq[b]);
        // r² u'² must vanish like a positive power of r near the origin
        if ta > 0.0 && ta >= tb * (mids[a] / mids[b]).powf(0.1) {
            return Err(Error::NonIntegrable(format!(
                "r u'^2 is not integrable at the origin (r^2 u'^2 = {ta:.3e} at r = {:.3e})",
                mids[a]
            )));
        }
    }
    let omega = grid.sphere_area();
    let d = rho.powf(2.0 - n) * omega * cell_integral(grid, &sq, first, 0.0, rho, n - 1.0);
    let rq = omega * cell_integral(grid, &sq, first, 0.0, rho, 1.0);
    Ok(RadialQuantities { d, rq })
}
