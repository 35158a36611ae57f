//! Discrete radial Laplacian `u'' + (n-1)/r u'` in conservative form.
//!
//! At node `i` the operator is the flux balance over the dual cell
//! `[r_{i-1/2}, r_{i+1/2}]`:
//!
//! ```text
//! (Δ_h u)_i = [c_i (u_{i+1} - u_i) - c_{i-1} (u_i - u_{i-1})] / m_i
//! c_i = r_{i+1/2}^{n-1} / h_i,   m_i = ∫_{dual cell} r^{n-1} dr
//! ```
//!
//! At the origin only the outer flux survives, which on uniform meshes is
//! the ghost-node closure `2n (u_1 - u_0) / h²`. The stencil reproduces
//! `Δ r² = 2n` exactly on any mesh, and is second order on smoothly graded
//! meshes. The weighted form `K u = -m Δ_h u` is symmetric, which the
//! eigensolver relies on.

use crate::error::{Error, Result};
use crate::grid::{one_sided, GridFunction, RadialGrid};
use crate::tridiag::Tridiagonal;

/// Which nodes the caller wants evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Every node, including the origin.
    Full,
    /// Skip the origin; the first valid node uses a forward quadratic fit.
    InteriorOnly,
}

/// Nodal values of `Δu`. The last node uses the one-sided quadratic fit.
pub fn radial_laplacian(u: &GridFunction, mode: Evaluation) -> Result<GridFunction> {
    if u.is_singular() && mode == Evaluation::Full {
        return Err(Error::SingularAtOrigin);
    }
    let grid = u.grid();
    let values = laplacian_values(grid, u.values(), u.first_valid(), mode == Evaluation::Full);
    u.with_values(values)
}

pub(crate) fn laplacian_values(grid: &RadialGrid, u: &[f64], first: usize, origin: bool) -> Vec<f64> {
    let nodes = grid.nodes();
    let c = grid.stiffness();
    let m = grid.dual_measure();
    let last = grid.cells();
    let n = grid.dimension() as f64;
    let mut out = vec![0.0; u.len()];
    let start = if origin { 0 } else { first.max(1) };
    for i in start..last {
        out[i] = if i == 0 {
            c[0] * (u[1] - u[0]) / m[0]
        } else if i == first && first > 0 {
            forward_laplacian(grid, u, i)
        } else {
            (c[i] * (u[i + 1] - u[i]) - c[i - 1] * (u[i] - u[i - 1])) / m[i]
        };
    }
    // one-sided closure at r = R
    let (x0, x1, x2) = (nodes[last], nodes[last - 1], nodes[last - 2]);
    let (u0, u1, u2) = (u[last], u[last - 1], u[last - 2]);
    let second = quadratic_second_derivative(x0, x1, x2, u0, u1, u2);
    let first_d = one_sided(x0, x1, x2, u0, u1, u2);
    out[last] = second + (n - 1.0) / x0 * first_d;
    out
}

fn forward_laplacian(grid: &RadialGrid, u: &[f64], i: usize) -> f64 {
    let nodes = grid.nodes();
    let n = grid.dimension() as f64;
    let (x0, x1, x2) = (nodes[i], nodes[i + 1], nodes[i + 2]);
    let (u0, u1, u2) = (u[i], u[i + 1], u[i + 2]);
    quadratic_second_derivative(x0, x1, x2, u0, u1, u2) + (n - 1.0) / x0 * one_sided(x0, x1, x2, u0, u1, u2)
}

fn quadratic_second_derivative(x0: f64, x1: f64, x2: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    2.0 * (u0 / ((x0 - x1) * (x0 - x2)) + u1 / ((x1 - x0) * (x1 - x2)) + u2 / ((x2 - x0) * (x2 - x1)))
}

/// `-Δ_h` restricted to the unknowns `0..M` (node `M` carries Dirichlet data
/// and is eliminated), as a tridiagonal matrix in pointwise scaling.
pub(crate) fn negative_laplacian_matrix(grid: &RadialGrid) -> Tridiagonal {
    let c = grid.stiffness();
    let m = grid.dual_measure();
    let unknowns = grid.cells();
    let mut t = Tridiagonal::zeros(unknowns);
    for i in 0..unknowns {
        let left = if i == 0 { 0.0 } else { c[i - 1] };
        t.diag[i] = (left + c[i]) / m[i];
        if i > 0 {
            t.lower[i - 1] = -left / m[i];
        }
        if i + 1 < unknowns {
            t.upper[i] = -c[i] / m[i];
        }
    }
    t
}

/// Stencil magnitude `(|c_{i-1}|(|u_{i-1}|+|u_i|) + |c_i|(|u_i|+|u_{i+1}|)) / m_i`,
/// the scale against which roundoff in `Δ_h u` is measured.
pub(crate) fn stencil_magnitude(grid: &RadialGrid, u: &[f64], i: usize) -> f64 {
    let c = grid.stiffness();
    let m = grid.dual_measure();
    let left = if i == 0 { 0.0 } else { c[i - 1] * (u[i - 1].abs() + u[i].abs()) };
    (left + c[i] * (u[i].abs() + u[i + 1].abs())) / m[i]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grading;
    use std::sync::Arc;

    #[test]
    fn r_squared_gives_two_n_exactly() {
        for &grading in &[Grading::Uniform, Grading::Power(2.0), Grading::Power(3.5)] {
            for n in 2..12 {
                let g = Arc::new(RadialGrid::new(40, grading, n, 1.0).unwrap());
                let u = GridFunction::from_fn(g, |r| r * r).unwrap();
                let lap = radial_laplacian(&u, Evaluation::Full).unwrap();
                for v in lap.values() {
                    assert!((v - 2.0 * n as f64).abs() < 1e-9 * n as f64, "n={n} v={v}");
                }
            }
        }
    }

    #[test]
    fn origin_closure_matches_ghost_node_formula() {
        let g = Arc::new(RadialGrid::uniform(16, 3, 1.0).unwrap());
        let u = GridFunction::from_fn(g.clone(), |r| (3.0 * r).cos()).unwrap();
        let lap = radial_laplacian(&u, Evaluation::Full).unwrap();
        let h = g.node(1);
        let ghost = 2.0 * 3.0 * (u.values()[1] - u.values()[0]) / (h * h);
        assert!((lap.values()[0] - ghost).abs() < 1e-10 * ghost.abs());
    }

    #[test]
    fn constants_are_harmonic() {
        let g = Arc::new(RadialGrid::new(32, Grading::Power(2.0), 5, 2.0).unwrap());
        let u = GridFunction::from_fn(g, |_| 3.7).unwrap();
        let lap = radial_laplacian(&u, Evaluation::Full).unwrap();
        assert!(lap.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn singular_input_requires_interior_mode() {
        let g = Arc::new(RadialGrid::uniform(32, 10, 1.0).unwrap());
        let u = GridFunction::from_fn_singular(g, |r| -2.0 * r.ln()).unwrap();
        assert_eq!(radial_laplacian(&u, Evaluation::Full).unwrap_err(), Error::SingularAtOrigin);
        assert!(radial_laplacian(&u, Evaluation::InteriorOnly).is_ok());
    }

    #[test]
    fn second_order_on_uniform_meshes() {
        // u = cos(r): Δu = -cos r - (n-1) sin r / r
        let n = 4;
        let exact = |r: f64| -r.cos() - (n as f64 - 1.0) * if r == 0.0 { 1.0 } else { r.sin() / r };
        let err = |m: usize| {
            let g = Arc::new(RadialGrid::uniform(m, n, 1.0).unwrap());
            let u = GridFunction::from_fn(g.clone(), f64::cos).unwrap();
            let lap = radial_laplacian(&u, Evaluation::Full).unwrap();
            g.nodes()[..m]
                .iter()
                .zip(lap.values())
                .map(|(&r, v)| (v - exact(r)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(64), err(128), err(256));
        assert!((e1 / e2).log2() >= 1.9, "{e1} {e2}");
        assert!((e2 / e3).log2() >= 1.9, "{e2} {e3}");
    }
}
