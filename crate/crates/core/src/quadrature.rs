//! The single radial quadrature shared by norms, energies and quadratic forms.
//!
//! Nodal quantities are integrated over dual cells `[r_{i-1/2}, r_{i+1/2}]`,
//! cell quantities (difference quotients) over primal cells. In both cases
//! the weight `r^k` is integrated exactly over the (clipped) interval, so
//! constants are integrated exactly on every ball `B_ρ`.

use statrs::function::gamma::gamma;

use crate::grid::RadialGrid;

/// Surface area of the unit sphere `S^{n-1} ⊂ R^n`, `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma(half)
}

/// Volume of the ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    sphere_area(n) * r.powi(n as i32) / n as f64
}

/// `∫_a^b r^k dr` for integer `k >= 0`.
pub fn power_integral(a: f64, b: f64, k: i32) -> f64 {
    let e = k + 1;
    (b.powi(e) - a.powi(e)) / e as f64
}

/// `∫_a^b r^s dr` for real `s`; requires `a > 0` when `s <= -1`.
pub fn power_integral_real(a: f64, b: f64, s: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if (s + 1.0).abs() < 1e-14 {
        (b / a).ln()
    } else {
        let e = s + 1.0;
        if a == 0.0 {
            b.powf(e) / e
        } else {
            (b.powf(e) - a.powf(e)) / e
        }
    }
}

/// Weighted sum `Σ g_i ∫_{dual_i ∩ [lo, hi]} r^s dr` over nodes `i >= first`.
pub fn nodal_integral(grid: &RadialGrid, g: &[f64], first: usize, lo: f64, hi: f64, s: f64) -> f64 {
    let nodes = grid.nodes();
    let mids = grid.midpoints();
    let last = grid.cells();
    let mut acc = 0.0;
    for i in first..=last {
        let a = if i == 0 { 0.0 } else { mids[i - 1] };
        let b = if i == last { nodes[last] } else { mids[i] };
        // a singular function contributes nothing inside its first dual half-cell
        let a = if i == first && first > 0 { nodes[i] } else { a };
        let (a, b) = (a.max(lo), b.min(hi));
        if b > a {
            acc += g[i] * power_integral_real(a, b, s);
        }
        if b >= hi {
            break;
        }
    }
    acc
}

/// Weighted sum `Σ g_c ∫_{cell_c ∩ [lo, hi]} r^s dr` over cells `c >= first`.
pub fn cell_integral(grid: &RadialGrid, g: &[f64], first: usize, lo: f64, hi: f64, s: f64) -> f64 {
    let nodes = grid.nodes();
    let mut acc = 0.0;
    for c in first..grid.cells() {
        let (a, b) = (nodes[c].max(lo), nodes[c + 1].min(hi));
        if b > a {
            acc += g[c] * power_integral_real(a, b, s);
        }
        if nodes[c + 1] >= hi {
            break;
        }
    }
    acc
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Eight-point Gauss-Legendre rule on `[a, b]`; exact for polynomials of
/// degree 15.
pub fn gauss_legendre8(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL8.iter()
        .map(|&(x, w)| w * (f(mid - half * x) + f(mid + half * x)))
        .sum::<f64>()
        * half
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for j in 1..panels {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    acc * h / 3.0
}
