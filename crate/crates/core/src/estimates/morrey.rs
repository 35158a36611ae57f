use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::GridFunction;
use crate::report::EstimateReport;
use super::powers::PowerIntegrand;

pub const DEFAULT_CENTER_SAMPLES: usize = 33;
const RADII: usize = 64;
const CAP_TABLE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorreyParams {
    pub p: f64,
    pub beta: f64,
}

impl MorreyParams {
    pub fn new(p: f64, beta: f64, n: usize) -> Result<Self> {
        let mp = Self { p, beta };
        mp.validate(n)?;
        Ok(mp)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(invalid("p", format!("need finite p >= 1, got {}", self.p)));
        }
        if !(self.beta > 0.0 && self.beta <= n as f64) {
            return Err(invalid("beta", format!("need 0 < beta <= n = {n}, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Fraction of a sphere `S^{n-1}` lying in a polar cap of half-angle `θ`,
/// `∫_0^θ sin^{n-2} / ∫_0^π sin^{n-2}`.
///
/// Tabulated once by composite Simpson (two panels per table interval) and
/// read back by cubic Hermite interpolation with the exact derivative.
struct CapFraction {
    n: usize,
    table: Vec<f64>,
    step: f64,
    total: f64,
}

impl CapFraction {
    fn new(n: usize) -> Self {
        let k = (n - 2) as i32;
        let density = |t: f64| t.sin().powi(k);
        let step = PI / CAP_TABLE as f64;
        let mut table = vec![0.0; CAP_TABLE + 1];
        for j in 0..CAP_TABLE {
            let a = j as f64 * step;
            let piece = step / 6.0 * (density(a) + 4.0 * density(a + 0.5 * step) + density(a + step));
            table[j + 1] = table[j] + piece;
        }
        let total = table[CAP_TABLE];
        Self { n, table, step, total }
    }

    fn density(&self, t: f64) -> f64 {
        t.sin().powi((self.n - 2) as i32)
    }

    /// Fraction of the sphere of radius `s` about 0 inside the ball `B_r(y)`.
    fn inside(&self, s: f64, y: f64, r: f64) -> f64 {
        if y == 0.0 || s == 0.0 {
            return if s + y <= r { 1.0 } else { 0.0 };
        }
        let c = (s * s + y * y - r * r) / (2.0 * s * y);
        if c <= -1.0 {
            return 1.0;
        }
        if c >= 1.0 {
            return 0.0;
        }
        self.cap(c.acos())
    }

    fn cap(&self, theta: f64) -> f64 {
        let x = theta / self.step;
        let j = (x.floor() as usize).min(CAP_TABLE - 1);
        let t = x - j as f64;
        let h = self.step;
        let (y0, y1) = (self.table[j], self.table[j + 1]);
        let (d0, d1) = (self.density(j as f64 * h) * h, self.density((j + 1) as f64 * h) * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        (v / self.total).clamp(0.0, 1.0)
    }
}

/// Morrey norm `(sup_{y, r} r^{β-n} ∫_{B_R ∩ B_r(y)} |u|^p)^{1/p}`.
///
/// By symmetry the centers sweep one radius at `|y| = kR/cs`, `k = 0..=cs`;
/// radii are 64 geometric values from the first mesh spacing to `2R`,
/// together with `R`. Each ball integral is reduced to one dimension with
/// the fraction of the sphere `|x| = s` inside `B_r(y)`.
pub fn morrey_norm(u: &GridFunction, mp: MorreyParams, center_samples: usize) -> Result<f64> {
    Ok(morrey_functional(u, mp, center_samples)?.powf(1.0 / mp.p))
}

/// `‖u‖_{M^{p,β}} <= ((ω/n)(2R)^β)^{1/p} ‖u‖_∞`, from `|B_r| = ω r^n / n` on
/// the radii up to `2R`. Singular profiles have no such bound and are
/// rejected.
pub fn morrey_report(u: &GridFunction, mp: MorreyParams, center_samples: usize) -> Result<EstimateReport> {
    if u.is_singular() {
        return Err(invalid("u", "the sup bound needs a bounded profile"));
    }
    let grid = u.grid();
    let n = grid.dimension() as f64;
    let norm = morrey_norm(u, mp, center_samples)?;
    let scale = (grid.sphere_area() / n * (2.0 * grid.radius()).powf(mp.beta)).powf(1.0 / mp.p);
    Ok(EstimateReport::new("morrey", norm, scale * u.sup_norm())
        .with_param("p", mp.p)
        .with_param("beta", mp.beta)
        .with_param("center_samples", center_samples as f64))
}

/// The supremum inside [`morrey_norm`], before the `p`-th root.
pub fn morrey_functional(u: &GridFunction, mp: MorreyParams, center_samples: usize) -> Result<f64> {
    let grid = u.grid();
    let n = grid.dimension();
    mp.validate(n)?;
    if center_samples < 8 {
        return Err(invalid("center_samples", format!("need at least 8, got {center_samples}")));
    }
    let nodes = grid.nodes();
    let cells = grid.cells();
    let first = u.first_valid();
    let radius = grid.radius();
    let omega = grid.sphere_area();
    let f = PowerIntegrand::new(u, mp.p);

    let mut prefix = vec![0.0; cells + 1];
    for c in 0..cells {
        let piece = if c < first { 0.0 } else { f.integral(c, nodes[c], nodes[c + 1]) };
        prefix[c + 1] = prefix[c] + piece;
    }

    let cap = CapFraction::new(n);
    let h = nodes[1];
    let mut radii: Vec<f64> = (0..RADII)
        .map(|k| h * (2.0 * radius / h).powf(k as f64 / (RADII - 1) as f64))
        .collect();
    radii.push(radius);

    let mut best = 0.0f64;
    for k in 0..=center_samples {
        let y = radius * k as f64 / center_samples as f64;
        for &r in &radii {
            // cells inside B_r(y) satisfy s <= r - y, cells outside s >= r + y
            let (inner, outer) = (r - y, r + y);
            let full = if inner > 0.0 { nodes[1..].partition_point(|&b| b <= inner) } else { 0 };
            let mut total = prefix[full];
            for c in full.max(first)..cells {
                let (a, b) = (nodes[c], nodes[c + 1]);
                if a >= outer {
                    break;
                }
                if y == 0.0 {
                    total += f.integral(c, a, b.min(r));
                    continue;
                }
                // the cap fraction has kinks at r - y and r + y
                let mut cuts = vec![a];
                cuts.extend([inner, outer].into_iter().filter(|&x| x > a && x < b));
                cuts.push(b);
                for w in cuts.windows(2) {
                    total += f.gauss(c, w[0], w[1], |x| cap.inside(x, y, r));
                }
            }
            best = best.max(r.powf(mp.beta - n as f64) * omega * total);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::norms::{lebesgue_norm, Target};
    use crate::grid::{Grading, RadialGrid};
    use crate::quadrature::{ball_volume, simpson};
    use std::sync::Arc;

    #[test]
    fn cap_fraction_matches_simpson() {
        for n in [2, 3, 5, 11] {
            let cap = CapFraction::new(n);
            let k = (n - 2) as i32;
            let total = simpson(|t| t.sin().powi(k), 0.0, PI, 4096);
            for theta in [0.1, 0.7, 1.3, 2.9] {
                let direct = simpson(|t| t.sin().powi(k), 0.0, theta, 4096) / total;
                assert!((cap.cap(theta) - direct).abs() < 1e-9, "n={n} {theta}");
            }
        }
        // n = 3: the cap area fraction is (1 - cos θ)/2
        let cap = CapFraction::new(3);
        assert!((cap.cap(1.0) - (1.0 - 1f64.cos()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn full_dimension_weight_is_lebesgue() {
        let g = Arc::new(RadialGrid::new(128, Grading::Power(2.0), 4, 1.0).unwrap());
        let u = GridFunction::from_fn(g, |r| (1.0 - r * r) * (2.0 + r.cos())).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let m = morrey_norm(&u, MorreyParams::new(p, 4.0, 4).unwrap(), 8).unwrap();
            let l = lebesgue_norm(&u, p, 1.0, Target::Value).unwrap();
            assert!(((m - l) / l).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_function_sup_at_unit_radius() {
        let n = 5;
        let g = Arc::new(RadialGrid::new(256, Grading::Power(2.0), n, 1.0).unwrap());
        let u = GridFunction::from_fn(g, |_| 1.0).unwrap();
        for p in [1.0, 2.0] {
            let m = morrey_norm(&u, MorreyParams::new(p, 3.0, n).unwrap(), 16).unwrap();
            let exact = ball_volume(n, 1.0).powf(1.0 / p);
            assert!(((m - exact) / exact).abs() < 1e-3, "{m} {exact}");
        }
    }

    #[test]
    fn sup_bound_report() {
        let g = Arc::new(RadialGrid::new(256, Grading::Power(2.0), 5, 1.0).unwrap());
        let u = GridFunction::from_fn(g.clone(), |_| 1.0).unwrap();
        let rep = morrey_report(&u, MorreyParams::new(2.0, 3.0, 5).unwrap(), 16).unwrap();
        // sup sits at r = R where the bound has (2R)^β = 8 in place of 1
        assert!((rep.ratio - (1.0f64 / 8.0).sqrt()).abs() < 1e-3, "{}", rep.ratio);
        assert!(rep.holds);
        let s = GridFunction::from_fn_singular(g, |r| -r.ln()).unwrap();
        assert!(morrey_report(&s, MorreyParams::new(2.0, 3.0, 5).unwrap(), 16).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MorreyParams::new(0.5, 2.0, 3).is_err());
        assert!(MorreyParams::new(2.0, 3.5, 3).is_err());
        assert!(MorreyParams::new(2.0, 0.0, 3).is_err());
        let g = Arc::new(RadialGrid::uniform(16, 3, 1.0).unwrap());
        let u = GridFunction::zeros(g);
        assert!(morrey_norm(&u, MorreyParams::new(2.0, 2.0, 3).unwrap(), 4).is_err());
    }
}
