use crate::grid::GridFunction;
use crate::quadrature::power_integral_real;

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `|u|^p r^s` on the primal cells of a grid function.
///
/// Between two nodes `u` is interpolated as a power of `r` when both values
/// have the same sign and the cell does not touch the origin, and linearly
/// otherwise. The power law reproduces `r^{-k}` singularities exactly and is
/// second-order accurate for smooth `u` of one sign.
pub(crate) struct PowerIntegrand<'a> {
    nodes: &'a [f64],
    v: &'a [f64],
    p: f64,
    s: f64,
}

impl<'a> PowerIntegrand<'a> {
    pub(crate) fn new(u: &'a GridFunction, p: f64) -> Self {
        let grid = u.grid();
        Self {
            nodes: grid.nodes(),
            v: u.values(),
            p,
            s: grid.dimension() as f64 - 1.0,
        }
    }

    fn exponent(&self, c: usize) -> Option<f64> {
        let (r0, r1) = (self.nodes[c], self.nodes[c + 1]);
        let (u0, u1) = (self.v[c], self.v[c + 1]);
        if r0 > 0.0 && u0 * u1 > 0.0 {
            Some((u1 / u0).ln() / (r1 / r0).ln())
        } else {
            None
        }
    }

    /// Interpolated `|u(x)|^p` for `x` in cell `c`.
    pub(crate) fn value(&self, c: usize, x: f64) -> f64 {
        let (r0, r1) = (self.nodes[c], self.nodes[c + 1]);
        let (u0, u1) = (self.v[c], self.v[c + 1]);
        let u = match self.exponent(c) {
            Some(k) => u0.abs() * (x / r0).powf(k),
            None => {
                let t = (x - r0) / (r1 - r0);
                (u0 * (1.0 - t) + u1 * t).abs()
            }
        };
        u.powf(self.p)
    }

    /// `∫_a^b |u|^p r^s dr` for `[a, b]` inside cell `c`.
    pub(crate) fn integral(&self, c: usize, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self.exponent(c) {
            Some(k) => {
                let r0 = self.nodes[c];
                let e = k * self.p;
                self.v[c].abs().powf(self.p) * r0.powf(-e) * power_integral_real(a, b, e + self.s)
            }
            None => self.gauss(c, a, b, |_| 1.0),
        }
    }

    /// Four-point Gauss rule for `∫_a^b |u|^p w(r) r^s dr` inside cell `c`.
    pub(crate) fn gauss(&self, c: usize, a: f64, b: f64, w: impl Fn(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        GAUSS4
            .iter()
            .map(|&(t, g)| {
                let x = mid + half * t;
                g * self.value(c, x) * w(x) * x.powf(self.s)
            })
            .sum::<f64>()
            * half
    }
}

/// `∫_0^ρ |u|^p r^{n-1} dr`, starting at the first valid node.
pub(crate) fn radial_power_integral(u: &GridFunction, p: f64, rho: f64) -> f64 {
    let f = PowerIntegrand::new(u, p);
    let nodes = u.grid().nodes();
    let mut acc = 0.0;
    for c in u.first_valid()..u.grid().cells() {
        if nodes[c] >= rho {
            break;
        }
        acc += f.integral(c, nodes[c], nodes[c + 1].min(rho));
    }
    acc
}
