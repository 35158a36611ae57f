use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::GridFunction;
use crate::report::EstimateReport;

use super::norms::radial_quantities;

/// Sequences and constants of the geometric-decay lemma.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayInput {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub l: f64,
    pub m_bound: f64,
}

impl DecayInput {
    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() || self.a.len() < 2 {
            return Err(invalid("a, b", "sequences must have equal length >= 2"));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("a, b", "entries must be finite and nonnegative"));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(invalid("L", "must be positive"));
        }
        if !(self.m_bound > 0.0 && self.m_bound.is_finite()) {
            return Err(invalid("M", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayOutcome {
    pub hyp_ok: bool,
    /// Root of `2^{-ε} = L^{1+ε}/(1+L)`.
    pub epsilon: f64,
    pub theta: f64,
    #[serde(rename = "Cc")]
    pub cc: f64,
    pub conclusion_ok: bool,
    /// The constant actually used: hypotheses with `L <= 1/2` also hold with
    /// `L = 1`, and the construction needs `L > 1/2`.
    pub l_used: f64,
}

/// Checks the hypotheses of the lemma on the given sequences and its
/// conclusion `b_j <= C M θ^j` with the constants of the proof:
/// `ε` solves `2^{-ε} = L^{1+ε}/(1+L)`, `θ = (2^{-ε})^{1/(1+ε)}` and
/// `C = L^{ε/(1+ε)}/θ`.
pub fn decay_check(d: &DecayInput) -> Result<DecayOutcome> {
    d.validate()?;
    let (a, b, m) = (&d.a, &d.b, d.m_bound);
    let l_hyp = d.l;
    let slack = |x: f64| 1e-12 * x.abs().max(1.0);
    let mut hyp_ok = a[0] <= m && b[0] <= m;
    for j in 1..a.len() {
        hyp_ok &= b[j] <= b[j - 1] + slack(b[j - 1]);
        hyp_ok &= a[j] + b[j] <= l_hyp * a[j - 1] + slack(l_hyp * a[j - 1]);
        if a[j] >= 0.5 * a[j - 1] {
            hyp_ok &= b[j] <= l_hyp * (b[j - 1] - b[j]) + slack(l_hyp * b[j - 1]);
        }
    }

    let l = if l_hyp > 0.5 { l_hyp } else { 1.0 };
    let epsilon = solve_epsilon(l);
    let theta = 2f64.powf(-epsilon).powf(1.0 / (1.0 + epsilon));
    let cc = l.powf(epsilon / (1.0 + epsilon)) / theta;
    let conclusion_ok = b
        .iter()
        .enumerate()
        .all(|(j, &bj)| bj <= cc * m * theta.powi(j as i32) * (1.0 + 1e-12));
    Ok(DecayOutcome {
        hyp_ok,
        epsilon,
        theta,
        cc,
        conclusion_ok,
        l_used: l,
    })
}

impl DecayOutcome {
    /// `max_j b_j / (M θ^j)` against the constant `C` of the conclusion.
    pub fn report(&self, d: &DecayInput) -> EstimateReport {
        let lhs = d
            .b
            .iter()
            .enumerate()
            .map(|(j, &bj)| bj / (d.m_bound * self.theta.powi(j as i32)))
            .fold(0.0, f64::max);
        EstimateReport::new("decay", lhs, self.cc)
            .with_param("L", d.l)
            .with_param("M", d.m_bound)
            .with_param("epsilon", self.epsilon)
            .with_param("theta", self.theta)
            .with_param("hyp_ok", if self.hyp_ok { 1.0 } else { 0.0 })
    }
}

/// Sequences `a_j = 𝒟(ρ_j)`, `b_j = ℛ(ρ_j)` on the dyadic radii
/// `ρ_j = R 2^{-j}` of a solution, with the smallest `L` for which the
/// hypotheses of the lemma hold (but at least 1, since `L` near 1/2 sends
/// `ε` to infinity) and `M = max(a_0, b_0)`.
pub fn dyadic_sequences(u: &GridFunction, levels: usize) -> Result<DecayInput> {
    if levels < 2 {
        return Err(invalid("levels", "need at least 2"));
    }
    let grid = u.grid();
    let radius = grid.radius();
    if radius * 0.5f64.powi(levels as i32 - 1) < 4.0 * grid.nodes()[u.first_valid() + 1] {
        return Err(invalid("levels", format!("{levels} dyadic levels do not fit on the grid")));
    }
    let mut a = Vec::with_capacity(levels);
    let mut b = Vec::with_capacity(levels);
    for j in 0..levels {
        let q = radial_quantities(u, radius * 0.5f64.powi(j as i32))?;
        a.push(q.d);
        b.push(q.rq);
    }
    let mut l = 1.0f64;
    for j in 1..levels {
        if a[j - 1] > 0.0 {
            l = l.max((a[j] + b[j]) / a[j - 1]);
        }
        if a[j] >= 0.5 * a[j - 1] && b[j] > 0.0 {
            l = l.max(b[j] / (b[j - 1] - b[j]));
        }
    }
    let m_bound = a[0].max(b[0]);
    if !(l.is_finite() && m_bound > 0.0) {
        return Err(invalid("u", "dyadic energies are degenerate"));
    }
    Ok(DecayInput {
        a,
        b,
        l: l * (1.0 + 1e-9),
        m_bound,
    })
}

/// Bisection for `g(ε) = ε log 2 + (1+ε) log L - log(1+L) = 0`, which has a
/// unique positive root when `L > 1/2` (`g(0) < 0`, `g` increasing).
fn solve_epsilon(l: f64) -> f64 {
    let g = |e: f64| e * 2f64.ln() + (1.0 + e) * l.ln() - (1.0 + l).ln();
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
