use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Right-hand sides `f` of `-Δu = λ f(u)`.
///
/// Every built-in family is nonnegative, nondecreasing and convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `f(t) = e^t`
    Exponential,
    /// `f(t) = (1 + t)^q` for `t >= -1`, zero below.
    Power { q: f64 },
    /// `f(t) = max(A t - B, 0)` with `A > 0`.
    Affine { a: f64, b: f64 },
    /// `f(t) = c >= 0`
    Constant { c: f64 },
}

impl Nonlinearity {
    pub fn power(q: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(invalid("q", format!("power exponent must exceed 1, got {q}")));
        }
        Ok(Nonlinearity::Power { q })
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("A", format!("affine slope must be positive, got {a}")));
        }
        Ok(Nonlinearity::Affine { a, b })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(invalid("c", format!("constant must be nonnegative, got {c}")));
        }
        Ok(Nonlinearity::Constant { c })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Exponential => Ok(()),
            Nonlinearity::Power { q } => Self::power(q).map(|_| ()),
            Nonlinearity::Affine { a, b } => Self::affine(a, b).map(|_| ()),
            Nonlinearity::Constant { c } => Self::constant(c).map(|_| ()),
        }
    }

    /// Short tag used in file names and CSV rows.
    pub fn tag(&self) -> &'static str {
        match self {
            Nonlinearity::Exponential => "exp",
            Nonlinearity::Power { .. } => "power",
            Nonlinearity::Affine { .. } => "affine",
            Nonlinearity::Constant { .. } => "constant",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Exponential => t.exp(),
            Nonlinearity::Power { q } => (1.0 + t).max(0.0).powf(q),
            Nonlinearity::Affine { a, b } => (a * t - b).max(0.0),
            Nonlinearity::Constant { c } => c,
        }
    }

    /// Left derivative `f'_-(t)`; at the affine kink this is the left limit 0.
    pub fn deriv_left(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Exponential => t.exp(),
            Nonlinearity::Power { q } => {
                let base = 1.0 + t;
                if base <= 0.0 {
                    0.0
                } else {
                    q * base.powf(q - 1.0)
                }
            }
            Nonlinearity::Affine { a, b } => {
                if a * t > b {
                    a
                } else {
                    0.0
                }
            }
            Nonlinearity::Constant { .. } => 0.0,
        }
    }

    /// Antiderivative `F(t) = ∫_0^t f`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Exponential => t.exp_m1(),
            Nonlinearity::Power { q } => {
                let base = (1.0 + t).max(0.0);
                (base.powf(q + 1.0) - 1.0) / (q + 1.0)
            }
            Nonlinearity::Affine { a, b } => {
                let kink = b / a;
                let g = |s: f64| if s > kink { 0.5 * a * (s - kink).powi(2) } else { 0.0 };
                g(t) - g(0.0)
            }
            Nonlinearity::Constant { c } => c * t,
        }
    }
}
