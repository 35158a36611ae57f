//! Closed-form ground truth: critical exponents, the explicit singular
//! solutions and the first Dirichlet eigenpair of the ball.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{GridFunction, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::report::finite_or_inf;
use crate::stability::{hardy_margin, principal_eigenvalue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    pub n: usize,
    /// Absent for `n = 10`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_n: Option<f64>,
    #[serde(serialize_with = "finite_or_inf")]
    pub p_n: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_star_power: Option<f64>,
    pub hardy_margin: f64,
}

/// Exponents for `n >= 10`; `p_10 = ∞` and `q_10` is undefined.
pub fn critical_exponents(n: usize) -> Result<CriticalExponents> {
    if n < 10 {
        return Err(invalid("n", format!("critical exponents need n >= 10, got {n}")));
    }
    let nf = n as f64;
    let margin = hardy_margin(n)?;
    if n == 10 {
        return Ok(CriticalExponents {
            n,
            q_n: None,
            p_n: f64::INFINITY,
            alpha_n: None,
            lambda_star_power: None,
            hardy_margin: margin,
        });
    }
    let s = nf - 2.0 * (nf - 1.0).sqrt();
    let q = s / (s - 4.0);
    let p = 2.0 * (s - 2.0) / (s - 4.0);
    let alpha = 2.0 / (q - 1.0);
    Ok(CriticalExponents {
        n,
        q_n: Some(q),
        p_n: p,
        alpha_n: Some(alpha),
        lambda_star_power: Some(alpha * (nf - 2.0 - alpha)),
        hardy_margin: margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `log(1/r²)`, solving `-Δu = 2(n-2) e^u`.
    LogExponential,
    /// `r^{-2/(q_n-1)} - 1`, solving `-Δu = λ⋆ (1+u)^{q_n}`.
    Power,
}

/// A closed-form singular solution with the `(λ, f)` it solves.
#[derive(Debug, Clone)]
pub struct SingularProfile {
    pub u: GridFunction,
    pub lambda: f64,
    pub nonlinearity: Nonlinearity,
}

pub fn singular_profile(kind: ProfileKind, grid: Arc<RadialGrid>) -> Result<SingularProfile> {
    let n = grid.dimension();
    match kind {
        ProfileKind::LogExponential => {
            if n < 3 {
                return Err(invalid("n", format!("log profile needs n >= 3, got {n}")));
            }
            let u = GridFunction::from_fn_singular(grid, |r| -2.0 * r.ln())?;
            Ok(SingularProfile {
                u,
                lambda: 2.0 * (n as f64 - 2.0),
                nonlinearity: Nonlinearity::Exponential,
            })
        }
        ProfileKind::Power => {
            if n < 11 {
                return Err(invalid("n", format!("power profile needs n >= 11, got {n}")));
            }
            let ce = critical_exponents(n)?;
            let (q, alpha) = (ce.q_n.unwrap_or_default(), ce.alpha_n.unwrap_or_default());
            let radius = grid.radius();
            // shifted so that u(R) = 0 on any radius; the pair is exact only for R = 1
            let offset = radius.powf(-alpha);
            let u = GridFunction::from_fn_singular(grid, |r| r.powf(-alpha) - offset)?;
            Ok(SingularProfile {
                u,
                lambda: ce.lambda_star_power.unwrap_or_default(),
                nonlinearity: Nonlinearity::power(q)?,
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallEigenpair {
    pub lambda1: f64,
    pub phi1: GridFunction,
}

/// First Dirichlet eigenpair of `-Δ` on `B_R`, `φ₁ > 0`, `‖φ₁‖₂ = 1`.
pub fn ball_lambda1(grid: Arc<RadialGrid>) -> Result<BallEigenpair> {
    let zero = GridFunction::zeros(grid);
    let cert = principal_eigenvalue(&zero, &Nonlinearity::Constant { c: 0.0 }, 0.0)?;
    Ok(BallEigenpair {
        lambda1: cert.mu1,
        phi1: cert.phi1,
    })
}
