//! TOML run configuration.

use std::path::PathBuf;

use gelfand_core::{Grading, Nonlinearity};
use serde::Deserialize;

pub const DEFAULT_CELLS: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Read(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("missing `{key}`: {reason}")]
    Missing { key: &'static str, reason: String },
}

fn bad(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Raw {
    n: Option<i64>,
    family: Option<String>,
    q: Option<f64>,
    slope: Option<f64>,
    intercept: Option<f64>,
    c: Option<f64>,
    #[serde(rename = "M")]
    m: Option<i64>,
    grading: Option<String>,
    radius: Option<f64>,
    tol: Option<f64>,
    lambda: Option<f64>,
    lambda_frac: Option<f64>,
    ds: Option<f64>,
    max_points: Option<i64>,
    sup_limit: Option<f64>,
    stability: Option<bool>,
    mode: Option<i64>,
    rho: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    p: Option<f64>,
    beta: Option<f64>,
    center_samples: Option<i64>,
    #[serde(rename = "A")]
    l1_a: Option<f64>,
    #[serde(rename = "B")]
    l1_b: Option<f64>,
    levels: Option<i64>,
    delta: Option<f64>,
    weight_a: Option<f64>,
    extremal_tol: Option<f64>,
    pohozaev_tol: Option<f64>,
    n_range: Option<Vec<i64>>,
    families: Option<Vec<String>>,
    out: Option<String>,
}

/// How `λ` is fixed for the single-solution subcommands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Absolute(f64),
    /// Fraction of the `λ⋆` found by continuation.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub family: Nonlinearity,
    pub cells: usize,
    pub grading: Grading,
    pub radius: f64,
    pub tol: f64,
    pub lambda: Option<LambdaChoice>,
    pub ds: f64,
    pub max_points: usize,
    pub sup_limit: f64,
    pub stability: bool,
    pub mode: usize,
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub p: Option<f64>,
    pub beta: Option<f64>,
    pub center_samples: usize,
    pub l1_a: Option<f64>,
    pub l1_b: Option<f64>,
    pub levels: usize,
    pub delta: f64,
    pub weight_a: Option<f64>,
    pub extremal_tol: f64,
    pub pohozaev_tol: f64,
    pub n_range: Option<(usize, usize)>,
    pub families: Vec<Nonlinearity>,
    pub out: Option<PathBuf>,
}

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

fn count(key: &'static str, v: i64, min: i64) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v as usize)
    } else {
        Err(bad(key, format!("must be at least {min}, got {v}")))
    }
}

fn dimension(key: &'static str, v: i64) -> Result<usize, ConfigError> {
    if v < 2 {
        return Err(bad(key, format!("dimension below 2 (got {v})")));
    }
    Ok(v as usize)
}

fn parse_grading(s: &str) -> Result<Grading, ConfigError> {
    let t = s.trim();
    if t == "uniform" {
        return Ok(Grading::Uniform);
    }
    if t == "power" {
        return Ok(Grading::Power(2.0));
    }
    let inner = t
        .strip_prefix("power(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| bad("grading", format!("expected \"uniform\" or \"power(g)\", got {s:?}")))?;
    let g: f64 = inner
        .trim()
        .parse()
        .map_err(|_| bad("grading", format!("not a number in {s:?}")))?;
    if !(g >= 1.0 && g.is_finite()) {
        return Err(bad("grading", format!("power grading needs g >= 1, got {g}")));
    }
    Ok(Grading::Power(g))
}

fn core_family(key: &'static str, r: gelfand_core::Result<Nonlinearity>) -> Result<Nonlinearity, ConfigError> {
    r.map_err(|e| bad(key, e.to_string()))
}

/// `exp`, `power(q)`, `affine(a,b)` or `constant(c)`.
pub fn parse_family_spec(s: &str) -> Result<Nonlinearity, ConfigError> {
    let t = s.trim();
    if t == "exp" {
        return Ok(Nonlinearity::Exponential);
    }
    let (name, rest) = t
        .split_once('(')
        .ok_or_else(|| bad("families", format!("unknown family {s:?}")))?;
    let args: Vec<f64> = rest
        .strip_suffix(')')
        .ok_or_else(|| bad("families", format!("unbalanced parentheses in {s:?}")))?
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("families", format!("not a number in {s:?}")))?;
    match (name.trim(), args.as_slice()) {
        ("power", [q]) => core_family("families", Nonlinearity::power(*q)),
        ("affine", [a, b]) => core_family("families", Nonlinearity::affine(*a, *b)),
        ("constant", [c]) => core_family("families", Nonlinearity::constant(*c)),
        _ => Err(bad("families", format!("unknown family {s:?}"))),
    }
}

fn family(raw: &Raw) -> Result<Nonlinearity, ConfigError> {
    let tag = raw.family.as_deref().unwrap_or("exp");
    let unused = |key: &'static str, present: bool| {
        if present {
            Err(bad(key, format!("not a parameter of family {tag:?}")))
        } else {
            Ok(())
        }
    };
    match tag {
        "exp" => {
            unused("q", raw.q.is_some())?;
            unused("slope", raw.slope.is_some())?;
            unused("c", raw.c.is_some())?;
            Ok(Nonlinearity::Exponential)
        }
        "power" => {
            let q = raw.q.ok_or(ConfigError::Missing {
                key: "q",
                reason: "family \"power\" needs an exponent".into(),
            })?;
            core_family("q", Nonlinearity::power(q))
        }
        "affine" => core_family(
            "slope",
            Nonlinearity::affine(raw.slope.unwrap_or(1.0), raw.intercept.unwrap_or(0.0)),
        ),
        "constant" => core_family("c", Nonlinearity::constant(raw.c.unwrap_or(1.0))),
        other => Err(bad(
            "family",
            format!("expected one of exp, power, affine, constant; got {other:?}"),
        )),
    }
}

/// Parses and validates a TOML configuration, filling in defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: Raw = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
    let n = raw.n.map(|v| dimension("n", v)).transpose()?;
    let family = family(&raw)?;
    let lambda = match (raw.lambda, raw.lambda_frac) {
        (Some(_), Some(_)) => return Err(bad("lambda_frac", "give either `lambda` or `lambda_frac`, not both")),
        (Some(l), None) if l >= 0.0 && l.is_finite() => Some(LambdaChoice::Absolute(l)),
        (Some(l), None) => return Err(bad("lambda", format!("must be nonnegative and finite, got {l}"))),
        (None, Some(f)) if f > 0.0 && f <= 1.0 => Some(LambdaChoice::Fraction(f)),
        (None, Some(f)) => return Err(bad("lambda_frac", format!("must lie in (0, 1], got {f}"))),
        (None, None) => None,
    };
    let n_range = match raw.n_range.as_deref() {
        None => None,
        Some([a, b]) => {
            let (a, b) = (dimension("n_range", *a)?, dimension("n_range", *b)?);
            if a > b {
                return Err(bad("n_range", format!("empty range {a}..{b}")));
            }
            Some((a, b))
        }
        Some(_) => return Err(bad("n_range", "expected [first, last]")),
    };
    let families = match &raw.families {
        Some(list) if list.is_empty() => return Err(bad("families", "empty list")),
        Some(list) => list.iter().map(|s| parse_family_spec(s)).collect::<Result<_, _>>()?,
        None => vec![family],
    };
    let alpha = raw.alpha.unwrap_or(0.1);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(bad("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let p = raw.p;
    if let Some(p) = p {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(bad("p", format!("need finite p >= 1, got {p}")));
        }
    }
    if let (Some(beta), Some(n)) = (raw.beta, n) {
        if !(beta > 0.0 && beta <= n as f64) {
            return Err(bad("beta", format!("need 0 < beta <= n = {n}, got {beta}")));
        }
    }
    let extremal_tol = raw.extremal_tol.unwrap_or(1e-6);
    if !(extremal_tol > 0.0 && extremal_tol < 1.0) {
        return Err(bad("extremal_tol", format!("must lie in (0, 1), got {extremal_tol}")));
    }
    if let Some(b) = raw.l1_b {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(bad("B", format!("must be nonnegative, got {b}")));
        }
    }
    Ok(RunConfig {
        n,
        family,
        cells: raw.m.map(|m| count("M", m, 8)).transpose()?.unwrap_or(DEFAULT_CELLS),
        grading: raw.grading.as_deref().map(parse_grading).transpose()?.unwrap_or_default(),
        radius: raw.radius.map(|r| positive("radius", r)).transpose()?.unwrap_or(1.0),
        tol: raw.tol.map(|t| positive("tol", t)).transpose()?.unwrap_or(DEFAULT_TOL),
        lambda,
        ds: raw.ds.map(|v| positive("ds", v)).transpose()?.unwrap_or(0.05),
        max_points: raw.max_points.map(|v| count("max_points", v, 2)).transpose()?.unwrap_or(2000),
        sup_limit: raw.sup_limit.map(|v| positive("sup_limit", v)).transpose()?.unwrap_or(1e3),
        stability: raw.stability.unwrap_or(true),
        mode: raw.mode.map(|v| count("mode", v, 0)).transpose()?.unwrap_or(0),
        rho: raw.rho.map(|v| positive("rho", v)).transpose()?.unwrap_or(0.5),
        alpha,
        gamma: raw.gamma.map(|v| positive("gamma", v)).transpose()?.unwrap_or(0.1),
        p,
        beta: raw.beta,
        center_samples: raw.center_samples.map(|v| count("center_samples", v, 8)).transpose()?.unwrap_or(33),
        l1_a: raw.l1_a.map(|v| positive("A", v)).transpose()?,
        l1_b: raw.l1_b,
        levels: raw.levels.map(|v| count("levels", v, 2)).transpose()?.unwrap_or(8),
        delta: raw.delta.map(|v| positive("delta", v)).transpose()?.unwrap_or(0.1),
        weight_a: raw.weight_a.map(|v| positive("weight_a", v)).transpose()?,
        extremal_tol,
        pohozaev_tol: raw.pohozaev_tol.map(|v| positive("pohozaev_tol", v)).transpose()?.unwrap_or(1e-4),
        n_range,
        families,
        out: raw.out.map(PathBuf::from),
    })
}

impl RunConfig {
    pub fn require_n(&self) -> Result<usize, ConfigError> {
        self.n.ok_or(ConfigError::Missing {
            key: "n",
            reason: "this subcommand needs a dimension".into(),
        })
    }

    pub fn require_lambda(&self) -> Result<LambdaChoice, ConfigError> {
        self.lambda.ok_or(ConfigError::Missing {
            key: "lambda",
            reason: "give `lambda` or `lambda_frac`".into(),
        })
    }

    /// Inclusive dimension range, falling back to `n..=n`.
    pub fn dimensions(&self) -> Result<(usize, usize), ConfigError> {
        match (self.n_range, self.n) {
            (Some(r), _) => Ok(r),
            (None, Some(n)) => Ok((n, n)),
            (None, None) => Err(ConfigError::Missing {
                key: "n_range",
                reason: "give `n_range` or `n`".into(),
            }),
        }
    }
}
