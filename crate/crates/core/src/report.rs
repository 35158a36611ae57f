use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

/// Evaluated sides of one inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    #[serde(serialize_with = "finite_or_inf")]
    pub lhs: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub rhs: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub ratio: f64,
    pub holds: bool,
    pub params: BTreeMap<String, f64>,
}

const HOLD_SLACK: f64 = 1e-9;

impl EstimateReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 && rhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            holds: lhs <= rhs * (1.0 + HOLD_SLACK),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"` or `"nan"`.
pub fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}
