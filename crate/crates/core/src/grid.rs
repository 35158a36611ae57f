//! Graded radial meshes on `[0, R]` and nodal functions living on them.
//!
//! The mesh carries the space dimension `n` so every integral and
//! differential operator built on it uses the measure `r^{n-1} dr`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{power_integral, sphere_area};

/// Node distribution on `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "exponent", rename_all = "lowercase")]
pub enum Grading {
    Uniform,
    /// Node `i` at `R (i/M)^g`, clustering towards the origin for `g > 1`.
    Power(f64),
}

impl Default for Grading {
    fn default() -> Self {
        Grading::Power(2.0)
    }
}

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    dimension: usize,
    radius: f64,
    grading: Grading,
    // cached geometry
    spacing: Vec<f64>,
    midpoints: Vec<f64>,
    dual_measure: Vec<f64>,
    stiffness: Vec<f64>,
    sphere_area: f64,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.radius == other.radius
            && self.nodes == other.nodes
    }
}

impl RadialGrid {
    /// Builds a mesh with `cells + 1` nodes.
    pub fn new(cells: usize, grading: Grading, dimension: usize, radius: f64) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        if dimension < 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension below 2 (n = {dimension})"
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!("radius must be positive, got {radius}")));
        }
        let exponent = match grading {
            Grading::Uniform => 1.0,
            Grading::Power(g) => {
                if !(1.0..=4.0).contains(&g) {
                    return Err(Error::InvalidGrid(format!(
                        "grading exponent must lie in [1, 4], got {g}"
                    )));
                }
                g
            }
        };
        let m = cells as f64;
        let nodes: Vec<f64> = (0..=cells)
            .map(|i| {
                if i == cells {
                    radius
                } else if exponent == 1.0 {
                    radius * i as f64 / m
                } else {
                    radius * (i as f64 / m).powf(exponent)
                }
            })
            .collect();
        Ok(Self::from_nodes_unchecked(nodes, dimension, radius, grading))
    }

    /// Uniform mesh shorthand.
    pub fn uniform(cells: usize, dimension: usize, radius: f64) -> Result<Self> {
        Self::new(cells, Grading::Uniform, dimension, radius)
    }

    fn from_nodes_unchecked(nodes: Vec<f64>, dimension: usize, radius: f64, grading: Grading) -> Self {
        let cells = nodes.len() - 1;
        let spacing: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let midpoints: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let k = dimension as i32 - 1;
        let stiffness: Vec<f64> = midpoints
            .iter()
            .zip(&spacing)
            .map(|(&mid, &h)| mid.powi(k) / h)
            .collect();
        let dual_measure: Vec<f64> = (0..=cells)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { midpoints[i - 1] };
                let hi = if i == cells { radius } else { midpoints[i] };
                power_integral(lo, hi, k)
            })
            .collect();
        RadialGrid {
            sphere_area: sphere_area(dimension),
            nodes,
            dimension,
            radius,
            grading,
            spacing,
            midpoints,
            dual_measure,
            stiffness,
        }
    }

    /// Same node pattern stretched to a new radius.
    pub fn rescaled(&self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidGrid(format!("radius must be positive, got {radius}")));
        }
        let factor = radius / self.radius;
        let mut nodes: Vec<f64> = self.nodes.iter().map(|r| r * factor).collect();
        *nodes.last_mut().unwrap() = radius;
        Ok(Self::from_nodes_unchecked(nodes, self.dimension, radius, self.grading))
    }

    /// Same node pattern with `2M` cells.
    pub fn refined(&self) -> Result<Self> {
        Self::new(2 * self.cells(), self.grading, self.dimension, self.radius)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// `h_i = r_{i+1} - r_i`, one entry per cell.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// Smallest cell width (the first cell on graded meshes).
    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `∫ r^{n-1} dr` over the dual cell `[r_{i-1/2}, r_{i+1/2}]` (clipped to `[0, R]`).
    pub fn dual_measure(&self) -> &[f64] {
        &self.dual_measure
    }

    /// Flux coefficient `r_{i+1/2}^{n-1} / h_i` of the conservative radial Laplacian.
    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    /// Area of the unit `(n-1)`-sphere.
    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// Index of the last node with `r_i <= r`.
    pub fn locate(&self, r: f64) -> usize {
        match self.nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }
}

/// Regularity of a nodal function at `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Regular,
    /// The origin node carries a placeholder and is skipped by every evaluation.
    Singular,
}

#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    origin: Origin,
}

impl GridFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, origin: Origin) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let first = match origin {
            Origin::Regular => 0,
            Origin::Singular => 1,
        };
        if let Some(i) = values[first..].iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite value at node {}",
                i + first
            )));
        }
        let mut values = values;
        if origin == Origin::Singular && !values[0].is_finite() {
            values[0] = 0.0;
        }
        Ok(Self { grid, values, origin })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            origin: Origin::Regular,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, Origin::Regular)
    }

    /// Samples `f` at every positive node; the origin is excised.
    pub fn from_fn_singular(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| if i == 0 { 0.0 } else { f(r) })
            .collect();
        Self::new(grid, values, Origin::Singular)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn is_singular(&self) -> bool {
        self.origin == Origin::Singular
    }

    /// First node index that takes part in pointwise evaluations.
    pub fn first_valid(&self) -> usize {
        match self.origin {
            Origin::Regular => 0,
            Origin::Singular => 1,
        }
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Copy with new values on the same grid and origin tag.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.origin)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values[self.first_valid()..]
            .iter()
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Largest nodal value (not absolute).
    pub fn max_value(&self) -> f64 {
        self.values[self.first_valid()..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-linear interpolation; `r` is clamped to the valid range.
    pub fn interpolate(&self, r: f64) -> f64 {
        let first = self.first_valid();
        let nodes = self.grid.nodes();
        let r = r.clamp(nodes[first], self.grid.radius());
        let i = self.grid.locate(r).max(first).min(self.grid.cells() - 1);
        let t = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Difference quotients `(u_{i+1} - u_i) / h_i`, one per cell; these
    /// approximate `u'` at the cell midpoints to second order.
    pub fn cell_slopes(&self) -> Vec<f64> {
        self.values
            .windows(2)
            .zip(self.grid.spacing())
            .map(|(w, h)| (w[1] - w[0]) / h)
            .collect()
    }

    /// Nodal derivative from the three-point nonuniform stencil. The origin
    /// reports 0 for regular functions (symmetry) and is left at 0 for
    /// singular ones; the last node uses the one-sided quadratic fit.
    pub fn derivative(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let u = &self.values;
        let last = self.grid.cells();
        let first = self.first_valid();
        let mut du = vec![0.0; u.len()];
        for i in 1..last {
            if i == first && self.is_singular() {
                // no left neighbour: forward quadratic fit
                du[i] = one_sided(nodes[i], nodes[i + 1], nodes[i + 2], u[i], u[i + 1], u[i + 2]);
                continue;
            }
            let hm = nodes[i] - nodes[i - 1];
            let hp = nodes[i + 1] - nodes[i];
            du[i] = (-hp / (hm * (hm + hp))) * u[i - 1]
                + ((hp - hm) / (hm * hp)) * u[i]
                + (hm / (hp * (hm + hp))) * u[i + 1];
        }
        du[last] = one_sided(
            nodes[last],
            nodes[last - 1],
            nodes[last - 2],
            u[last],
            u[last - 1],
            u[last - 2],
        );
        du
    }
}

/// Derivative at `x0` of the quadratic through three points.
pub(crate) fn one_sided(x0: f64, x1: f64, x2: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    let d1 = x1 - x0;
    let d2 = x2 - x0;
    // Lagrange basis derivatives at x0
    let c0 = -(d1 + d2) / (d1 * d2);
    let c1 = d2 / (d1 * (d2 - d1));
    let c2 = -d1 / (d2 * (d2 - d1));
    c0 * u0 + c1 * u1 + c2 * u2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_are_equispaced() {
        let g = RadialGrid::new(8, Grading::Uniform, 3, 1.0).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((r - i as f64 * 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn power_grading_places_nodes_quadratically() {
        let g = RadialGrid::new(8, Grading::Power(2.0), 3, 1.0).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            let x = i as f64 / 8.0;
            assert!((r - x * x).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RadialGrid::new(4, Grading::Uniform, 3, 1.0).is_err());
        let err = RadialGrid::new(8, Grading::Uniform, 1, 1.0).unwrap_err();
        assert!(err.to_string().contains("dimension below 2"));
        assert!(RadialGrid::new(8, Grading::Uniform, 3, 0.0).is_err());
        assert!(RadialGrid::new(8, Grading::Power(0.5), 3, 1.0).is_err());
        assert!(RadialGrid::new(8, Grading::Power(4.5), 3, 1.0).is_err());
    }

    #[test]
    fn dual_measures_sum_to_ball_volume_factor() {
        let g = RadialGrid::new(64, Grading::Power(2.0), 5, 1.5).unwrap();
        let total: f64 = g.dual_measure().iter().sum();
        assert!((total - 1.5f64.powi(5) / 5.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let g = Arc::new(RadialGrid::new(16, Grading::Power(2.0), 3, 1.0).unwrap());
        let u = GridFunction::from_fn(g.clone(), |r| 1.0 - r * r).unwrap();
        let du = u.derivative();
        assert_eq!(du[0], 0.0);
        for (i, r) in g.nodes().iter().enumerate().skip(1) {
            assert!((du[i] + 2.0 * r).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn singular_functions_skip_origin() {
        let g = Arc::new(RadialGrid::uniform(16, 10, 1.0).unwrap());
        let u = GridFunction::from_fn_singular(g, |r| -2.0 * r.ln()).unwrap();
        assert_eq!(u.first_valid(), 1);
        assert!((u.sup_norm() - 2.0 * 16f64.ln()).abs() < 1e-12);
    }
}
