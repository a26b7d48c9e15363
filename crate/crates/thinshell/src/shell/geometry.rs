use std::sync::Arc;

use crate::error::{config, Result};
use crate::quadrature::{differentiation_matrix, gauss_legendre, interpolation_row};
use crate::sphere::SphereGrid;

/// Shell Q_ε = {1 ≤ |y| ≤ 1+ε} discretized as Gauss–Legendre radial nodes
/// times a sphere grid.
#[derive(Clone, Debug)]
pub struct ShellGeometry {
    eps: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    weights_r1: Vec<f64>,
    weights_r2: Vec<f64>,
    diff: Vec<f64>,
    grid: Arc<SphereGrid>,
}

impl PartialEq for ShellGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.eps == other.eps && self.nodes.len() == other.nodes.len() && *self.grid == *other.grid
    }
}

impl ShellGeometry {
    pub fn new(eps: f64, nr: usize, grid: Arc<SphereGrid>) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return config(format!("shell thickness must lie in (0, 1/2), got {eps}"));
        }
        if nr == 0 {
            return config("at least one radial node is required");
        }
        let (x, w) = gauss_legendre(nr);
        let h = 0.5 * eps;
        let nodes: Vec<f64> = x.iter().map(|t| 1.0 + h * (t + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|w| h * w).collect();
        let weights_r1 = nodes.iter().zip(&weights).map(|(r, w)| w * r).collect();
        let weights_r2 = nodes.iter().zip(&weights).map(|(r, w)| w * r * r).collect();
        let diff = differentiation_matrix(&nodes);
        Ok(ShellGeometry { eps, nodes, weights, weights_r1, weights_r2, diff, grid })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn nr(&self) -> usize {
        self.nodes.len()
    }
    pub fn radial_nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// Weights for ∫ · dr over [1, 1+ε].
    pub fn radial_weights(&self) -> &[f64] {
        &self.weights
    }
    /// Weights for ∫ · r dr.
    pub fn radial_weights_r1(&self) -> &[f64] {
        &self.weights_r1
    }
    /// Weights for ∫ · r² dr.
    pub fn radial_weights_r2(&self) -> &[f64] {
        &self.weights_r2
    }
    pub fn sphere_grid(&self) -> &SphereGrid {
        &self.grid
    }
    pub fn sphere_grid_arc(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nr(), self.grid.nlat(), self.grid.nlon())
    }
    /// Row-major nr×nr radial differentiation matrix.
    pub fn diff_matrix(&self) -> &[f64] {
        &self.diff
    }

    /// Apply d/dr to nodal values.
    pub fn radial_derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.nr();
        (0..n).map(|i| (0..n).map(|j| self.diff[i * n + j] * f[j]).sum()).collect()
    }

    /// Interpolation row evaluating the nodal polynomial at radius r.
    pub fn interpolation_row(&self, r: f64) -> Vec<f64> {
        interpolation_row(&self.nodes, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_weight_sums() {
        let g = Arc::new(SphereGrid::new(2));
        for &eps in &[0.4, 0.2, 0.1, 0.05] {
            let s = ShellGeometry::new(eps, 8, g.clone()).unwrap();
            let r1: f64 = s.radial_weights_r1().iter().sum();
            let r2: f64 = s.radial_weights_r2().iter().sum();
            let e1 = ((1.0 + eps).powi(2) - 1.0) / 2.0;
            let e2 = ((1.0 + eps).powi(3) - 1.0) / 3.0;
            assert!((r1 / e1 - 1.0).abs() < 1e-12);
            assert!((r2 / e2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thickness_bounds() {
        let g = Arc::new(SphereGrid::new(2));
        assert!(ShellGeometry::new(0.5, 4, g.clone()).is_err());
        assert!(ShellGeometry::new(0.0, 4, g.clone()).is_err());
        assert!(ShellGeometry::new(0.3, 0, g).is_err());
    }
}
