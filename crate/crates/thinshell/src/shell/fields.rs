use std::sync::Arc;

use ndarray::{s, Array2, Array3};

use super::geometry::ShellGeometry;
use crate::error::{config, Result};
use crate::sphere::{ScalarFieldS2, TangentFieldS2};

/// Scalar samples on radial nodes × sphere grid, shape (nr, nlat, nlon).
#[derive(Clone, Debug)]
pub struct ShellScalarField {
    geometry: Arc<ShellGeometry>,
    pub values: Array3<f64>,
}

/// Vector samples (u_r, u_λ, u_φ) on radial nodes × sphere grid.
#[derive(Clone, Debug)]
pub struct ShellVectorField {
    geometry: Arc<ShellGeometry>,
    pub r: Array3<f64>,
    pub lambda: Array3<f64>,
    pub phi: Array3<f64>,
}

pub(crate) fn same_geometry(a: &ShellGeometry, b: &ShellGeometry) -> Result<()> {
    if a != b {
        return config("fields live on different shell geometries");
    }
    Ok(())
}

impl ShellScalarField {
    pub fn new(geometry: Arc<ShellGeometry>, values: Array3<f64>) -> Result<Self> {
        if values.dim() != geometry.shape() {
            return config(format!("shape {:?} does not match geometry {:?}", values.dim(), geometry.shape()));
        }
        Ok(ShellScalarField { geometry, values })
    }

    pub fn zeros(geometry: Arc<ShellGeometry>) -> Self {
        let values = Array3::zeros(geometry.shape());
        ShellScalarField { geometry, values }
    }

    /// Samples f(r, λ, φ).
    pub fn sample(geometry: Arc<ShellGeometry>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let g = geometry.sphere_grid();
        let (r, la, lo) = (geometry.radial_nodes(), g.colatitudes(), g.longitudes());
        let values = Array3::from_shape_fn(geometry.shape(), |(k, i, j)| f(r[k], la[i], lo[j]));
        ShellScalarField { geometry, values }
    }

    pub fn geometry(&self) -> &Arc<ShellGeometry> {
        &self.geometry
    }

    pub fn level(&self, k: usize) -> ScalarFieldS2 {
        ScalarFieldS2::new(self.values.slice(s![k, .., ..]).to_owned())
    }

    pub fn set_level(&mut self, k: usize, f: &ScalarFieldS2) {
        self.values.slice_mut(s![k, .., ..]).assign(&f.values);
    }

    pub fn sub(&self, other: &Self) -> Self {
        ShellScalarField { geometry: self.geometry.clone(), values: &self.values - &other.values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ShellVectorField {
    pub fn new(geometry: Arc<ShellGeometry>, r: Array3<f64>, lambda: Array3<f64>, phi: Array3<f64>) -> Result<Self> {
        let sh = geometry.shape();
        if r.dim() != sh || lambda.dim() != sh || phi.dim() != sh {
            return config("vector component shapes do not match geometry");
        }
        Ok(ShellVectorField { geometry, r, lambda, phi })
    }

    pub fn zeros(geometry: Arc<ShellGeometry>) -> Self {
        let sh = geometry.shape();
        ShellVectorField { geometry, r: Array3::zeros(sh), lambda: Array3::zeros(sh), phi: Array3::zeros(sh) }
    }

    /// Field given in Cartesian components by f(y) evaluated at each node.
    pub fn from_cartesian(geometry: Arc<ShellGeometry>, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(geometry.clone());
        let g = geometry.sphere_grid();
        for (k, &r) in geometry.radial_nodes().iter().enumerate() {
            for (i, &la) in g.colatitudes().iter().enumerate() {
                for (j, &lo) in g.longitudes().iter().enumerate() {
                    let (er, el, ep) = spherical_frame(la, lo);
                    let y = [r * er[0], r * er[1], r * er[2]];
                    let v = f(y);
                    out.r[[k, i, j]] = dot3(&v, &er);
                    out.lambda[[k, i, j]] = dot3(&v, &el);
                    out.phi[[k, i, j]] = dot3(&v, &ep);
                }
            }
        }
        out
    }

    pub fn geometry(&self) -> &Arc<ShellGeometry> {
        &self.geometry
    }

    pub fn radial_level(&self, k: usize) -> ScalarFieldS2 {
        ScalarFieldS2::new(self.r.slice(s![k, .., ..]).to_owned())
    }

    pub fn tangent_level(&self, k: usize) -> TangentFieldS2 {
        TangentFieldS2 {
            lambda: self.lambda.slice(s![k, .., ..]).to_owned(),
            phi: self.phi.slice(s![k, .., ..]).to_owned(),
        }
    }

    pub fn set_level(&mut self, k: usize, r: &Array2<f64>, t: &TangentFieldS2) {
        self.r.slice_mut(s![k, .., ..]).assign(r);
        self.lambda.slice_mut(s![k, .., ..]).assign(&t.lambda);
        self.phi.slice_mut(s![k, .., ..]).assign(&t.phi);
    }

    pub fn add(&self, o: &Self) -> Self {
        ShellVectorField {
            geometry: self.geometry.clone(),
            r: &self.r + &o.r,
            lambda: &self.lambda + &o.lambda,
            phi: &self.phi + &o.phi,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ShellVectorField {
            geometry: self.geometry.clone(),
            r: &self.r - &o.r,
            lambda: &self.lambda - &o.lambda,
            phi: &self.phi - &o.phi,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        ShellVectorField {
            geometry: self.geometry.clone(),
            r: &self.r * a,
            lambda: &self.lambda * a,
            phi: &self.phi * a,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().chain(self.lambda.iter()).chain(self.phi.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Unit vectors (e_r, e_λ, e_φ) in Cartesian components.
pub fn spherical_frame(colat: f64, lon: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (sl, cl) = colat.sin_cos();
    let (sp, cp) = lon.sin_cos();
    ([sl * cp, sl * sp, cl], [cl * cp, cl * sp, -sl], [-sp, cp, 0.0])
}

#[inline]
pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
