use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Result};

/// Position of (l, m) in a real coefficient vector, |m| ≤ l.
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[inline]
pub fn coeff_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

#[inline]
pub fn degree_of(index: usize) -> usize {
    (index as f64).sqrt().floor() as usize
}

/// Iterator over (index, l, m) for every coefficient up to `lmax`.
pub fn modes(lmax: usize) -> impl Iterator<Item = (usize, usize, i64)> {
    (0..=lmax).flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (lm_index(l, m), l, m)))
}

/// Real spherical-harmonic coefficients, triangular truncation `lmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralScalar {
    lmax: usize,
    coeffs: Vec<f64>,
}

impl SpectralScalar {
    pub fn zeros(lmax: usize) -> Self {
        SpectralScalar { lmax, coeffs: vec![0.0; coeff_len(lmax)] }
    }

    pub fn from_coeffs(lmax: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != coeff_len(lmax) {
            return config(format!(
                "expected {} coefficients for lmax {lmax}, got {}",
                coeff_len(lmax),
                coeffs.len()
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return config("non-finite spectral coefficient");
        }
        Ok(SpectralScalar { lmax, coeffs })
    }

    /// Single harmonic a·Y_lm.
    pub fn mode(lmax: usize, l: usize, m: i64, amplitude: f64) -> Self {
        let mut s = Self::zeros(lmax);
        s.coeffs[lm_index(l, m)] = amplitude;
        s
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }
    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.lmax {
            0.0
        } else {
            self.coeffs[lm_index(l, m)]
        }
    }

    /// Copy truncated or zero-padded to a new `lmax`.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        let n = coeff_len(lmax.min(self.lmax));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Coefficient-space inner product, equal to the L²(S²) product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Multiply each coefficient by a function of its degree.
    pub fn map_degree(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            *c *= f(degree_of(k));
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_degree(|_| a)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (y, x) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * x;
        }
    }
}

/// Scalar samples on a sphere grid, shape (nlat, nlon).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFieldS2 {
    pub values: Array2<f64>,
}

impl ScalarFieldS2 {
    pub fn new(values: Array2<f64>) -> Self {
        ScalarFieldS2 { values }
    }
    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }
}

/// Tangent field (u_λ, u_φ) on a sphere grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentFieldS2 {
    pub lambda: Array2<f64>,
    pub phi: Array2<f64>,
}

impl TangentFieldS2 {
    pub fn zeros(nlat: usize, nlon: usize) -> Self {
        TangentFieldS2 { lambda: Array2::zeros((nlat, nlon)), phi: Array2::zeros((nlat, nlon)) }
    }
    pub fn shape(&self) -> (usize, usize) {
        self.lambda.dim()
    }
    pub fn add(&self, other: &Self) -> Self {
        TangentFieldS2 { lambda: &self.lambda + &other.lambda, phi: &self.phi + &other.phi }
    }
    pub fn sub(&self, other: &Self) -> Self {
        TangentFieldS2 { lambda: &self.lambda - &other.lambda, phi: &self.phi - &other.phi }
    }
    pub fn scaled(&self, a: f64) -> Self {
        TangentFieldS2 { lambda: &self.lambda * a, phi: &self.phi * a }
    }
    pub fn max_abs(&self) -> f64 {
        self.lambda.iter().chain(self.phi.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Divergence-free tangent field u = curl′ψ stored by its stream
/// coefficients; the degree-zero coefficient is always zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivFreeSpectral {
    stream: SpectralScalar,
}

impl DivFreeSpectral {
    pub fn zeros(lmax: usize) -> Self {
        DivFreeSpectral { stream: SpectralScalar::zeros(lmax) }
    }

    /// Wrap a stream function. A constant stream generates no velocity, so
    /// the degree-zero coefficient is discarded.
    pub fn from_stream(mut stream: SpectralScalar) -> Self {
        stream.coeffs[0] = 0.0;
        DivFreeSpectral { stream }
    }

    /// u = a·curl′Y_lm, l ≥ 1.
    pub fn mode(lmax: usize, l: usize, m: i64, amplitude: f64) -> Result<Self> {
        if l == 0 || l > lmax || m.unsigned_abs() as usize > l {
            return usage(format!("invalid stream mode ({l}, {m}) for lmax {lmax}"));
        }
        Ok(DivFreeSpectral { stream: SpectralScalar::mode(lmax, l, m, amplitude) })
    }

    pub fn stream(&self) -> &SpectralScalar {
        &self.stream
    }
    pub fn stream_mut(&mut self) -> &mut [f64] {
        self.stream.coeffs_mut()
    }
    pub fn lmax(&self) -> usize {
        self.stream.lmax
    }
    pub fn coeffs(&self) -> &[f64] {
        self.stream.coeffs()
    }

    /// Weighted stream product Σ w(l) ψ_lm χ_lm over l ≥ 1.
    fn weighted(&self, other: &Self, w: impl Fn(f64) -> f64) -> f64 {
        self.stream
            .coeffs
            .iter()
            .zip(&other.stream.coeffs)
            .enumerate()
            .skip(1)
            .map(|(k, (a, b))| {
                let l = degree_of(k) as f64;
                w(l * (l + 1.0)) * a * b
            })
            .sum()
    }

    pub fn inner(&self, other: &Self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2S2 => self.weighted(other, |ll| ll),
            NormKind::VSeminorm => self.weighted(other, |ll| ll * ll),
            NormKind::DaInv => self.weighted(other, |ll| 1.0 / ll),
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        self.inner(self, kind).sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.stream.clone();
        s.axpy(1.0, &other.stream);
        DivFreeSpectral { stream: s }
    }
    pub fn sub(&self, other: &Self) -> Self {
        let mut s = self.stream.clone();
        s.axpy(-1.0, &other.stream);
        DivFreeSpectral { stream: s }
    }
    pub fn scaled(&self, a: f64) -> Self {
        DivFreeSpectral { stream: self.stream.scaled(a) }
    }
    pub fn resized(&self, lmax: usize) -> Self {
        DivFreeSpectral { stream: self.stream.resized(lmax) }
    }
    /// Stokes operator A: multiply stream coefficients by l(l+1).
    pub fn stokes(&self) -> Self {
        DivFreeSpectral { stream: self.stream.map_degree(|l| (l * (l + 1)) as f64) }
    }
    pub fn is_finite(&self) -> bool {
        self.stream.coeffs.iter().all(|c| c.is_finite())
    }
}

/// One term a·curl′Y_lm of a stream expansion, written `[l, m, a]` in
/// configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, i64, f64)", into = "(usize, i64, f64)")]
pub struct StreamMode {
    pub l: usize,
    pub m: i64,
    pub amplitude: f64,
}

impl StreamMode {
    pub fn new(l: usize, m: i64, amplitude: f64) -> Self {
        StreamMode { l, m, amplitude }
    }
}

impl From<(usize, i64, f64)> for StreamMode {
    fn from((l, m, amplitude): (usize, i64, f64)) -> Self {
        StreamMode { l, m, amplitude }
    }
}

impl From<StreamMode> for (usize, i64, f64) {
    fn from(s: StreamMode) -> Self {
        (s.l, s.m, s.amplitude)
    }
}

impl DivFreeSpectral {
    /// Sum of the listed modes; repeated modes accumulate.
    pub fn from_modes(lmax: usize, modes: &[StreamMode]) -> Result<Self> {
        let mut u = DivFreeSpectral::zeros(lmax);
        for s in modes {
            u = u.add(&DivFreeSpectral::mode(lmax, s.l, s.m, s.amplitude)?);
        }
        Ok(u)
    }
}

/// Norms on divergence-free sphere fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// ‖u‖ in L²(S²).
    L2S2,
    /// ‖curl′u‖ in L²(S²).
    VSeminorm,
    /// ‖A⁻¹u‖, weights 1/(l(l+1)) on squared stream coefficients.
    DaInv,
}

/// Norm of the field generated by a raw stream function. Unlike
/// [`DivFreeSpectral::norm`] this sees the degree-zero coefficient, which
/// has no preimage under A.
pub fn stream_norm(stream: &SpectralScalar, kind: NormKind) -> Result<f64> {
    if kind == NormKind::DaInv && stream.get(0, 0) != 0.0 {
        return usage("D(A^-1) norm requested on a stream with an l = 0 component");
    }
    Ok(DivFreeSpectral { stream: stream.clone() }.norm(kind))
}
