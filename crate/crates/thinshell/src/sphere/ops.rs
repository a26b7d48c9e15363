//! Tangential differential operators on S², applied spectrally.

use super::fields::{DivFreeSpectral, ScalarFieldS2, SpectralScalar, TangentFieldS2};
use super::grid::SphereGrid;
use crate::error::{usage, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SphereOperator {
    /// ∇′ψ = (∂_λψ, ∂_φψ / sin λ).
    Grad,
    /// div′v.
    Div,
    /// curl′ψ = (∂_φψ / sin λ, −∂_λψ).
    CurlStreamToVec,
    /// curl′v = (∂_λ(sin λ v_φ) − ∂_φ v_λ) / sin λ.
    CurlVecToScalar,
    /// Δ′ψ.
    LaplaceBeltrami,
    /// Hodge Laplacian on tangent fields.
    LaplaceDeRham,
}

/// Operator inputs and outputs.
#[derive(Clone, Debug, PartialEq)]
pub enum SphereField {
    Spectral(SpectralScalar),
    Scalar(ScalarFieldS2),
    Tangent(TangentFieldS2),
}

impl SphereField {
    pub fn into_tangent(self) -> Option<TangentFieldS2> {
        match self {
            SphereField::Tangent(t) => Some(t),
            _ => None,
        }
    }
    pub fn into_spectral(self) -> Option<SpectralScalar> {
        match self {
            SphereField::Spectral(s) => Some(s),
            _ => None,
        }
    }
}

fn ll(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

/// Apply `kind` to `input`. Scalar results are returned as spectral
/// coefficients; vector results as gridded tangent fields.
pub fn apply_operator(grid: &SphereGrid, kind: SphereOperator, input: &SphereField) -> Result<SphereField> {
    use SphereOperator::*;
    let scalar = |f: &SphereField| -> Result<SpectralScalar> {
        match f {
            SphereField::Spectral(s) => Ok(s.clone()),
            SphereField::Scalar(g) => grid.analyze(g),
            SphereField::Tangent(_) => usage(format!("{kind:?} expects a scalar input")),
        }
    };
    let tangent = |f: &SphereField| -> Result<TangentFieldS2> {
        match f {
            SphereField::Tangent(t) => Ok(t.clone()),
            _ => usage(format!("{kind:?} expects a tangent field input")),
        }
    };
    Ok(match kind {
        Grad => SphereField::Tangent(grad(grid, &scalar(input)?)?),
        CurlStreamToVec => SphereField::Tangent(curl_stream(grid, &scalar(input)?)?),
        LaplaceBeltrami => SphereField::Spectral(laplace_beltrami(&scalar(input)?)),
        Div => SphereField::Spectral(div(grid, &tangent(input)?)?),
        CurlVecToScalar => SphereField::Spectral(curl_scalar(grid, &tangent(input)?)?),
        LaplaceDeRham => SphereField::Tangent(laplace_de_rham(grid, &tangent(input)?)?),
    })
}

pub fn grad(grid: &SphereGrid, psi: &SpectralScalar) -> Result<TangentFieldS2> {
    grid.synthesize_vector(psi, &SpectralScalar::zeros(psi.lmax()))
}

pub fn curl_stream(grid: &SphereGrid, psi: &SpectralScalar) -> Result<TangentFieldS2> {
    grid.synthesize_vector(&SpectralScalar::zeros(psi.lmax()), psi)
}

pub fn laplace_beltrami(psi: &SpectralScalar) -> SpectralScalar {
    psi.map_degree(|l| -ll(l))
}

/// (div′v)_lm = −(v, ∇′Y_lm).
pub fn div(grid: &SphereGrid, v: &TangentFieldS2) -> Result<SpectralScalar> {
    Ok(grid.vector_projections(v, grid.lmax())?.0.scaled(-1.0))
}

/// (curl′v)_lm = (v, curl′Y_lm).
pub fn curl_scalar(grid: &SphereGrid, v: &TangentFieldS2) -> Result<SpectralScalar> {
    Ok(grid.vector_projections(v, grid.lmax())?.1)
}

pub fn laplace_de_rham(grid: &SphereGrid, v: &TangentFieldS2) -> Result<TangentFieldS2> {
    let (s, t) = grid.analyze_vector(v, grid.lmax())?;
    grid.synthesize_vector(&laplace_beltrami(&s), &laplace_beltrami(&t))
}

/// Orthogonal projection onto divergence-free fields.
pub fn leray_project(grid: &SphereGrid, v: &TangentFieldS2) -> Result<DivFreeSpectral> {
    let (_, t) = grid.analyze_vector(v, grid.lmax())?;
    Ok(DivFreeSpectral::from_stream(t))
}

/// Velocity of a divergence-free field on the grid.
pub fn velocity(grid: &SphereGrid, u: &DivFreeSpectral) -> Result<TangentFieldS2> {
    curl_stream(grid, u.stream())
}

/// Scalar vorticity curl′u = l(l+1)ψ.
pub fn vorticity(u: &DivFreeSpectral) -> SpectralScalar {
    u.stream().map_degree(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::fields::coeff_len;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(lmax: usize, seed: u64) -> SpectralScalar {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..coeff_len(lmax)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralScalar::from_coeffs(lmax, c).unwrap()
    }

    #[test]
    fn div_of_curl_vanishes() {
        let g = SphereGrid::new(12);
        let psi = random(12, 5);
        let v = curl_stream(&g, &psi).unwrap();
        let d = div(&g, &v).unwrap();
        assert!(d.norm() < 1e-10 * psi.norm());
        let c = curl_scalar(&g, &grad(&g, &psi).unwrap()).unwrap();
        assert!(c.norm() < 1e-10 * psi.norm());
    }

    #[test]
    fn kind_mismatch_is_usage_error() {
        let g = SphereGrid::new(4);
        let s = SphereField::Spectral(SpectralScalar::zeros(4));
        assert!(apply_operator(&g, SphereOperator::Div, &s).is_err());
        let t = SphereField::Tangent(TangentFieldS2::zeros(g.nlat(), g.nlon()));
        assert!(apply_operator(&g, SphereOperator::Grad, &t).is_err());
    }

    #[test]
    fn leray_removes_gradients() {
        let g = SphereGrid::new(10);
        let a = random(10, 1);
        let b = random(10, 2);
        let v = grad(&g, &a).unwrap().add(&curl_stream(&g, &b).unwrap());
        let u = leray_project(&g, &v).unwrap();
        let mut bb = b.clone();
        bb.coeffs_mut()[0] = 0.0;
        let err = u.stream().coeffs().iter().zip(bb.coeffs()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 1e-10);
    }
}
