//! Radial averages M_ε, M̂_ε, N̂_ε, M̃_ε, Ñ_ε, M̊_ε and retracts R_ε, R̊_ε.

use std::sync::Arc;

use ndarray::{Array2, Array3, Axis};

use super::fields::{same_geometry, ShellScalarField, ShellVectorField};
use super::geometry::ShellGeometry;
use crate::error::{config, usage, Result};
use crate::sphere::{ScalarFieldS2, SphereGrid, TangentFieldS2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AverageKind {
    MScalar,
    MHat,
    NHat,
    MTilde,
    NTilde,
    MRing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetractKind {
    RScalar,
    RRing,
}

#[derive(Clone, Debug)]
pub enum ShellField {
    Scalar(ShellScalarField),
    Vector(ShellVectorField),
}

#[derive(Clone, Debug)]
pub enum Averaged {
    Sphere(ScalarFieldS2),
    Tangent(TangentFieldS2),
    Shell(ShellField),
}

/// Sphere-side inputs of a retract. `Full` carries a radial component,
/// which R̊_ε only accepts when it vanishes identically.
#[derive(Clone, Debug)]
pub enum SphereInput {
    Scalar(ScalarFieldS2),
    Tangent(TangentFieldS2),
    Full { r: Array2<f64>, tangent: TangentFieldS2 },
}

fn check_grid(geom: &ShellGeometry, shape: (usize, usize)) -> Result<()> {
    let g: &SphereGrid = geom.sphere_grid();
    if g.shape() != shape {
        return config(format!("sphere field shape {shape:?} does not match shell grid {:?}", g.shape()));
    }
    Ok(())
}

/// (1/ε) Σ_k w_k r_k a_k over the radial axis.
fn radial_mean(geom: &ShellGeometry, a: &Array3<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.dim().1, a.dim().2));
    for (k, lvl) in a.axis_iter(Axis(0)).enumerate() {
        out.scaled_add(geom.radial_weights_r1()[k] / geom.eps(), &lvl);
    }
    out
}

fn lift(geom: &ShellGeometry, a: &Array2<f64>) -> Array3<f64> {
    let (nr, nlat, nlon) = geom.shape();
    let r = geom.radial_nodes();
    Array3::from_shape_fn((nr, nlat, nlon), |(k, i, j)| a[[i, j]] / r[k])
}

/// M_ε ψ = (1/ε)∫ r ψ(r x) dr.
pub fn m_scalar(psi: &ShellScalarField) -> ScalarFieldS2 {
    ScalarFieldS2::new(radial_mean(psi.geometry(), &psi.values))
}

/// R_ε φ(r x) = φ(x)/r.
pub fn r_scalar(phi: &ScalarFieldS2, geom: &Arc<ShellGeometry>) -> Result<ShellScalarField> {
    check_grid(geom, phi.shape())?;
    ShellScalarField::new(geom.clone(), lift(geom, &phi.values))
}

pub fn m_hat(psi: &ShellScalarField) -> ShellScalarField {
    let g = psi.geometry();
    let values = lift(g, &radial_mean(g, &psi.values));
    ShellScalarField::new(g.clone(), values).expect("shape preserved")
}

pub fn n_hat(psi: &ShellScalarField) -> ShellScalarField {
    psi.sub(&m_hat(psi))
}

/// M̊_ε u: tangential radial average, a tangent field on S².
pub fn m_ring(u: &ShellVectorField) -> TangentFieldS2 {
    let g = u.geometry();
    TangentFieldS2 { lambda: radial_mean(g, &u.lambda), phi: radial_mean(g, &u.phi) }
}

/// R̊_ε v = (0, v_λ/r, v_φ/r).
pub fn r_ring(v: &TangentFieldS2, geom: &Arc<ShellGeometry>) -> Result<ShellVectorField> {
    check_grid(geom, v.shape())?;
    ShellVectorField::new(
        geom.clone(),
        Array3::zeros(geom.shape()),
        lift(geom, &v.lambda),
        lift(geom, &v.phi),
    )
}

pub fn m_tilde(u: &ShellVectorField) -> ShellVectorField {
    r_ring(&m_ring(u), u.geometry()).expect("grid matches")
}

pub fn n_tilde(u: &ShellVectorField) -> ShellVectorField {
    u.sub(&m_tilde(u))
}

pub fn average(kind: AverageKind, field: &ShellField) -> Result<Averaged> {
    use AverageKind::*;
    match (kind, field) {
        (MScalar, ShellField::Scalar(p)) => Ok(Averaged::Sphere(m_scalar(p))),
        (MHat, ShellField::Scalar(p)) => Ok(Averaged::Shell(ShellField::Scalar(m_hat(p)))),
        (NHat, ShellField::Scalar(p)) => Ok(Averaged::Shell(ShellField::Scalar(n_hat(p)))),
        (MTilde, ShellField::Vector(u)) => Ok(Averaged::Shell(ShellField::Vector(m_tilde(u)))),
        (NTilde, ShellField::Vector(u)) => Ok(Averaged::Shell(ShellField::Vector(n_tilde(u)))),
        (MRing, ShellField::Vector(u)) => Ok(Averaged::Tangent(m_ring(u))),
        (k, _) => usage(format!("{k:?} does not accept this field type")),
    }
}

pub fn retract(kind: RetractKind, input: &SphereInput, geom: &Arc<ShellGeometry>) -> Result<ShellField> {
    match (kind, input) {
        (RetractKind::RScalar, SphereInput::Scalar(f)) => Ok(ShellField::Scalar(r_scalar(f, geom)?)),
        (RetractKind::RRing, SphereInput::Tangent(v)) => Ok(ShellField::Vector(r_ring(v, geom)?)),
        (RetractKind::RRing, SphereInput::Full { r, tangent }) => {
            if r.iter().any(|v| *v != 0.0) {
                return usage("R_RING requires a tangential field (radial component present)");
            }
            Ok(ShellField::Vector(r_ring(tangent, geom)?))
        }
        (k, _) => usage(format!("{k:?} does not accept this field type")),
    }
}

/// |(M_ε ψ, φ)_{S²} − (ψ, R_ε φ / ε)_{Q_ε}|.
pub fn dual_pair_check(psi: &ShellScalarField, phi: &ScalarFieldS2) -> Result<f64> {
    let geom = psi.geometry();
    let grid = geom.sphere_grid();
    check_grid(geom, phi.shape())?;
    let lhs = grid.inner_scalar(&m_scalar(psi), phi);
    let lifted = r_scalar(phi, geom)?;
    let rhs = super::inner::l2_scalar(psi, &lifted)? / geom.eps();
    Ok((lhs - rhs).abs())
}

pub(crate) fn check_pair(a: &ShellGeometry, b: &ShellGeometry) -> Result<()> {
    same_geometry(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(eps: f64) -> Arc<ShellGeometry> {
        Arc::new(ShellGeometry::new(eps, 6, Arc::new(SphereGrid::new(4))).unwrap())
    }

    #[test]
    fn averages_of_radial_profiles() {
        let g = geom(0.3);
        let one = m_scalar(&ShellScalarField::sample(g.clone(), |_, _, _| 1.0));
        let inv = m_scalar(&ShellScalarField::sample(g.clone(), |r, _, _| 1.0 / r));
        assert!(one.values.iter().all(|v| (v - 1.15).abs() < 1e-13));
        assert!(inv.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn fluctuation_has_zero_average() {
        let g = geom(0.2);
        let psi = ShellScalarField::sample(g, |r, la, lo| r.powi(3) * la.cos() + (r - 1.0) * lo.sin());
        assert!(m_scalar(&n_hat(&psi)).values.iter().all(|v| v.abs() < 1e-13));
        let twice = m_hat(&m_hat(&psi));
        assert!(twice.sub(&m_hat(&psi)).max_abs() < 1e-13);
    }

    #[test]
    fn dual_pairing_holds() {
        let g = geom(0.4);
        let psi = ShellScalarField::sample(g.clone(), |r, la, lo| r * r * la.sin() * lo.cos());
        let phi = g.sphere_grid().sample(|la, _| la.cos().powi(2));
        assert!(dual_pair_check(&psi, &phi).unwrap() < 1e-13);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let g = geom(0.1);
        let f = ShellField::Scalar(ShellScalarField::zeros(g));
        assert!(average(AverageKind::MRing, &f).is_err());
    }
}
