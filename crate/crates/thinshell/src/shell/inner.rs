use ndarray::{Array3, Axis};

use super::averaging::check_pair;
use super::diff::curl;
use super::fields::{ShellScalarField, ShellVectorField};
use super::geometry::ShellGeometry;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellInnerKind {
    /// ∫_{Q_ε} u·v dy.
    L2Qeps,
    /// ∫_{Q_ε} r² u·v dy.
    WeightedR,
    /// ∫_{Q_ε} curl u · curl v dy.
    VEpsSeminorm,
}

/// ∫ r^{2+extra} (Σ_ij w_ij f) dr over the shell grid.
pub(crate) fn integrate(geom: &ShellGeometry, f: &Array3<f64>, extra_r_power: i32) -> f64 {
    let g = geom.sphere_grid();
    let mut total = 0.0;
    for (k, lvl) in f.axis_iter(Axis(0)).enumerate() {
        let mut s = 0.0;
        for (i, row) in lvl.outer_iter().enumerate() {
            s += g.weight(i) * row.sum();
        }
        total += geom.radial_weights_r2()[k] * geom.radial_nodes()[k].powi(extra_r_power) * s;
    }
    total
}

fn dot(u: &ShellVectorField, v: &ShellVectorField) -> Array3<f64> {
    &u.r * &v.r + &u.lambda * &v.lambda + &u.phi * &v.phi
}

pub fn l2_scalar(a: &ShellScalarField, b: &ShellScalarField) -> Result<f64> {
    check_pair(a.geometry(), b.geometry())?;
    Ok(integrate(a.geometry(), &(&a.values * &b.values), 0))
}

pub fn shell_inner(u: &ShellVectorField, v: &ShellVectorField, kind: ShellInnerKind) -> Result<f64> {
    check_pair(u.geometry(), v.geometry())?;
    let g = u.geometry();
    Ok(match kind {
        ShellInnerKind::L2Qeps => integrate(g, &dot(u, v), 0),
        ShellInnerKind::WeightedR => integrate(g, &dot(u, v), 2),
        ShellInnerKind::VEpsSeminorm => {
            let (cu, cv) = (curl(u)?, curl(v)?);
            integrate(g, &dot(&cu, &cv), 0)
        }
    })
}

pub fn shell_norm(u: &ShellVectorField, kind: ShellInnerKind) -> Result<f64> {
    Ok(shell_inner(u, u, kind)?.max(0.0).sqrt())
}

/// L^p(Q_ε) norm of |u| by the same quadrature.
pub fn lp_norm(u: &ShellVectorField, p: f64) -> f64 {
    let m = dot(u, u).mapv(|s| s.sqrt().powf(p));
    integrate(u.geometry(), &m, 0).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::sphere::SphereGrid;

    #[test]
    fn volume_and_lp_consistency() {
        let eps = 0.3;
        let g = Arc::new(ShellGeometry::new(eps, 6, Arc::new(SphereGrid::new(4))).unwrap());
        let e = ShellVectorField::from_cartesian(g.clone(), |_| [0.0, 0.0, 1.0]);
        let vol = 4.0 * std::f64::consts::PI * ((1.0 + eps).powi(3) - 1.0) / 3.0;
        let n = shell_norm(&e, ShellInnerKind::L2Qeps).unwrap();
        assert!((n * n / vol - 1.0).abs() < 1e-12);
        assert!((lp_norm(&e, 2.0) / n - 1.0).abs() < 1e-12);
        assert!((lp_norm(&e, 4.0) - vol.powf(0.25)).abs() < 1e-12);
        let one = ShellScalarField::sample(g, |_, _, _| 1.0);
        assert!((l2_scalar(&one, &one).unwrap() / vol - 1.0).abs() < 1e-12);
    }
}
