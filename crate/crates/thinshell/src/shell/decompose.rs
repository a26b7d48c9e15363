use super::averaging::{m_ring, m_tilde};
use super::diff::div;
use super::fields::ShellVectorField;
use crate::error::Result;
use crate::quadrature::interpolation_row;
use crate::sphere::TangentFieldS2;

/// Mean/fluctuation split u = M̃_ε u + Ñ_ε u with the sphere trace M̊_ε u.
#[derive(Clone, Debug)]
pub struct ShellDecomposition {
    pub mean: ShellVectorField,
    pub fluct: ShellVectorField,
    pub trace: TangentFieldS2,
}

pub fn decompose(u: &ShellVectorField) -> ShellDecomposition {
    let mean = m_tilde(u);
    let fluct = u.sub(&mean);
    ShellDecomposition { mean, fluct, trace: m_ring(u) }
}

/// Maximum |div u| over nodes and maximum |u·n| on both boundary spheres.
/// The normal component is extrapolated through r² u_r, which is
/// polynomial in r for potential fields.
pub fn h_eps_residuals(u: &ShellVectorField) -> Result<(f64, f64)> {
    let geom = u.geometry();
    let d = div(u)?.max_abs();
    let nodes = geom.radial_nodes();
    let mut normal: f64 = 0.0;
    for rb in [1.0, 1.0 + geom.eps()] {
        let row = interpolation_row(nodes, rb);
        let (_, nlat, nlon) = geom.shape();
        for i in 0..nlat {
            for j in 0..nlon {
                let v: f64 = (0..nodes.len()).map(|k| row[k] * nodes[k] * nodes[k] * u.r[[k, i, j]]).sum();
                normal = normal.max((v / (rb * rb)).abs());
            }
        }
    }
    Ok((d, normal))
}
