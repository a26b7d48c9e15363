//! Differential operators on Q_ε: radial direction by the Gauss–Legendre
//! differentiation matrix, tangential directions spectrally per level.
//!
//! A vector field is split per level as u = R Y e_r + S ∇′Y + T curl′Y.

use ndarray::Array2;

use super::averaging::ShellField;
use super::fields::{ShellScalarField, ShellVectorField};
use super::geometry::ShellGeometry;
use crate::error::{config, usage, Result};
use crate::sphere::{degree_of, SpectralScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffKind {
    Curl3,
    Div3,
    Laplacian3,
    Grad3,
}

type Levels = Vec<SpectralScalar>;

fn check_nr(geom: &ShellGeometry) -> Result<()> {
    if geom.nr() < 3 {
        return config(format!("radial differentiation needs at least 3 nodes, geometry has {}", geom.nr()));
    }
    Ok(())
}

pub(crate) fn scalar_levels(f: &ShellScalarField) -> Result<Levels> {
    let g = f.geometry().sphere_grid();
    (0..f.geometry().nr()).map(|k| g.analyze(&f.level(k))).collect()
}

pub(crate) fn vector_levels(u: &ShellVectorField) -> Result<(Levels, Levels, Levels)> {
    let g = u.geometry().sphere_grid();
    let (mut r, mut s, mut t) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..u.geometry().nr() {
        r.push(g.analyze(&u.radial_level(k))?);
        let (a, b) = g.analyze_vector(&u.tangent_level(k), g.lmax())?;
        s.push(a);
        t.push(b);
    }
    Ok((r, s, t))
}

pub(crate) fn synth_scalar(geom: &std::sync::Arc<ShellGeometry>, f: &Levels) -> Result<ShellScalarField> {
    let g = geom.sphere_grid();
    let mut out = ShellScalarField::zeros(geom.clone());
    for (k, c) in f.iter().enumerate() {
        out.set_level(k, &g.synthesize(c)?);
    }
    Ok(out)
}

pub(crate) fn synth_vector(
    geom: &std::sync::Arc<ShellGeometry>,
    r: &Levels,
    s: &Levels,
    t: &Levels,
) -> Result<ShellVectorField> {
    let g = geom.sphere_grid();
    let mut out = ShellVectorField::zeros(geom.clone());
    for k in 0..geom.nr() {
        let rr: Array2<f64> = g.synthesize(&r[k])?.values;
        out.set_level(k, &rr, &g.synthesize_vector(&s[k], &t[k])?);
    }
    Ok(out)
}

pub(crate) fn d_dr(geom: &ShellGeometry, f: &Levels) -> Levels {
    let n = geom.nr();
    let d = geom.diff_matrix();
    (0..n)
        .map(|i| {
            let mut acc = SpectralScalar::zeros(f[0].lmax());
            for j in 0..n {
                acc.axpy(d[i * n + j], &f[j]);
            }
            acc
        })
        .collect()
}

/// Pointwise combination Σ_t c_t(r_k, L) f_t over any number of level sets.
fn combine(geom: &ShellGeometry, terms: &[(&Levels, &dyn Fn(f64, f64) -> f64)]) -> Levels {
    let r = geom.radial_nodes();
    let lmax = terms[0].0[0].lmax();
    (0..geom.nr())
        .map(|k| {
            let mut out = SpectralScalar::zeros(lmax);
            for (f, w) in terms {
                for (idx, (o, v)) in out.coeffs_mut().iter_mut().zip(f[k].coeffs()).enumerate() {
                    let l = degree_of(idx) as f64;
                    *o += w(r[k], l * (l + 1.0)) * v;
                }
            }
            out
        })
        .collect()
}

fn times_r(geom: &ShellGeometry, f: &Levels, p: i32) -> Levels {
    combine(geom, &[(f, &|r: f64, _| r.powi(p))])
}

pub fn curl(u: &ShellVectorField) -> Result<ShellVectorField> {
    let geom = u.geometry();
    check_nr(geom)?;
    let (r, s, t) = vector_levels(u)?;
    let d_rt = d_dr(geom, &times_r(geom, &t, 1));
    let d_rs = d_dr(geom, &times_r(geom, &s, 1));
    let rc = combine(geom, &[(&t, &|r, l| l / r)]);
    let sc = combine(geom, &[(&d_rt, &|r, _| 1.0 / r)]);
    let tc = combine(geom, &[(&r, &|r, _| 1.0 / r), (&d_rs, &|r, _| -1.0 / r)]);
    synth_vector(geom, &rc, &sc, &tc)
}

pub fn div(u: &ShellVectorField) -> Result<ShellScalarField> {
    let geom = u.geometry();
    check_nr(geom)?;
    let (r, s, _) = vector_levels(u)?;
    let d = d_dr(geom, &times_r(geom, &r, 2));
    let out = combine(geom, &[(&d, &|r, _| 1.0 / (r * r)), (&s, &|r, l| -l / r)]);
    synth_scalar(geom, &out)
}

pub fn grad(f: &ShellScalarField) -> Result<ShellVectorField> {
    let geom = f.geometry();
    check_nr(geom)?;
    let c = scalar_levels(f)?;
    let rc = d_dr(geom, &c);
    let sc = times_r(geom, &c, -1);
    let zero = vec![SpectralScalar::zeros(c[0].lmax()); geom.nr()];
    synth_vector(geom, &rc, &sc, &zero)
}

fn radial_laplacian_part(geom: &ShellGeometry, f: &Levels) -> (Levels, Levels) {
    let d1 = d_dr(geom, f);
    let d2 = d_dr(geom, &d1);
    (d1, d2)
}

pub fn laplacian_scalar(f: &ShellScalarField) -> Result<ShellScalarField> {
    let geom = f.geometry();
    check_nr(geom)?;
    let c = scalar_levels(f)?;
    let (d1, d2) = radial_laplacian_part(geom, &c);
    let out = combine(geom, &[(&d2, &|_, _| 1.0), (&d1, &|r, _| 2.0 / r), (&c, &|r, l| -l / (r * r))]);
    synth_scalar(geom, &out)
}

/// Component vector Laplacian in spherical coordinates, written per
/// spectral mode: the radial part mixes with the spheroidal part through
/// the 2/r² couplings, the toroidal part is a scalar Laplacian.
pub fn laplacian_vector(u: &ShellVectorField) -> Result<ShellVectorField> {
    let geom = u.geometry();
    check_nr(geom)?;
    let (r, s, t) = vector_levels(u)?;
    let (r1, r2) = radial_laplacian_part(geom, &r);
    let (s1, s2) = radial_laplacian_part(geom, &s);
    let (t1, t2) = radial_laplacian_part(geom, &t);
    let one = |_: f64, _: f64| 1.0;
    let two_over_r = |r: f64, _: f64| 2.0 / r;
    let rc = combine(
        geom,
        &[(&r2, &one), (&r1, &two_over_r), (&r, &|r, l| -(l + 2.0) / (r * r)), (&s, &|r, l| 2.0 * l / (r * r))],
    );
    let sc = combine(
        geom,
        &[(&s2, &one), (&s1, &two_over_r), (&s, &|r, l| -l / (r * r)), (&r, &|r, _| 2.0 / (r * r))],
    );
    let tc = combine(geom, &[(&t2, &one), (&t1, &two_over_r), (&t, &|r, l| -l / (r * r))]);
    synth_vector(geom, &rc, &sc, &tc)
}

pub fn shell_diff(kind: DiffKind, field: &ShellField) -> Result<ShellField> {
    match (kind, field) {
        (DiffKind::Curl3, ShellField::Vector(u)) => Ok(ShellField::Vector(curl(u)?)),
        (DiffKind::Div3, ShellField::Vector(u)) => Ok(ShellField::Scalar(div(u)?)),
        (DiffKind::Laplacian3, ShellField::Vector(u)) => Ok(ShellField::Vector(laplacian_vector(u)?)),
        (DiffKind::Laplacian3, ShellField::Scalar(f)) => Ok(ShellField::Scalar(laplacian_scalar(f)?)),
        (DiffKind::Grad3, ShellField::Scalar(f)) => Ok(ShellField::Vector(grad(f)?)),
        (k, _) => usage(format!("{k:?} does not accept this field type")),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::sphere::SphereGrid;

    fn geom() -> Arc<ShellGeometry> {
        Arc::new(ShellGeometry::new(0.25, 8, Arc::new(SphereGrid::new(6))).unwrap())
    }

    #[test]
    fn polynomial_fields() {
        let g = geom();
        let y = ShellVectorField::from_cartesian(g.clone(), |y| y);
        assert!(div(&y).unwrap().values.iter().all(|v| (v - 3.0).abs() < 1e-10));
        let rot = ShellVectorField::from_cartesian(g.clone(), |y| [-y[1], y[0], 0.0]);
        let expect = ShellVectorField::from_cartesian(g.clone(), |_| [0.0, 0.0, 2.0]);
        assert!(curl(&rot).unwrap().sub(&expect).max_abs() < 1e-10);
        let r2 = ShellScalarField::sample(g.clone(), |r, _, _| r * r);
        let two_y = ShellVectorField::from_cartesian(g, |y| [2.0 * y[0], 2.0 * y[1], 2.0 * y[2]]);
        assert!(grad(&r2).unwrap().sub(&two_y).max_abs() < 1e-10);
    }

    #[test]
    fn curl_grad_vanishes() {
        let g = geom();
        let f = ShellScalarField::sample(g, |r, la, lo| r.powi(2) * la.sin() * la.cos() * lo.sin());
        assert!(curl(&grad(&f).unwrap()).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn scalar_laplacian_of_r_squared() {
        let g = geom();
        let f = ShellScalarField::sample(g, |r, _, _| r * r);
        assert!(laplacian_scalar(&f).unwrap().values.iter().all(|v| (v - 6.0).abs() < 1e-9));
    }
}
