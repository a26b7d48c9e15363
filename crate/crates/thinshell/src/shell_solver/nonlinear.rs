//! Galerkin image of the advection term ⟨(u·∇)v, b_i⟩ on Q_ε.
//!
//! Cartesian components of v are scalar fields of degree ≤ lmax+1; their
//! angular gradients come from scalar transforms and their r-derivatives
//! from the exact radial profiles. The sphere grid of the geometry must
//! resolve degree lmax+1.

use ndarray::Array2;

use super::basis::{ShellBasis, ShellCoeffs};
use crate::error::{config, Result};
use crate::shell::spherical_frame;
use crate::sphere::{SphereGrid, TangentFieldS2};

struct Frames {
    er: Vec<[f64; 3]>,
    el: Vec<[f64; 3]>,
    ep: Vec<[f64; 3]>,
    nlon: usize,
}

impl Frames {
    fn new(g: &SphereGrid) -> Self {
        let mut er = Vec::new();
        let mut el = Vec::new();
        let mut ep = Vec::new();
        for &la in g.colatitudes() {
            for &lo in g.longitudes() {
                let (a, b, c) = spherical_frame(la, lo);
                er.push(a);
                el.push(b);
                ep.push(c);
            }
        }
        Frames { er, el, ep, nlon: g.nlon() }
    }
}

struct LevelFields {
    ur: Array2<f64>,
    ut: TangentFieldS2,
    dur: Array2<f64>,
    dut: TangentFieldS2,
}

fn level_fields(basis: &ShellBasis, c: &ShellCoeffs) -> Result<Vec<LevelFields>> {
    let g = basis.geometry().sphere_grid();
    basis
        .level_spectra(c)
        .iter()
        .map(|lv| {
            Ok(LevelFields {
                ur: g.synthesize(&lv.r)?.values,
                ut: g.synthesize_vector(&lv.s, &lv.t)?,
                dur: g.synthesize(&lv.dr)?.values,
                dut: g.synthesize_vector(&lv.ds, &lv.dt)?,
            })
        })
        .collect()
}

/// ⟨(u·∇)v, b_i⟩ for every basis function b_i.
pub fn advection_loads(basis: &ShellBasis, u: &ShellCoeffs, v: &ShellCoeffs) -> Result<ShellCoeffs> {
    let geom = basis.geometry();
    let g = geom.sphere_grid();
    if g.lmax() < basis.lmax() + 1 {
        return config("advection needs a sphere grid resolving degree lmax + 1");
    }
    let fr = Frames::new(g);
    let uf = level_fields(basis, u)?;
    let vf = level_fields(basis, v)?;
    let r = geom.radial_nodes();
    let w2 = geom.radial_weights_r2();
    let (nlat, nlon) = g.shape();
    let mut out = basis.zeros();
    for k in 0..r.len() {
        let (ul, vl) = (&uf[k], &vf[k]);
        let mut n = [Array2::<f64>::zeros((nlat, nlon)), Array2::zeros((nlat, nlon)), Array2::zeros((nlat, nlon))];
        for c in 0..3 {
            let comp = |a: &Array2<f64>, t: &TangentFieldS2| {
                Array2::from_shape_fn((nlat, nlon), |(i, j)| {
                    let p = i * fr.nlon + j;
                    a[[i, j]] * fr.er[p][c] + t.lambda[[i, j]] * fr.el[p][c] + t.phi[[i, j]] * fr.ep[p][c]
                })
            };
            let vc = comp(&vl.ur, &vl.ut);
            let dvc = comp(&vl.dur, &vl.dut);
            let coeffs = g.analyze(&crate::sphere::ScalarFieldS2::new(vc))?;
            let gr = crate::sphere::grad(g, &coeffs)?;
            n[c] = &ul.ur * &dvc + (&ul.ut.lambda * &gr.lambda + &ul.ut.phi * &gr.phi) / r[k];
        }
        let back = |frame: &Vec<[f64; 3]>| {
            Array2::from_shape_fn((nlat, nlon), |(i, j)| {
                let p = i * fr.nlon + j;
                (0..3).map(|c| n[c][[i, j]] * frame[p][c]).sum::<f64>()
            })
        };
        let nr_ = crate::sphere::ScalarFieldS2::new(back(&fr.er));
        let nt = TangentFieldS2 { lambda: back(&fr.el), phi: back(&fr.ep) };
        let ar = g.analyze_to(&nr_, basis.lmax())?;
        let (ad, ac) = g.vector_projections(&nt, basis.lmax())?;
        basis.accumulate_level(&mut out, k, w2[k], &ar, &ad, &ac);
    }
    Ok(out)
}
