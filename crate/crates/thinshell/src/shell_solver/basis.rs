//! Toroidal/poloidal Galerkin basis on Q_ε with the free boundary
//! conditions built into the radial profiles.
//!
//! Per harmonic (l, m), with L = l(l+1):
//!
//! | field          | u_r      | ∇′Y part | curl′Y part | boundary rows   |
//! |----------------|----------|----------|-------------|-----------------|
//! | toroidal(s)    | 0        | 0        | s/r         | s′ = 0          |
//! | poloidal(q)    | L q/r²   | q′/r     | 0           | q = 0, q″ = 0   |
//!
//! curl toroidal(s) = poloidal(s) and curl poloidal(q) = toroidal(−(q″ − L q/r²)),
//! so u·n = 0 is q = 0 and curl u × n = 0 is s′ = 0, q″ = 0.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{config, Result};
use crate::quadrature::legendre_table;
use crate::shell::{ShellGeometry, ShellVectorField};
use crate::sphere::{coeff_len, degree_of, modes, DivFreeSpectral, SpectralScalar};

/// Radial profile sampled at the radial nodes with derivatives in r.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    /// Coefficients in Legendre polynomials of ξ = 2(r−1)/ε − 1.
    pub legendre: Vec<f64>,
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    /// Value and derivatives 0..=3 at r = 1 and r = 1+ε.
    pub ends: [[f64; 4]; 2],
}

/// Mass and stiffness matrices of one degree l.
#[derive(Clone, Debug)]
pub struct ModeMatrices {
    pub mass_tor: DMatrix<f64>,
    pub stiff_tor: DMatrix<f64>,
    pub mass_pol: DMatrix<f64>,
    pub stiff_pol: DMatrix<f64>,
}

/// Coefficients of a shell field in the basis, indexed by (lm, i).
#[derive(Clone, Debug, PartialEq)]
pub struct ShellCoeffs {
    pub lmax: usize,
    pub nt: usize,
    pub np: usize,
    pub tor: Vec<f64>,
    pub pol: Vec<f64>,
}

impl ShellCoeffs {
    pub fn zeros(lmax: usize, nt: usize, np: usize) -> Self {
        let n = coeff_len(lmax);
        ShellCoeffs { lmax, nt, np, tor: vec![0.0; n * nt], pol: vec![0.0; n * np] }
    }
    pub fn tor_mode(&self, lm: usize) -> &[f64] {
        &self.tor[lm * self.nt..(lm + 1) * self.nt]
    }
    pub fn pol_mode(&self, lm: usize) -> &[f64] {
        &self.pol[lm * self.np..(lm + 1) * self.np]
    }
    pub fn tor_mode_mut(&mut self, lm: usize) -> &mut [f64] {
        &mut self.tor[lm * self.nt..(lm + 1) * self.nt]
    }
    pub fn pol_mode_mut(&mut self, lm: usize) -> &mut [f64] {
        &mut self.pol[lm * self.np..(lm + 1) * self.np]
    }
    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (y, x) in self.tor.iter_mut().zip(&x.tor) {
            *y += a * x;
        }
        for (y, x) in self.pol.iter_mut().zip(&x.pol) {
            *y += a * x;
        }
    }
    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.tor.iter_mut().chain(out.pol.iter_mut()).for_each(|v| *v *= a);
        out
    }
    pub fn dot(&self, o: &Self) -> f64 {
        self.tor.iter().zip(&o.tor).chain(self.pol.iter().zip(&o.pol)).map(|(a, b)| a * b).sum()
    }
    pub fn is_finite(&self) -> bool {
        self.tor.iter().chain(&self.pol).all(|v| v.is_finite())
    }
}

/// Spectral coefficients of one radial level: u = R Y e_r + S ∇′Y + T curl′Y
/// and the r-derivatives of R, S, T.
#[derive(Clone, Debug)]
pub struct LevelSpectra {
    pub r: SpectralScalar,
    pub s: SpectralScalar,
    pub t: SpectralScalar,
    pub dr: SpectralScalar,
    pub ds: SpectralScalar,
    pub dt: SpectralScalar,
}

#[derive(Clone, Debug)]
pub struct ShellBasis {
    geometry: Arc<ShellGeometry>,
    lmax: usize,
    tor: Vec<RadialProfile>,
    pol: Vec<RadialProfile>,
    /// ∫ s_i dr for each toroidal profile.
    iota: Vec<f64>,
    matrices: Vec<ModeMatrices>,
}

enum Rows {
    Neumann,
    FreePoloidal,
}

/// φ_k = P_k + Σ_{j=1..nb} a_j P_{k+j} with the boundary rows imposed.
fn constrained_legendre(nr: usize, rows: Rows) -> Result<Vec<Vec<f64>>> {
    let (nb, orders): (usize, &[usize]) = match rows {
        Rows::Neumann => (2, &[1]),
        Rows::FreePoloidal => (4, &[0, 2]),
    };
    if nr < nb + 1 {
        return Ok(vec![]);
    }
    let kmax = nr - 1;
    let ends = [legendre_table(kmax, 3, -1.0), legendre_table(kmax, 3, 1.0)];
    let mut out = Vec::new();
    for k in 0..nr - nb {
        let mut a = DMatrix::zeros(nb, nb);
        let mut b = DVector::zeros(nb);
        let mut row = 0;
        for &q in orders {
            for e in &ends {
                for j in 0..nb {
                    a[(row, j)] = e[q][k + 1 + j];
                }
                b[row] = -e[q][k];
                row += 1;
            }
        }
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| crate::Error::Config("singular boundary-row system".into()))?;
        let mut c = vec![0.0; nr];
        c[k] = 1.0;
        for j in 0..nb {
            c[k + 1 + j] = sol[j];
        }
        out.push(c);
    }
    Ok(out)
}

fn profile(geom: &ShellGeometry, legendre: Vec<f64>) -> RadialProfile {
    let kmax = legendre.len() - 1;
    let s = 2.0 / geom.eps();
    let eval = |xi: f64, q: usize| -> f64 {
        let t = legendre_table(kmax, q, xi);
        s.powi(q as i32) * legendre.iter().zip(&t[q]).map(|(c, p)| c * p).sum::<f64>()
    };
    let xi: Vec<f64> = geom.radial_nodes().iter().map(|r| 2.0 * (r - 1.0) / geom.eps() - 1.0).collect();
    let mut ends = [[0.0; 4]; 2];
    for (e, x) in ends.iter_mut().zip([-1.0, 1.0]) {
        for (q, v) in e.iter_mut().enumerate() {
            *v = eval(x, q);
        }
    }
    RadialProfile {
        value: xi.iter().map(|&x| eval(x, 0)).collect(),
        d1: xi.iter().map(|&x| eval(x, 1)).collect(),
        d2: xi.iter().map(|&x| eval(x, 2)).collect(),
        ends,
        legendre,
    }
}

impl ShellBasis {
    pub fn new(geometry: Arc<ShellGeometry>, lmax: usize) -> Result<Self> {
        let nr = geometry.nr();
        if nr < 3 {
            return config(format!("shell basis needs at least 3 radial nodes, got {nr}"));
        }
        if geometry.sphere_grid().lmax() < lmax {
            return config("sphere grid of the geometry does not resolve the basis truncation");
        }
        let tor: Vec<RadialProfile> =
            constrained_legendre(nr, Rows::Neumann)?.into_iter().map(|c| profile(&geometry, c)).collect();
        let pol: Vec<RadialProfile> =
            constrained_legendre(nr, Rows::FreePoloidal)?.into_iter().map(|c| profile(&geometry, c)).collect();
        let w = geometry.radial_weights();
        let r = geometry.radial_nodes();
        let iota = tor.iter().map(|p| p.value.iter().zip(w).map(|(v, w)| v * w).sum()).collect();
        let quad = |f: &dyn Fn(usize) -> f64| -> f64 { (0..nr).map(|k| w[k] * f(k)).sum() };
        let mut matrices = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let ll = (l * (l + 1)) as f64;
            let nt = tor.len();
            let np = pol.len();
            let mt = DMatrix::from_fn(nt, nt, |i, j| ll * quad(&|k| tor[i].value[k] * tor[j].value[k]));
            let kt = DMatrix::from_fn(nt, nt, |i, j| {
                ll * quad(&|k| {
                    ll * tor[i].value[k] * tor[j].value[k] / (r[k] * r[k]) + tor[i].d1[k] * tor[j].d1[k]
                })
            });
            let mp = DMatrix::from_fn(np, np, |i, j| {
                ll * quad(&|k| {
                    ll * pol[i].value[k] * pol[j].value[k] / (r[k] * r[k]) + pol[i].d1[k] * pol[j].d1[k]
                })
            });
            let dq = |i: usize, k: usize| pol[i].d2[k] - ll * pol[i].value[k] / (r[k] * r[k]);
            let kp = DMatrix::from_fn(np, np, |i, j| ll * quad(&|k| dq(i, k) * dq(j, k)));
            matrices.push(ModeMatrices { mass_tor: mt, stiff_tor: kt, mass_pol: mp, stiff_pol: kp });
        }
        Ok(ShellBasis { geometry, lmax, tor, pol, iota, matrices })
    }

    pub fn geometry(&self) -> &Arc<ShellGeometry> {
        &self.geometry
    }
    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn nt(&self) -> usize {
        self.tor.len()
    }
    pub fn np(&self) -> usize {
        self.pol.len()
    }
    pub fn toroidal(&self) -> &[RadialProfile] {
        &self.tor
    }
    pub fn poloidal(&self) -> &[RadialProfile] {
        &self.pol
    }
    pub fn matrices(&self, l: usize) -> &ModeMatrices {
        &self.matrices[l]
    }
    pub fn zeros(&self) -> ShellCoeffs {
        ShellCoeffs::zeros(self.lmax, self.nt(), self.np())
    }

    /// Coefficients of R̊_ε(curl′ψ): the constant toroidal profile ψ_lm.
    pub fn lift(&self, psi: &DivFreeSpectral) -> ShellCoeffs {
        let mut c = self.zeros();
        let psi = psi.resized(self.lmax);
        for (lm, l, _) in modes(self.lmax) {
            if l > 0 {
                c.tor_mode_mut(lm)[0] = psi.coeffs()[lm];
            }
        }
        c
    }

    /// Galerkin loads ⟨R̊_ε curl′ψ, b_i⟩ = L ψ_lm ∫ s_i dr.
    pub fn lift_load(&self, psi: &DivFreeSpectral) -> ShellCoeffs {
        let mut c = self.zeros();
        let psi = psi.resized(self.lmax);
        for (lm, l, _) in modes(self.lmax) {
            let ll = (l * (l + 1)) as f64;
            let p = psi.coeffs()[lm];
            for (i, v) in c.tor_mode_mut(lm).iter_mut().enumerate() {
                *v = ll * p * self.iota[i];
            }
        }
        c
    }

    /// Stream coefficients of the trace M̊_ε u = (1/ε) ∫ s dr.
    pub fn mean_stream(&self, c: &ShellCoeffs) -> DivFreeSpectral {
        let mut psi = SpectralScalar::zeros(self.lmax);
        let eps = self.geometry.eps();
        for (lm, l, _) in modes(self.lmax) {
            if l > 0 {
                psi.coeffs_mut()[lm] = c.tor_mode(lm).iter().zip(&self.iota).map(|(a, b)| a * b).sum::<f64>() / eps;
            }
        }
        DivFreeSpectral::from_stream(psi)
    }

    /// Ñ_ε u: subtract the lift of the trace.
    pub fn fluctuation(&self, c: &ShellCoeffs) -> ShellCoeffs {
        let mut f = c.clone();
        f.axpy(-1.0, &self.lift(&self.mean_stream(c)));
        f
    }

    /// Σ_lm cᵀ X c for the mass (`stiff = false`) or stiffness matrices.
    pub fn quadratic(&self, a: &ShellCoeffs, b: &ShellCoeffs, stiff: bool) -> f64 {
        let mut s = 0.0;
        for (lm, l, _) in modes(self.lmax) {
            if l == 0 {
                continue;
            }
            let m = &self.matrices[l];
            let (xt, xp) = if stiff { (&m.stiff_tor, &m.stiff_pol) } else { (&m.mass_tor, &m.mass_pol) };
            s += bilinear(xt, a.tor_mode(lm), b.tor_mode(lm));
            s += bilinear(xp, a.pol_mode(lm), b.pol_mode(lm));
        }
        s
    }

    /// ‖u‖²_{L²(Q_ε)}.
    pub fn energy(&self, c: &ShellCoeffs) -> f64 {
        self.quadratic(c, c, false)
    }

    /// ‖curl u‖²_{L²(Q_ε)}.
    pub fn curl_energy(&self, c: &ShellCoeffs) -> f64 {
        self.quadratic(c, c, true)
    }

    /// Per-level spectral coefficients and their exact r-derivatives.
    pub fn level_spectra(&self, c: &ShellCoeffs) -> Vec<LevelSpectra> {
        let r = self.geometry.radial_nodes();
        let z = SpectralScalar::zeros(self.lmax);
        let mut out = vec![
            LevelSpectra { r: z.clone(), s: z.clone(), t: z.clone(), dr: z.clone(), ds: z.clone(), dt: z };
            r.len()
        ];
        for (lm, l, _) in modes(self.lmax) {
            if l == 0 {
                continue;
            }
            let ll = (l * (l + 1)) as f64;
            for (k, lv) in out.iter_mut().enumerate() {
                let rk = r[k];
                let (mut s0, mut s1) = (0.0, 0.0);
                for (ci, p) in c.tor_mode(lm).iter().zip(&self.tor) {
                    s0 += ci * p.value[k];
                    s1 += ci * p.d1[k];
                }
                let (mut q0, mut q1, mut q2) = (0.0, 0.0, 0.0);
                for (ci, p) in c.pol_mode(lm).iter().zip(&self.pol) {
                    q0 += ci * p.value[k];
                    q1 += ci * p.d1[k];
                    q2 += ci * p.d2[k];
                }
                lv.t.coeffs_mut()[lm] = s0 / rk;
                lv.dt.coeffs_mut()[lm] = s1 / rk - s0 / (rk * rk);
                lv.r.coeffs_mut()[lm] = ll * q0 / (rk * rk);
                lv.dr.coeffs_mut()[lm] = ll * (q1 / (rk * rk) - 2.0 * q0 / (rk * rk * rk));
                lv.s.coeffs_mut()[lm] = q1 / rk;
                lv.ds.coeffs_mut()[lm] = q2 / rk - q1 / (rk * rk);
            }
        }
        out
    }

    /// Sample the field on the shell grid.
    pub fn synthesize(&self, c: &ShellCoeffs) -> Result<ShellVectorField> {
        let g = self.geometry.sphere_grid();
        let mut out = ShellVectorField::zeros(self.geometry.clone());
        for (k, lv) in self.level_spectra(c).iter().enumerate() {
            let ur = g.synthesize(&lv.r)?.values;
            out.set_level(k, &ur, &g.synthesize_vector(&lv.s, &lv.t)?);
        }
        Ok(out)
    }

    /// Basis field b_i of harmonic `lm`, toroidal or poloidal.
    pub fn unit(&self, lm: usize, i: usize, toroidal: bool) -> ShellCoeffs {
        let mut c = self.zeros();
        if toroidal {
            c.tor_mode_mut(lm)[i] = 1.0;
        } else {
            c.pol_mode_mut(lm)[i] = 1.0;
        }
        c
    }

    /// Galerkin loads ⟨w, b_i⟩ of a gridded field through quadrature.
    pub fn project_loads(&self, w: &ShellVectorField) -> Result<ShellCoeffs> {
        let g = self.geometry.sphere_grid();
        let r = self.geometry.radial_nodes();
        let w2 = self.geometry.radial_weights_r2();
        let mut out = self.zeros();
        for k in 0..r.len() {
            let ar = g.analyze_to(&w.radial_level(k), self.lmax)?;
            let (ad, ac) = g.vector_projections(&w.tangent_level(k), self.lmax)?;
            self.accumulate_level(&mut out, k, w2[k], &ar, &ad, &ac);
        }
        Ok(out)
    }

    /// Add w_k r_k² (R_i a_r + S_i a_div + T_i a_curl) at level k.
    pub(crate) fn accumulate_level(
        &self,
        out: &mut ShellCoeffs,
        k: usize,
        weight_r2: f64,
        ar: &SpectralScalar,
        ad: &SpectralScalar,
        ac: &SpectralScalar,
    ) {
        let rk = self.geometry.radial_nodes()[k];
        for (lm, l, _) in modes(self.lmax) {
            if l == 0 {
                continue;
            }
            let ll = (l * (l + 1)) as f64;
            for (i, p) in self.tor.iter().enumerate() {
                out.tor_mode_mut(lm)[i] += weight_r2 * (p.value[k] / rk) * ac.coeffs()[lm];
            }
            for (i, p) in self.pol.iter().enumerate() {
                let ri = ll * p.value[k] / (rk * rk);
                let si = p.d1[k] / rk;
                out.pol_mode_mut(lm)[i] += weight_r2 * (ri * ar.coeffs()[lm] + si * ad.coeffs()[lm]);
            }
        }
    }

    /// Solve M c = loads per mode (Galerkin projection).
    pub fn solve_mass(&self, loads: &ShellCoeffs) -> Result<ShellCoeffs> {
        let mut out = self.zeros();
        for (lm, l, _) in modes(self.lmax) {
            if l == 0 {
                continue;
            }
            let m = &self.matrices[l];
            let t = solve_spd(&m.mass_tor, loads.tor_mode(lm))?;
            out.tor_mode_mut(lm).copy_from_slice(&t);
            if self.np() > 0 {
                let p = solve_spd(&m.mass_pol, loads.pol_mode(lm))?;
                out.pol_mode_mut(lm).copy_from_slice(&p);
            }
        }
        Ok(out)
    }

    /// Max over basis fields of |u·n| and |curl u × n| on both radii.
    pub fn boundary_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let scale = |p: &RadialProfile| p.value.iter().chain(&p.d1).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for p in &self.tor {
            for e in &p.ends {
                worst = worst.max(e[1].abs() / scale(p));
            }
        }
        for p in &self.pol {
            for e in &p.ends {
                worst = worst.max(e[0].abs() / scale(p)).max(e[2].abs() / scale(p));
            }
        }
        worst
    }

    pub fn degree_of(&self, lm: usize) -> usize {
        degree_of(lm)
    }
}

pub(crate) fn bilinear(m: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += a[i] * m[(i, j)] * b[j];
        }
    }
    s
}

pub(crate) fn solve_spd(m: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let ch = m
        .clone()
        .cholesky()
        .ok_or_else(|| crate::Error::Config("radial mass matrix is not positive definite".into()))?;
    Ok(ch.solve(&DVector::from_column_slice(b)).iter().copied().collect())
}
