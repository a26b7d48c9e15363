use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::fields::{coeff_len, lm_index, ScalarFieldS2, SpectralScalar, TangentFieldS2};
use super::legendre::{plm_and_derivative, tri, tri_len};
use crate::error::{config, Result};
use crate::quadrature::gauss_legendre;

/// Gauss–Legendre × equispaced grid on S² with cached Legendre tables and
/// longitude FFT plans. Quadrature is exact for band limits up to
/// 2·nlat − 1 in latitude and nlon − 1 in longitude.
#[derive(Clone)]
pub struct SphereGrid {
    lmax: usize,
    nlat: usize,
    nlon: usize,
    colat: Vec<f64>,
    cos_colat: Vec<f64>,
    sin_colat: Vec<f64>,
    lat_weights: Vec<f64>,
    lon: Vec<f64>,
    plm: Vec<Vec<f64>>,
    dplm: Vec<Vec<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("lmax", &self.lmax)
            .field("nlat", &self.nlat)
            .field("nlon", &self.nlon)
            .finish()
    }
}

impl PartialEq for SphereGrid {
    fn eq(&self, other: &Self) -> bool {
        self.lmax == other.lmax && self.nlat == other.nlat && self.nlon == other.nlon
    }
}

/// Per-latitude cosine/sine amplitudes for m = 0..=mmax.
struct Fourier {
    c: Vec<f64>,
    s: Vec<f64>,
}

impl SphereGrid {
    /// Grid that integrates cubic products of degree-(lmax+1) fields exactly.
    pub fn new(lmax: usize) -> Self {
        let b = 3 * (lmax + 1);
        let nlat = b / 2 + 1;
        let mut nlon = b + 1;
        nlon += nlon % 2;
        Self::with_resolution(lmax, nlat, nlon).expect("default resolution is valid")
    }

    pub fn with_resolution(lmax: usize, nlat: usize, nlon: usize) -> Result<Self> {
        if nlat < lmax + 1 || nlon < 2 * lmax + 1 {
            return config(format!(
                "grid {nlat}x{nlon} cannot resolve lmax {lmax} (need nlat >= lmax+1, nlon >= 2 lmax+1)"
            ));
        }
        let (x, w) = gauss_legendre(nlat);
        // colatitude ascending, so cos descending
        let cos_colat: Vec<f64> = x.iter().rev().copied().collect();
        let lat_weights: Vec<f64> = w.iter().rev().copied().collect();
        let colat: Vec<f64> = cos_colat.iter().map(|c| c.acos()).collect();
        let sin_colat: Vec<f64> = cos_colat.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let lon = (0..nlon).map(|j| 2.0 * PI * j as f64 / nlon as f64).collect();
        let mut plm = Vec::with_capacity(nlat);
        let mut dplm = Vec::with_capacity(nlat);
        for i in 0..nlat {
            let (p, d) = plm_and_derivative(lmax, cos_colat[i], sin_colat[i]);
            plm.push(p);
            dplm.push(d);
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nlon);
        let inv = planner.plan_fft_inverse(nlon);
        Ok(SphereGrid {
            lmax,
            nlat,
            nlon,
            colat,
            cos_colat,
            sin_colat,
            lat_weights,
            lon,
            plm,
            dplm,
            fwd,
            inv,
        })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn nlat(&self) -> usize {
        self.nlat
    }
    pub fn nlon(&self) -> usize {
        self.nlon
    }
    pub fn colatitudes(&self) -> &[f64] {
        &self.colat
    }
    pub fn sin_colat(&self) -> &[f64] {
        &self.sin_colat
    }
    pub fn cos_colat(&self) -> &[f64] {
        &self.cos_colat
    }
    pub fn longitudes(&self) -> &[f64] {
        &self.lon
    }

    /// Quadrature weight of node (i, j) for ∫_{S²} · dσ.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.lat_weights[i] * 2.0 * PI / self.nlon as f64
    }

    pub fn weights(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.nlat, self.nlon), |(i, _)| self.weight(i))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nlat, self.nlon)
    }

    /// Scalar field from a pointwise function of (λ, φ).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> ScalarFieldS2 {
        ScalarFieldS2::new(Array2::from_shape_fn(self.shape(), |(i, j)| f(self.colat[i], self.lon[j])))
    }

    pub fn integrate(&self, values: &Array2<f64>) -> f64 {
        let mut s = 0.0;
        for (i, row) in values.outer_iter().enumerate() {
            s += self.weight(i) * row.sum();
        }
        s
    }

    pub fn inner_scalar(&self, a: &ScalarFieldS2, b: &ScalarFieldS2) -> f64 {
        self.integrate(&(&a.values * &b.values))
    }

    pub fn inner_tangent(&self, a: &TangentFieldS2, b: &TangentFieldS2) -> f64 {
        self.integrate(&(&a.lambda * &b.lambda + &a.phi * &b.phi))
    }

    fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return config(format!("field shape {shape:?} does not match grid {:?}", self.shape()));
        }
        Ok(())
    }

    fn check_lmax(&self, lmax: usize) -> Result<()> {
        if lmax > self.lmax {
            return config(format!("truncation {lmax} exceeds grid lmax {}", self.lmax));
        }
        Ok(())
    }

    fn forward_row(&self, row: impl Iterator<Item = f64>, mmax: usize) -> Fourier {
        let mut buf: Vec<Complex64> = row.map(|v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        Fourier {
            c: (0..=mmax).map(|m| buf[m].re).collect(),
            s: (0..=mmax).map(|m| -buf[m].im).collect(),
        }
    }

    fn inverse_row(&self, f: &Fourier, out: &mut [f64]) {
        let n = self.nlon;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(f.c[0], 0.0);
        for m in 1..f.c.len() {
            let z = Complex64::new(0.5 * f.c[m], -0.5 * f.s[m]);
            buf[m] += z;
            buf[n - m] += z.conj();
        }
        self.inv.process(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }

    /// Legendre sums of coefficients at latitude i with table `tab`:
    /// cosine and sine amplitudes for m = 0..=lmax.
    fn legendre_sum(&self, coeffs: &[f64], lmax: usize, tab: &[f64]) -> Fourier {
        let mut c = vec![0.0; lmax + 1];
        let mut s = vec![0.0; lmax + 1];
        let r2 = 2f64.sqrt();
        for m in 0..=lmax {
            let n = if m == 0 { 1.0 } else { r2 };
            let mut ac = 0.0;
            let mut as_ = 0.0;
            for l in m..=lmax {
                let p = tab[tri(l, m)];
                ac += coeffs[lm_index(l, m as i64)] * p;
                if m > 0 {
                    as_ += coeffs[lm_index(l, -(m as i64))] * p;
                }
            }
            c[m] = n * ac;
            s[m] = n * as_;
        }
        Fourier { c, s }
    }

    pub fn synthesize(&self, a: &SpectralScalar) -> Result<ScalarFieldS2> {
        self.check_lmax(a.lmax())?;
        let mut out = Array2::zeros(self.shape());
        let mut row = vec![0.0; self.nlon];
        for i in 0..self.nlat {
            let f = self.legendre_sum(a.coeffs(), a.lmax(), &self.plm[i]);
            self.inverse_row(&f, &mut row);
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
        }
        Ok(ScalarFieldS2::new(out))
    }

    /// Quadrature projection onto every Y_lm up to `lmax` (defaults to the
    /// grid truncation).
    pub fn analyze_to(&self, f: &ScalarFieldS2, lmax: usize) -> Result<SpectralScalar> {
        self.check_shape(f.shape())?;
        self.check_lmax(lmax)?;
        let mut coeffs = vec![0.0; coeff_len(lmax)];
        let r2 = 2f64.sqrt();
        for i in 0..self.nlat {
            let fr = self.forward_row(f.values.row(i).iter().copied(), lmax);
            let wq = self.weight(i);
            let tab = &self.plm[i];
            for m in 0..=lmax {
                let n = if m == 0 { 1.0 } else { r2 };
                for l in m..=lmax {
                    let p = wq * n * tab[tri(l, m)];
                    coeffs[lm_index(l, m as i64)] += p * fr.c[m];
                    if m > 0 {
                        coeffs[lm_index(l, -(m as i64))] += p * fr.s[m];
                    }
                }
            }
        }
        SpectralScalar::from_coeffs(lmax, coeffs)
    }

    pub fn analyze(&self, f: &ScalarFieldS2) -> Result<SpectralScalar> {
        self.analyze_to(f, self.lmax)
    }

    /// Tangent field ∇′S + curl′T from spheroidal and toroidal scalars.
    pub fn synthesize_vector(&self, s: &SpectralScalar, t: &SpectralScalar) -> Result<TangentFieldS2> {
        self.check_lmax(s.lmax())?;
        self.check_lmax(t.lmax())?;
        let mut out = TangentFieldS2::zeros(self.nlat, self.nlon);
        let mut row = vec![0.0; self.nlon];
        let mm = s.lmax().max(t.lmax());
        for i in 0..self.nlat {
            let sin = self.sin_colat[i];
            let ps = self.legendre_sum(s.coeffs(), s.lmax(), &self.plm[i]);
            let ds = self.legendre_sum(s.coeffs(), s.lmax(), &self.dplm[i]);
            let pt = self.legendre_sum(t.coeffs(), t.lmax(), &self.plm[i]);
            let dt = self.legendre_sum(t.coeffs(), t.lmax(), &self.dplm[i]);
            let at = |f: &Fourier, m: usize| f.c.get(m).copied().unwrap_or(0.0);
            let bt = |f: &Fourier, m: usize| f.s.get(m).copied().unwrap_or(0.0);
            let mut lam = Fourier { c: vec![0.0; mm + 1], s: vec![0.0; mm + 1] };
            let mut phi = Fourier { c: vec![0.0; mm + 1], s: vec![0.0; mm + 1] };
            for m in 0..=mm {
                let k = m as f64 / sin;
                lam.c[m] = at(&ds, m) + k * bt(&pt, m);
                lam.s[m] = bt(&ds, m) - k * at(&pt, m);
                phi.c[m] = k * bt(&ps, m) - at(&dt, m);
                phi.s[m] = -k * at(&ps, m) - bt(&dt, m);
            }
            self.inverse_row(&lam, &mut row);
            out.lambda.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
            self.inverse_row(&phi, &mut row);
            out.phi.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
        }
        Ok(out)
    }

    /// Quadrature pairings (v, ∇′Y_lm) and (v, curl′Y_lm) for l ≤ lmax.
    pub fn vector_projections(
        &self,
        v: &TangentFieldS2,
        lmax: usize,
    ) -> Result<(SpectralScalar, SpectralScalar)> {
        self.check_shape(v.shape())?;
        self.check_lmax(lmax)?;
        let mut dv = vec![0.0; coeff_len(lmax)];
        let mut cv = vec![0.0; coeff_len(lmax)];
        let r2 = 2f64.sqrt();
        for i in 0..self.nlat {
            let fl = self.forward_row(v.lambda.row(i).iter().copied(), lmax);
            let fp = self.forward_row(v.phi.row(i).iter().copied(), lmax);
            let wq = self.weight(i);
            let sin = self.sin_colat[i];
            for m in 0..=lmax {
                let n = wq * if m == 0 { 1.0 } else { r2 };
                let mf = m as f64;
                for l in m..=lmax {
                    let p = self.plm[i][tri(l, m)];
                    let d = self.dplm[i][tri(l, m)];
                    let mp = mf * p / sin;
                    let kc = lm_index(l, m as i64);
                    dv[kc] += n * (d * fl.c[m] - mp * fp.s[m]);
                    cv[kc] += n * (-mp * fl.s[m] - d * fp.c[m]);
                    if m > 0 {
                        let ks = lm_index(l, -(m as i64));
                        dv[ks] += n * (d * fl.s[m] + mp * fp.c[m]);
                        cv[ks] += n * (mp * fl.c[m] - d * fp.s[m]);
                    }
                }
            }
        }
        Ok((SpectralScalar::from_coeffs(lmax, dv)?, SpectralScalar::from_coeffs(lmax, cv)?))
    }

    /// Spheroidal/toroidal scalars (S, T) with v = ∇′S + curl′T for a
    /// band-limited tangent field.
    pub fn analyze_vector(&self, v: &TangentFieldS2, lmax: usize) -> Result<(SpectralScalar, SpectralScalar)> {
        let (d, c) = self.vector_projections(v, lmax)?;
        let inv = |l: usize| if l == 0 { 0.0 } else { 1.0 / (l * (l + 1)) as f64 };
        Ok((d.map_degree(inv), c.map_degree(inv)))
    }

    pub fn table_len(&self) -> usize {
        tri_len(self.lmax)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(lmax: usize, seed: u64) -> SpectralScalar {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..coeff_len(lmax)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralScalar::from_coeffs(lmax, c).unwrap()
    }

    #[test]
    fn weights_sum_to_four_pi() {
        let g = SphereGrid::new(10);
        let s = g.integrate(&Array2::ones(g.shape()));
        assert!((s / (4.0 * PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_coefficient() {
        let g = SphereGrid::new(6);
        let a = g.analyze(&g.sample(|_, _| 1.0)).unwrap();
        assert!((a.get(0, 0) - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(a.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn cos_colatitude_is_pure_dipole() {
        let g = SphereGrid::new(8);
        let a = g.analyze(&g.sample(|l, _| l.cos())).unwrap();
        let expect = (4.0 * PI / 3.0).sqrt();
        for (k, c) in a.coeffs().iter().enumerate() {
            let want = if k == lm_index(1, 0) { expect } else { 0.0 };
            assert!((c - want).abs() < 1e-12, "k={k} c={c}");
        }
    }

    #[test]
    fn round_trip_minimal_grid() {
        let lmax = 15;
        let g = SphereGrid::with_resolution(lmax, lmax + 1, 2 * lmax + 1).unwrap();
        let a = random(lmax, 3);
        let b = g.analyze(&g.synthesize(&a).unwrap()).unwrap();
        let err = a.coeffs().iter().zip(b.coeffs()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 1e-12, "err={err}");
    }

    #[test]
    fn vector_round_trip() {
        let g = SphereGrid::new(9);
        let mut s = random(9, 1);
        let mut t = random(9, 2);
        s.coeffs_mut()[0] = 0.0;
        t.coeffs_mut()[0] = 0.0;
        let v = g.synthesize_vector(&s, &t).unwrap();
        let (s2, t2) = g.analyze_vector(&v, 9).unwrap();
        for k in 0..coeff_len(9) {
            assert!((s.coeffs()[k] - s2.coeffs()[k]).abs() < 1e-12);
            assert!((t.coeffs()[k] - t2.coeffs()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_undersized_grid() {
        assert!(SphereGrid::with_resolution(10, 10, 30).is_err());
        assert!(SphereGrid::with_resolution(10, 11, 20).is_err());
    }
}
