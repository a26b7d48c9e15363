//! Orthonormal associated Legendre functions in colatitude, without the
//! Condon–Shortley phase.

use std::f64::consts::PI;

/// Index of (l, m), 0 ≤ m ≤ l, in a triangular table.
#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// P̄_lm(cos λ) and dP̄_lm/dλ for 0 ≤ m ≤ l ≤ lmax at colatitude with
/// cosine `x` and sine `s` (s > 0). Normalized so that
/// 2π ∫ P̄_lm² dx = 1 for every (l, m).
pub fn plm_and_derivative(lmax: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let n = tri_len(lmax);
    let mut p = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        p[tri(m, m)] = pmm;
        if m < lmax {
            p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        }
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    for l in 0..=lmax {
        for m in 0..=l {
            let lf = l as f64;
            let mf = m as f64;
            let lower = if l > m {
                ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt() * p[tri(l - 1, m)]
            } else {
                0.0
            };
            dp[tri(l, m)] = (lf * x * p[tri(l, m)] - lower) / s;
        }
    }
    (p, dp)
}

/// Real orthonormal harmonic Y_lm at (λ, φ) with its λ- and φ-derivatives.
/// m > 0 pairs with √2 cos(mφ), m < 0 with √2 sin(|m|φ).
pub fn real_ylm(l: usize, m: i64, colat: f64, lon: f64) -> (f64, f64, f64) {
    let (p, dp) = plm_and_derivative(l, colat.cos(), colat.sin());
    let am = m.unsigned_abs() as usize;
    let pv = p[tri(l, am)];
    let dv = dp[tri(l, am)];
    if m == 0 {
        (pv, dv, 0.0)
    } else {
        let n = 2f64.sqrt();
        let mf = am as f64;
        let (sn, cs) = (mf * lon).sin_cos();
        if m > 0 {
            (n * pv * cs, n * dv * cs, -mf * n * pv * sn)
        } else {
            (n * pv * sn, n * dv * sn, mf * n * pv * cs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let lam: f64 = 0.7;
        let (x, s) = (lam.cos(), lam.sin());
        let (p, dp) = plm_and_derivative(2, x, s);
        let c = 1.0 / (4.0 * PI).sqrt();
        assert!((p[tri(0, 0)] - c).abs() < 1e-15);
        assert!((p[tri(1, 0)] - 3f64.sqrt() * c * x).abs() < 1e-15);
        assert!((dp[tri(1, 0)] + 3f64.sqrt() * c * s).abs() < 1e-15);
        assert!((p[tri(1, 1)] - (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        let p20 = (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * x * x - 1.0);
        assert!((p[tri(2, 0)] - p20).abs() < 1e-15);
        let p22 = (15.0 / (32.0 * PI)).sqrt() * s * s;
        assert!((p[tri(2, 2)] - p22).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h: f64 = 1e-6;
        let lam: f64 = 1.1;
        let (_, dp) = plm_and_derivative(12, lam.cos(), lam.sin());
        let (pp, _) = plm_and_derivative(12, (lam + h).cos(), (lam + h).sin());
        let (pm, _) = plm_and_derivative(12, (lam - h).cos(), (lam - h).sin());
        for k in 0..tri_len(12) {
            let fd = (pp[k] - pm[k]) / (2.0 * h);
            assert!((fd - dp[k]).abs() < 1e-6, "k={k}");
        }
    }
}
