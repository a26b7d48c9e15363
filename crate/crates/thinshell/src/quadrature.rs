//! Gauss–Legendre rules, Legendre polynomial evaluation and barycentric
//! differentiation on arbitrary nodes.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let k = (i + 1) as f64;
        let nf = n as f64;
        let mut z = (PI * (k - 0.25) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
pub fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint value P_n'(±1) = (±1)^{n+1} n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Values and derivatives up to order `nder` of P_0..=P_kmax at x.
/// Returns `d[order][k]`.
pub fn legendre_table(kmax: usize, nder: usize, x: f64) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; kmax + 1]; nder + 1];
    // Recurrence for the q-th derivative:
    // (k+1) P_{k+1}^{(q)} = (2k+1)(x P_k^{(q)} + q P_k^{(q-1)}) - k P_{k-1}^{(q)}
    for q in 0..=nder {
        for k in 0..=kmax {
            let v = if k == 0 {
                if q == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let kk = (k - 1) as f64;
                let prev = d[q][k - 1];
                let prev2 = if k >= 2 { d[q][k - 2] } else { 0.0 };
                let lower = if q > 0 { d[q - 1][k - 1] } else { 0.0 };
                ((2.0 * kk + 1.0) * (x * prev + q as f64 * lower) - kk * prev2) / (kk + 1.0)
            };
            d[q][k] = v;
        }
    }
    d
}

/// Barycentric differentiation matrix on distinct nodes, row-major n×n.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let bw = barycentric_weights(nodes);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bw[j] / bw[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let mut p = 1.0;
            for k in 0..n {
                if k != j {
                    p *= nodes[j] - nodes[k];
                }
            }
            1.0 / p
        })
        .collect()
}

/// Interpolation weights l_k(x) of the nodal polynomial at x.
pub fn interpolation_row(nodes: &[f64], x: f64) -> Vec<f64> {
    let bw = barycentric_weights(nodes);
    if let Some(k) = nodes.iter().position(|&t| t == x) {
        let mut row = vec![0.0; nodes.len()];
        row[k] = 1.0;
        return row;
    }
    let terms: Vec<f64> = nodes.iter().zip(&bw).map(|(&t, &b)| b / (x - t)).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        for n in 1..40 {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn nodes_ascending_and_interior() {
        let (x, _) = gauss_legendre(17);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x[0] > -1.0 && x[16] < 1.0);
    }

    #[test]
    fn differentiation_exact_for_polynomials() {
        let (x, _) = gauss_legendre(7);
        let d = differentiation_matrix(&x);
        let f: Vec<f64> = x.iter().map(|t| t.powi(6) - 2.0 * t).collect();
        for i in 0..7 {
            let df: f64 = (0..7).map(|j| d[i * 7 + j] * f[j]).sum();
            let exact = 6.0 * x[i].powi(5) - 2.0;
            assert!((df - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_table_matches_closed_forms() {
        let x = 0.3;
        let t = legendre_table(4, 3, x);
        assert!((t[0][2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((t[1][3] - 0.5 * (15.0 * x * x - 3.0)).abs() < 1e-14);
        assert!((t[2][3] - 15.0 * x).abs() < 1e-14);
        assert!((t[3][4] - 105.0 * x).abs() < 1e-13);
        let ends = legendre_table(5, 1, 1.0);
        assert!((ends[1][5] - 15.0).abs() < 1e-13);
    }
}
