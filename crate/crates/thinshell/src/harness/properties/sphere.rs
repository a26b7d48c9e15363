//! Transforms, tangential operators and norms on S², and the Wiener
//! driving and its lift.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;

use super::{random_divfree, random_scalar, rel, rng, Recorder, SuiteOptions, SuiteReport, Worst};
use crate::error::Result;
use crate::noise::{hs_norm, lift_noise, sample_path, standard_normal, HsSpace, NoiseModel, NoiseSet};
use crate::shell::{m_ring, shell_norm, spherical_frame, ShellGeometry, ShellInnerKind};
use crate::sphere::legendre::real_ylm;
use crate::sphere::*;
use crate::sphere_solver::nonlinear_term;

/// Sixth-order central first derivative.
fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 3.0 * h) + 9.0 * f(x - 2.0 * h) - 45.0 * f(x - h) + 45.0 * f(x + h) - 9.0 * f(x + 2.0 * h)
        + f(x + 3.0 * h))
        / (60.0 * h)
}

/// Sixth-order central second derivative.
fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (2.0 * f(x - 3.0 * h) - 27.0 * f(x - 2.0 * h) + 270.0 * f(x - h) - 490.0 * f(x) + 270.0 * f(x + h)
        - 27.0 * f(x + 2.0 * h)
        + 2.0 * f(x + 3.0 * h))
        / (180.0 * h * h)
}

/// Sample points away from the poles.
fn probe_points() -> Vec<(f64, f64)> {
    (0..48).map(|k| (0.35 + (PI - 0.7) * (k as f64 + 0.5) / 48.0, 0.37 + 2.31 * k as f64)).collect()
}

fn ll(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn diff_max(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    max_abs(&(a - b))
}

fn grid_tangent_norm(g: &SphereGrid, v: &TangentFieldS2) -> f64 {
    g.inner_tangent(v, v).sqrt()
}

/// Δ′Y_lm = −l(l+1)Y_lm for l ≤ 20 at lmax 31: the spectral path and a
/// finite-difference evaluation of the coordinate formula.
pub(crate) fn laplace_beltrami_eigen(rec: &mut Recorder<'_>) -> Result<()> {
    let grid = SphereGrid::new(31);
    let (mut spectral, mut fd) = (Worst::default(), Worst::default());
    let h = 1e-3;
    for l in 0..=20usize {
        for m in [-(l as i64), -((l / 2) as i64), 0, ((l + 1) / 2) as i64, l as i64] {
            let y = grid.sample(|la, lo| real_ylm(l, m, la, lo).0);
            let a = grid.analyze(&y)?;
            let lap = grid.synthesize(&laplace_beltrami(&a))?;
            let want = y.values.mapv(|v| -ll(l) * v);
            let scale = max_abs(&want).max(max_abs(&y.values));
            spectral.see(diff_max(&lap.values, &want) / scale);

            let mf = m as f64;
            let pts = probe_points();
            let (mut err, mut sc): (f64, f64) = (0.0, 0.0);
            for &(la, lo) in &pts {
                let (yv, yl, _) = real_ylm(l, m, la, lo);
                let yll = d1(|x| real_ylm(l, m, x, lo).1, la, h);
                let s = la.sin();
                let fdv = yll + la.cos() / s * yl - mf * mf * yv / (s * s);
                err = err.max((fdv + ll(l) * yv).abs());
                sc = sc.max(yv.abs() * ll(l).max(1.0));
            }
            fd.see(err / sc);
        }
    }
    rec.le("Δ′Y_lm = −l(l+1)Y_lm, spectral, l ≤ 20", spectral.0, 1e-8, "lmax 31, relative to max |l(l+1)Y|");
    rec.le("Δ′Y_lm = −l(l+1)Y_lm, finite differences, l ≤ 20", fd.0, 1e-8, "6th-order FD in λ, h = 1e-3");
    Ok(())
}

/// v = curl′Y_lm evaluated analytically.
fn curl_ylm(l: usize, m: i64, la: f64, lo: f64) -> (f64, f64) {
    let (_, yl, yp) = real_ylm(l, m, la, lo);
    (yp / la.sin(), -yl)
}

/// Term-by-term evaluation of the coordinate formula for the Laplace–de
/// Rham operator on curl′Y_lm, with finite-difference derivatives.
fn de_rham_fd(l: usize, m: i64, la: f64, lo: f64, h: f64) -> (f64, f64) {
    let lb = |comp: usize| {
        let f = |x: f64, y: f64| {
            let v = curl_ylm(l, m, x, y);
            if comp == 0 {
                v.0
            } else {
                v.1
            }
        };
        let fl = d1(|x| f(x, lo), la, h);
        let fll = d2(|x| f(x, lo), la, h);
        let fpp = d2(|y| f(la, y), lo, h);
        let s = la.sin();
        fll + la.cos() / s * fl + fpp / (s * s)
    };
    let (vl, vp) = curl_ylm(l, m, la, lo);
    let dvl = d1(|y| curl_ylm(l, m, la, y).0, lo, h);
    let dvp = d1(|y| curl_ylm(l, m, la, y).1, lo, h);
    let (s, c) = la.sin_cos();
    (lb(0) - 2.0 * c / (s * s) * dvp - vl / (s * s), lb(1) + 2.0 * c / (s * s) * dvl - vp / (s * s))
}

/// (u·∇′)u from Cartesian components, projected on the stream basis.
fn advection_oracle(grid: &SphereGrid, u: &DivFreeSpectral) -> Result<DivFreeSpectral> {
    let v = velocity(grid, u)?;
    let (nlat, nlon) = grid.shape();
    let frames: Vec<_> = grid
        .colatitudes()
        .iter()
        .flat_map(|&la| grid.longitudes().iter().map(move |&lo| spherical_frame(la, lo)))
        .collect();
    let mut out = TangentFieldS2::zeros(nlat, nlon);
    for c in 0..3 {
        let comp = ScalarFieldS2::new(Array2::from_shape_fn((nlat, nlon), |(i, j)| {
            let f = &frames[i * nlon + j];
            v.lambda[[i, j]] * f.1[c] + v.phi[[i, j]] * f.2[c]
        }));
        let g = grad(grid, &grid.analyze(&comp)?)?;
        let adv = &v.lambda * &g.lambda + &v.phi * &g.phi;
        for i in 0..nlat {
            for j in 0..nlon {
                let f = &frames[i * nlon + j];
                out.lambda[[i, j]] += adv[[i, j]] * f.1[c];
                out.phi[[i, j]] += adv[[i, j]] * f.2[c];
            }
        }
    }
    let proj = curl_scalar(grid, &out)?.resized(u.lmax());
    Ok(DivFreeSpectral::from_stream(proj.map_degree(|l| if l == 0 { 0.0 } else { 1.0 / ll(l) })))
}

pub(crate) fn sphere(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("sphere", report);
    let mut r = rng(opts.seed, 11);

    let g15 = SphereGrid::new(15);
    let one = g15.analyze(&g15.sample(|_, _| 1.0))?;
    let others = one.coeffs().iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
    rec.le("analyze(1): a_00 = √(4π)", (one.coeffs()[0] - (4.0 * PI).sqrt()).abs(), 1e-12, "");
    rec.le("analyze(1): other coefficients vanish", others, 1e-12, "");
    let cosl = g15.analyze(&g15.sample(|la, _| la.cos()))?;
    let mut off: f64 = 0.0;
    for (k, l, m) in modes(15) {
        if (l, m) != (1, 0) {
            off = off.max(cosl.coeffs()[k].abs());
        }
    }
    rec.le("analyze(cos λ) lies in Y_10", off, 1e-12, "");
    rec.le("analyze(cos λ): a_10 = √(4π/3)", (cosl.get(1, 0) - (4.0 * PI / 3.0).sqrt()).abs(), 1e-12, "");

    let mut w = Worst::default();
    let mut wp = Worst::default();
    for _ in 0..5 {
        let a = random_scalar(&mut r, 15);
        let f = g15.synthesize(&a)?;
        let back = g15.synthesize(&g15.analyze(&f)?)?;
        w.see(diff_max(&back.values, &f.values));
        wp.see(rel(g15.inner_scalar(&f, &f), a.norm().powi(2)));
    }
    rec.le("synthesize∘analyze round trip at lmax 15", w.0, 1e-12, "max abs, coefficients in [−1, 1]");
    rec.le("Parseval", wp.0, 1e-11, "relative");

    let c = SpectralScalar::mode(10, 0, 0, 2.5);
    rec.le("Δ′ of a constant = 0", laplace_beltrami(&c).norm(), 0.0, "");

    // Spectral tangential calculus at lmax 12, fields band-limited to 12.
    let g = SphereGrid::new(12);
    let (mut wd, mut wa, mut wc, mut wak, mut wdf) =
        (Worst::default(), Worst::default(), Worst::default(), Worst::default(), Worst::default());
    for _ in 0..5 {
        let psi = random_scalar(&mut r, 12);
        let chi = random_scalar(&mut r, 12);
        let cu = curl_stream(&g, &psi)?;
        let nrm = grid_tangent_norm(&g, &cu);
        wd.see(g.synthesize(&div(&g, &cu)?)?.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) / nrm);
        let v = g.synthesize_vector(&chi, &random_scalar(&mut r, 12))?;
        let lhs = g.inner_tangent(&cu, &v);
        let rhs = g.inner_scalar(&g.synthesize(&psi)?, &g.synthesize(&curl_scalar(&g, &v)?)?);
        wa.see((lhs - rhs).abs() / (nrm * grid_tangent_norm(&g, &v)));
        let gp = grad(&g, &psi)?;
        wc.see(curl_scalar(&g, &gp)?.norm() / grid_tangent_norm(&g, &gp));
        let u = DivFreeSpectral::from_stream(psi.clone());
        let z = DivFreeSpectral::from_stream(chi.clone());
        let lhs = g.inner_scalar(&g.synthesize(&vorticity(&u))?, &g.synthesize(&vorticity(&z))?);
        let rhs = g.inner_tangent(&velocity(&g, &u)?, &velocity(&g, &z.stokes())?);
        wak.see((lhs - rhs).abs() / (u.norm(NormKind::VSeminorm) * z.norm(NormKind::VSeminorm)));
        let vel = velocity(&g, &u)?;
        let dv = g.synthesize(&div(&g, &vel)?)?;
        wdf.see(max_abs(&dv.values) / u.norm(NormKind::L2S2));
    }
    rec.le("div′ curl′ψ = 0", wd.0, 1e-10, "relative to ‖curl′ψ‖");
    rec.le("(curl′ψ, v) = (ψ, curl′v)", wa.0, 1e-10, "relative to ‖curl′ψ‖‖v‖");
    rec.le("curl′ grad′ψ = 0", wc.0, 1e-10, "relative to ‖grad′ψ‖");
    rec.le("(curl′u, curl′v) = (u, Av)", wak.0, 1e-9, "relative to ‖u‖_V‖v‖_V");
    rec.le("synthesized divergence-free fields: |div′u| ≤ 1e-10‖u‖", wdf.0, 1e-10, "max over nodes");

    // Leray projection.
    let (mut wg, mut wi, mut wh) = (Worst::default(), Worst::default(), Worst::default());
    for _ in 0..5 {
        let p1 = random_scalar(&mut r, 12);
        let p2 = random_scalar(&mut r, 12);
        let gv = grad(&g, &p1)?;
        wg.see(leray_project(&g, &gv)?.norm(NormKind::L2S2) / grid_tangent_norm(&g, &gv));
        let u = DivFreeSpectral::from_stream(p2.clone());
        let back = leray_project(&g, &velocity(&g, &u)?)?;
        wi.see(back.sub(&u).norm(NormKind::L2S2) / u.norm(NormKind::L2S2));
        // Oracle for the Hodge split: solve Δ′χ = div′v, subtract ∇′χ.
        let v = g.synthesize_vector(&p1, &p2)?;
        let dv = div(&g, &v)?;
        let chi = dv.map_degree(|l| if l == 0 { 0.0 } else { -1.0 / ll(l) });
        let rest = v.sub(&grad(&g, &chi)?);
        let want = DivFreeSpectral::from_stream(curl_scalar(&g, &rest)?.map_degree(|l| if l == 0 { 0.0 } else { 1.0 / ll(l) }));
        wh.see(leray_project(&g, &v)?.sub(&want).norm(NormKind::L2S2) / want.norm(NormKind::L2S2));
    }
    rec.le("P grad′ψ = 0", wg.0, 1e-10, "");
    rec.le("P curl′ψ = curl′ψ", wi.0, 1e-10, "");
    rec.le("P(grad′ψ₁ + curl′ψ₂) = curl′ψ₂", wh.0, 1e-9, "oracle: Δ′χ = div′v, subtract ∇′χ");

    // Norms.
    let y10 = DivFreeSpectral::mode(12, 1, 0, 1.0)?;
    let v = velocity(&g, &y10)?;
    let h = 1e-4;
    let vort = g.sample(|la, _| d1(|x| -real_ylm(1, 0, x, 0.0).1 * x.sin(), la, h) / la.sin());
    let ratio = (g.inner_scalar(&vort, &vort) / g.inner_tangent(&v, &v)).sqrt();
    rec.le("‖curl′u‖/‖u‖ = √2 for u = curl′Y_10", (ratio - 2f64.sqrt()).abs(), 1e-8, "quadrature of the coordinate curl");
    rec.le(
        "spectral V/L² ratio for curl′Y_10",
        (y10.norm(NormKind::VSeminorm) / y10.norm(NormKind::L2S2) - 2f64.sqrt()).abs(),
        1e-12,
        "",
    );
    let mut wr: f64 = 0.0;
    for _ in 0..20 {
        let u = random_divfree(&mut r, 12);
        wr = wr.max(u.norm(NormKind::DaInv) / u.norm(NormKind::L2S2));
    }
    rec.le("‖u‖_{D(A⁻¹)} ≤ ½‖u‖", wr, 0.5, "max ratio over random fields");
    let z = DivFreeSpectral::zeros(5);
    let zn = z.norm(NormKind::L2S2) + z.norm(NormKind::VSeminorm) + z.norm(NormKind::DaInv);
    rec.le("norms of 0", zn, 0.0, "");
    rec.flag("D(A⁻¹) on a stream with l = 0 is a usage error", stream_norm(&SpectralScalar::mode(3, 0, 0, 1.0), NormKind::DaInv).is_err(), "");

    // Laplace–de Rham.
    let (mut ws, mut wf) = (Worst::default(), Worst::default());
    for l in 1..=8usize {
        for m in [-(l as i64), 0, ((l + 1) / 2) as i64] {
            let u = DivFreeSpectral::mode(12, l, m, 1.0)?;
            let v = velocity(&g, &u)?;
            let lv = laplace_de_rham(&g, &v)?;
            let want = v.scaled(-ll(l));
            ws.see(lv.sub(&want).max_abs() / want.max_abs());
            let (mut err, mut sc): (f64, f64) = (0.0, 0.0);
            for &(la, lo) in &probe_points() {
                let (a, b) = de_rham_fd(l, m, la, lo, 1e-2);
                let (vl, vp) = curl_ylm(l, m, la, lo);
                err = err.max((a + ll(l) * vl).abs()).max((b + ll(l) * vp).abs());
                sc = sc.max(ll(l) * vl.abs()).max(ll(l) * vp.abs());
            }
            wf.see(err / sc);
        }
    }
    rec.le("𝚫′ curl′Y_lm = −l(l+1) curl′Y_lm, spectral", ws.0, 1e-9, "l ≤ 8");
    rec.le("𝚫′ curl′Y_lm = −l(l+1) curl′Y_lm, coordinate formula", wf.0, 1e-6, "6th-order FD, h = 1e-2");
    let bad = apply_operator(&g, SphereOperator::Div, &SphereField::Spectral(SpectralScalar::zeros(12)));
    rec.flag("operator/input mismatch is a usage error", bad.is_err(), "");

    // Nonlinear term.
    let lmax = 10;
    let gs = SphereGrid::new(lmax);
    let go = SphereGrid::new(lmax + 1);
    let (mut we, mut wo, mut wanti) = (Worst::default(), Worst::default(), Worst::default());
    for (l, m) in [(1usize, 0i64), (2, 1), (3, -2), (5, 4), (10, -7)] {
        let u = DivFreeSpectral::mode(lmax, l, m, 1.0)?;
        let n2 = u.norm(NormKind::L2S2).powi(2);
        we.see(nonlinear_term(&gs, &u)?.norm(NormKind::L2S2) / n2);
        we.see(advection_oracle(&go, &u)?.norm(NormKind::L2S2) / n2);
    }
    for _ in 0..5 {
        let u = random_divfree(&mut r, lmax);
        let b = nonlinear_term(&gs, &u)?;
        let o = advection_oracle(&go, &u)?;
        wo.see(b.sub(&o).norm(NormKind::L2S2) / o.norm(NormKind::L2S2));
        wanti.see(b.inner(&u, NormKind::L2S2).abs() / (u.norm(NormKind::L2S2) * u.norm(NormKind::VSeminorm).powi(2)));
    }
    rec.le("B(curl′Y_lm) = 0", we.0, 1e-9, "rotational form and Cartesian oracle, relative to ‖u‖²");
    rec.le("rotational form = P(u·∇′)u", wo.0, 1e-10, "Cartesian-component oracle");
    rec.le("(B(u), u) = 0", wanti.0, 1e-10, "relative to ‖u‖‖u‖²_V");
    rec.le("B(0) = 0", nonlinear_term(&gs, &DivFreeSpectral::zeros(lmax))?.norm(NormKind::L2S2), 0.0, "");
    Ok(())
}

pub(crate) fn noise(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("noise", report);
    let empty = sample_path(opts.seed, 0, 0, 1e-3, 100)?;
    rec.flag("N = 0 gives an empty increment table", empty.increments().is_empty(), "");

    let dt = 1e-3;
    let n = 100_000;
    let p = sample_path(opts.seed, 1, 1, dt, n)?;
    let x = p.increments();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = dt * (2.0 / (n - 1) as f64).sqrt();
    rec.report("sample variance", var);
    rec.le("sample variance within 3 SE of dt", (var - dt).abs() / se, 3.0, "10⁵ increments, chi-square standard error");

    let a = sample_path(7, 3, 3, dt, 500)?;
    let b = sample_path(7, 3, 3, dt, 500)?;
    rec.flag("identical (seed, path_id) give identical bytes", a.to_bytes() == b.to_bytes(), "seed 7, path 3");
    let mut idx = Worst::default();
    for (j, k) in [(0, 0), (2, 17), (1, 499)] {
        idx.see((a.step(k)[j] - dt.sqrt() * standard_normal(7, 3, j, k)).abs());
    }
    rec.le("increments are indexed by (seed, path_id, j, k)", idx.0, 0.0, "random access equals sequential draw");
    let c = sample_path(7, 4, 3, dt, 500)?;
    rec.flag("distinct path ids give distinct paths", a.increments() != c.increments(), "");

    let lmax = 8;
    let grid = Arc::new(SphereGrid::new(lmax));
    let g1 = DivFreeSpectral::mode(lmax, 2, 1, 1.0 / 6f64.sqrt())?;
    let model = NoiseModel::new(vec![g1.clone()]);
    let geom = Arc::new(ShellGeometry::new(0.25, 8, grid.clone())?);
    let lifted = lift_noise(&model, &geom)?;
    let n2 = shell_norm(&lifted.fields[0], ShellInnerKind::L2Qeps)?.powi(2);
    rec.le("‖g‖² = 1, ε = 0.25: ‖g̃‖² = 0.25", (n2 - 0.25).abs(), 1e-10, "");
    let zero = lift_noise(&NoiseModel::new(vec![DivFreeSpectral::zeros(lmax)]), &geom)?;
    rec.le("lift of 0 = 0", zero.fields[0].max_abs(), 0.0, "");
    let back = leray_project(&grid, &m_ring(&lifted.fields[0]))?;
    let e = back.stream().coeffs().iter().zip(g1.stream().coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    rec.le("M̊_ε lift(g) = g", e, 1e-12, "coefficient-wise");

    let two = NoiseModel::new(vec![DivFreeSpectral::mode(lmax, 1, 0, 2.0 / 2f64.sqrt())?]);
    rec.le("N = 1, ‖g¹‖ = 2: ‖G‖²_HS = 4", (hs_norm(&NoiseSet::Sphere(two.coefficients()), HsSpace::HSphere)? - 4.0).abs(), 1e-12, "");
    rec.le("empty set: ‖G‖²_HS = 0", hs_norm(&NoiseSet::Sphere(&[]), HsSpace::HSphere)?.abs(), 0.0, "");
    let set = NoiseModel::from_modes(lmax, &[StreamMode::new(1, 0, 0.2), StreamMode::new(2, 1, 0.15), StreamMode::new(3, -2, 0.1)])?;
    let hs = hs_norm(&NoiseSet::Sphere(set.coefficients()), HsSpace::HSphere)?;
    let (mut wh, mut mom) = (Worst::default(), Vec::new());
    let pm = opts.moment_p;
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 8, grid.clone())?);
        let l = lift_noise(&set, &geom)?;
        let he = hs_norm(&NoiseSet::Shell(&l.fields), HsSpace::HEps)?;
        wh.see(rel(he, eps * hs));
        let t = 0.5;
        let m: f64 = l.fields.iter().map(|f| t * shell_norm(f, ShellInnerKind::L2Qeps).unwrap().powf(pm)).sum();
        mom.push(m / eps.powf(pm / 2.0));
    }
    rec.le("‖G̃_ε‖²_HS = ε‖G‖²_HS", wh.0, 1e-10, "relative");
    let spread = mom.iter().map(|m| rel(*m, mom[0])).fold(0.0, f64::max);
    rec.le(format!("∫‖g̃_ε‖^p dt / ε^(p/2) constant in ε, p = {pm}"), spread, 1e-10, "time-constant g");
    rec.flag(
        "mismatched HS space is a usage error",
        hs_norm(&NoiseSet::Sphere(set.coefficients()), HsSpace::HEps).is_err(),
        "",
    );
    Ok(())
}
