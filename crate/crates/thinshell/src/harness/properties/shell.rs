//! Averaging-operator algebra, thin-shell inequalities and exact
//! differential identities on Q_ε.

use std::sync::Arc;

use ndarray::{Array2, Array3, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{random_divfree, random_scalar, rel, rng, Recorder, SuiteOptions, SuiteReport, Worst};
use crate::error::Result;
use crate::shell::*;
use crate::shell_solver::{advection_loads, apply_stokes_eps, ShellBasis, ShellCoeffs};
use crate::sphere::{laplace_beltrami, modes, NormKind, ScalarFieldS2, SphereGrid, TangentFieldS2};
use crate::sphere_solver::nonlinear_term;

const CASES_PER_EPS: usize = 50;
const FIELDS_PER_EPS: usize = 100;
/// Profiles used where an identity is only exact for radially resolved fields.
const RESOLVED: usize = 4;

fn nodal(rng: &mut ChaCha8Rng, shape: (usize, usize, usize)) -> Array3<f64> {
    Array3::from_shape_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn nodal2(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn max_abs2(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn max_abs3(a: &Array3<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn tangent_max(v: &TangentFieldS2) -> f64 {
    v.max_abs()
}

fn sphere_norm_sq(g: &SphereGrid, f: &ScalarFieldS2) -> f64 {
    g.inner_scalar(f, f)
}

/// max_x |Σ_k w_k r_k a_k(x)| and max_x Σ_k w_k r_k |a_k(x)|.
fn r_moment(geom: &ShellGeometry, a: &Array3<f64>) -> (f64, f64) {
    let mut m = Array2::<f64>::zeros((a.dim().1, a.dim().2));
    let mut s = Array2::<f64>::zeros((a.dim().1, a.dim().2));
    for (k, lvl) in a.axis_iter(Axis(0)).enumerate() {
        m.scaled_add(geom.radial_weights_r1()[k], &lvl);
        s.scaled_add(geom.radial_weights_r1()[k], &lvl.mapv(f64::abs));
    }
    (max_abs2(&m), max_abs2(&s))
}

/// Random coefficients on the first `kmax` radial profiles of each kind.
fn random_coeffs(rng: &mut ChaCha8Rng, basis: &ShellBasis, kmax: usize) -> ShellCoeffs {
    let mut c = basis.zeros();
    for (lm, l, _) in modes(basis.lmax()) {
        if l == 0 {
            continue;
        }
        let w = 1.0 / (l as f64);
        for v in c.tor_mode_mut(lm).iter_mut().take(kmax) {
            *v = w * rng.gen_range(-1.0..1.0);
        }
        for v in c.pol_mode_mut(lm).iter_mut().take(kmax) {
            *v = w * rng.gen_range(-1.0..1.0);
        }
    }
    c
}

/// M∘R = Id, idempotence/annihilation, orthogonality, Pythagoras, the
/// ε-scaling equalities, the dual pairing and the r-moment.
pub(crate) fn operators(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("operators", report);
    let tol = 1e-9;
    let grid = Arc::new(SphereGrid::new(10));
    let names = [
        "M∘R = Id",
        "M̂∘M̂ = M̂, N̂∘N̂ = N̂, M̂∘N̂ = 0",
        "M̃∘M̃ = M̃, Ñ∘Ñ = Ñ, M̃∘Ñ = 0",
        "(M̂ψ, N̂ξ) = 0 and (M̃u, Ñv) = 0",
        "‖u‖² = ‖M̃u‖² + ‖Ñu‖²",
        "‖Rφ‖² = ε‖φ‖²",
        "‖M̂ψ‖² = ε‖Mψ‖²",
        "‖M̃u‖² = ε‖M̊u‖²",
        "‖R̊v‖² = ε‖v‖²",
        "(Mψ, φ) = (ψ, R φ/ε)",
        "∫ r N̂ψ dr = 0, ∫ r (Ñu)_tan dr = 0",
        "ε‖Mψ‖² ≤ ‖ψ‖²",
        "Ñ∘R̊ = 0, decompose(R̊v) = (R̊v, 0, v)",
    ];
    let mut worst: Vec<Worst> = names.iter().map(|_| Worst::default()).collect();
    let mut r = rng(opts.seed, 1);
    let mut cases = 0;
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 8, grid.clone())?);
        let shape = geom.shape();
        let s2 = grid.shape();
        for _ in 0..CASES_PER_EPS {
            cases += 1;
            let psi = ShellScalarField::new(geom.clone(), nodal(&mut r, shape))?;
            let xi = ShellScalarField::new(geom.clone(), nodal(&mut r, shape))?;
            let phi = ScalarFieldS2::new(nodal2(&mut r, s2));
            let u = ShellVectorField::new(geom.clone(), nodal(&mut r, shape), nodal(&mut r, shape), nodal(&mut r, shape))?;
            let v = ShellVectorField::new(geom.clone(), nodal(&mut r, shape), nodal(&mut r, shape), nodal(&mut r, shape))?;
            let w = TangentFieldS2 { lambda: nodal2(&mut r, s2), phi: nodal2(&mut r, s2) };

            let rphi = r_scalar(&phi, &geom)?;
            worst[0].see(max_abs2(&(&m_scalar(&rphi).values - &phi.values)) / max_abs2(&phi.values));

            let mh = m_hat(&psi);
            let nh = n_hat(&psi);
            let scale = psi.max_abs();
            let e1 = m_hat(&mh).sub(&mh).max_abs();
            let e2 = n_hat(&nh).sub(&nh).max_abs();
            let e3 = m_hat(&nh).max_abs();
            worst[1].see(e1.max(e2).max(e3) / scale);

            let mt = m_tilde(&u);
            let nt = n_tilde(&u);
            let su = u.max_abs();
            let f1 = m_tilde(&mt).sub(&mt).max_abs();
            let f2 = n_tilde(&nt).sub(&nt).max_abs();
            let f3 = m_tilde(&nt).max_abs();
            worst[2].see(f1.max(f2).max(f3) / su);

            let np = l2_scalar(&psi, &psi)?.sqrt();
            let nx = l2_scalar(&xi, &xi)?.sqrt();
            let o1 = l2_scalar(&mh, &n_hat(&xi))?.abs() / (np * nx);
            let nu_ = shell_norm(&u, ShellInnerKind::L2Qeps)?;
            let nv = shell_norm(&v, ShellInnerKind::L2Qeps)?;
            let o2 = shell_inner(&mt, &n_tilde(&v), ShellInnerKind::L2Qeps)?.abs() / (nu_ * nv);
            worst[3].see(o1.max(o2));

            let e_m = shell_norm(&mt, ShellInnerKind::L2Qeps)?.powi(2);
            let e_n = shell_norm(&nt, ShellInnerKind::L2Qeps)?.powi(2);
            worst[4].see(rel(nu_ * nu_, e_m + e_n));

            worst[5].see(rel(l2_scalar(&rphi, &rphi)?, eps * sphere_norm_sq(&grid, &phi)));
            worst[6].see(rel(l2_scalar(&mh, &mh)?, eps * sphere_norm_sq(&grid, &m_scalar(&psi))));
            worst[7].see(rel(e_m, eps * grid.inner_tangent(&m_ring(&u), &m_ring(&u))));
            let rw = r_ring(&w, &geom)?;
            worst[8].see(rel(shell_norm(&rw, ShellInnerKind::L2Qeps)?.powi(2), eps * grid.inner_tangent(&w, &w)));

            let nphi = sphere_norm_sq(&grid, &phi).sqrt();
            let d1 = dual_pair_check(&psi, &phi)? / (np * nphi);
            let lhs = grid.inner_scalar(&m_scalar(&rphi), &phi);
            let rhs = l2_scalar(&rphi, &rphi)? / eps;
            let nn = nphi * nphi;
            worst[9].see(d1.max(rel(lhs, nn)).max(rel(rhs, nn)));

            let (m1, s1) = r_moment(&geom, &nh.values);
            let (m2, s2l) = r_moment(&geom, &nt.lambda);
            let (m3, s3) = r_moment(&geom, &nt.phi);
            worst[10].see((m1 / s1).max(m2 / s2l).max(m3 / s3));

            worst[11].see(eps * sphere_norm_sq(&grid, &m_scalar(&psi)) / (np * np) - 1.0);

            let dec = decompose(&rw);
            let z1 = n_tilde(&rw).max_abs();
            let z2 = dec.fluct.max_abs().max(dec.mean.sub(&rw).max_abs());
            let z3 = tangent_max(&dec.trace.sub(&w));
            worst[12].see(z1.max(z2) / rw.max_abs() + z3 / tangent_max(&w));
        }
    }
    for (i, n) in names.iter().enumerate() {
        let (v, t) = if i == 11 { (worst[i].0, 1e-12) } else { (worst[i].0, tol) };
        let detail = if i == 11 { "max of ε‖Mψ‖²/‖ψ‖² − 1".to_string() } else { "max relative residual".to_string() };
        rec.le(*n, v, t, format!("{detail}, {cases} cases, lmax 10, nr 8"));
    }
    // Exact values on constants.
    let geom = Arc::new(ShellGeometry::new(0.2, 8, grid.clone())?);
    let ones = ShellScalarField::sample(geom.clone(), |_, _, _| 1.0);
    let m1 = m_scalar(&ones).values.iter().fold(0.0f64, |m, v| m.max((v - 1.1).abs()));
    rec.le("M_ε 1 = 1 + ε/2 at ε = 0.2", m1, 1e-12, "analytic radial integral");
    let inv_r = ShellScalarField::sample(geom.clone(), |r, _, _| 1.0 / r);
    let m2 = m_scalar(&inv_r).values.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    rec.le("M_ε (1/r) = 1", m2, 1e-12, "");
    let full = SphereInput::Full { r: Array2::ones(grid.shape()), tangent: TangentFieldS2::zeros(grid.nlat(), grid.nlon()) };
    rec.flag("R̊ rejects a radial component", retract(RetractKind::RRing, &full, &geom).is_err(), "usage error");
    Ok(())
}

fn poincare_basis(eps: f64, lmax: usize, nr: usize) -> Result<ShellBasis> {
    let grid = Arc::new(SphereGrid::new(lmax + 1));
    ShellBasis::new(Arc::new(ShellGeometry::new(eps, nr, grid)?), lmax)
}

/// ‖Ñu‖ ≤ 2ε‖curl Ñu‖ on manufactured V_ε fields.
pub(crate) fn poincare(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("poincare", report);
    let mut r = rng(opts.seed, 2);
    let mut all = Worst::default();
    for &eps in &opts.eps_list {
        let basis = poincare_basis(eps, 6, 8)?;
        let mut w = Worst::default();
        for _ in 0..FIELDS_PER_EPS {
            let c = random_coeffs(&mut r, &basis, usize::MAX);
            let f = basis.fluctuation(&c);
            let ratio = basis.energy(&f).sqrt() / (2.0 * eps * basis.curl_energy(&f).sqrt());
            w.see(ratio);
        }
        rec.report(format!("max ‖Ñu‖/(2ε‖curl Ñu‖) at eps {eps}"), w.0);
        rec.le(format!("‖Ñu‖ ≤ 2ε‖curl Ñu‖, ε = {eps}"), w.0, 1.0 + 1e-6, format!("{FIELDS_PER_EPS} fields"));
        all.see(w.0);
    }
    rec.report("max ratio over sweep", all.0);
    Ok(())
}

/// ‖u‖² ≤ ‖u‖²_r ≤ (9/4)‖u‖² on random gridded fields.
pub(crate) fn norm_equivalence(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("norm_equivalence", report);
    let mut r = rng(opts.seed, 3);
    let grid = Arc::new(SphereGrid::new(6));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 8, grid.clone())?);
        let shape = geom.shape();
        for _ in 0..FIELDS_PER_EPS {
            let u = ShellVectorField::new(geom.clone(), nodal(&mut r, shape), nodal(&mut r, shape), nodal(&mut r, shape))?;
            let q = shell_inner(&u, &u, ShellInnerKind::WeightedR)? / shell_inner(&u, &u, ShellInnerKind::L2Qeps)?;
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    rec.ge("‖u‖²_r / ‖u‖² ≥ 1", lo, 1.0, "min over fields");
    rec.le("‖u‖²_r / ‖u‖² ≤ 9/4", hi, 2.25, "max over fields");
    Ok(())
}

/// Reported constants c₁ = ‖Ñu‖_{L⁶}/‖Ñu‖_V and c₂ = ‖Ñu‖²_{L³}/(ε‖Ñu‖²_V).
pub(crate) fn ladyzhenskaya(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("ladyzhenskaya", report);
    let mut r = rng(opts.seed, 4);
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    let nfields = 25;
    for &eps in &opts.eps_list {
        let basis = poincare_basis(eps, 5, 8)?;
        let (mut w1, mut w2) = (Worst::default(), Worst::default());
        for _ in 0..nfields {
            let f = basis.fluctuation(&random_coeffs(&mut r, &basis, usize::MAX));
            let v = basis.curl_energy(&f);
            let g = basis.synthesize(&f)?;
            w1.see(lp_norm(&g, 6.0) / v.sqrt());
            w2.see(lp_norm(&g, 3.0).powi(2) / (eps * v));
        }
        rec.report(format!("c1 at eps {eps}"), w1.0);
        rec.report(format!("c2 at eps {eps}"), w2.0);
        c1.push(w1.0);
        c2.push(w2.0);
    }
    let k1 = c1.iter().cloned().fold(0.0, f64::max);
    let k2 = c2.iter().cloned().fold(0.0, f64::max);
    rec.report("c1", k1);
    rec.report("c2", k2);
    // Bounded across the sweep: no ε exceeds twice the value at the largest ε.
    rec.le("L⁶ ratio bounded across ε", k1 / c1[0], 2.0, format!("max/first, {nfields} fields per ε"));
    rec.le("L³ ratio ‖Ñu‖²_{L³}/(ε‖Ñu‖²_V) bounded across ε", k2 / c2[0], 2.0, "max/first");
    Ok(())
}

/// Radial differentiation identities, curl–Stokes adjointness, the mean
/// sector scaling of the advection term and the basis boundary rows.
pub(crate) fn identities(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("identities", report);
    let mut r = rng(opts.seed, 5);
    super::sphere::laplace_beltrami_eigen(&mut rec)?;

    // Δ(R_ε ψ) = r⁻³ Δ′ψ.
    let grid = Arc::new(SphereGrid::new(10));
    let mut w = Worst::default();
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 16, grid.clone())?);
        let psi = random_scalar(&mut r, 10);
        let lhs = laplacian_scalar(&r_scalar(&grid.synthesize(&psi)?, &geom)?)?;
        let lap = grid.synthesize(&laplace_beltrami(&psi))?;
        let nodes = geom.radial_nodes();
        let rhs = Array3::from_shape_fn(geom.shape(), |(k, i, j)| lap.values[[i, j]] / nodes[k].powi(3));
        w.see(max_abs3(&(&lhs.values - &rhs)) / max_abs3(&rhs));
    }
    rec.le("Δ(R_ε ψ) = r⁻³ Δ′ψ", w.0, 1e-8, "lmax 10, nr 16, max relative");

    // ‖∇R_ε ψ‖² = ε/(1+ε)(‖ψ‖² + ‖∇′ψ‖²).
    let mut w = Worst::default();
    let psi = random_scalar(&mut r, 8);
    let h1 = psi.norm().powi(2) + laplace_beltrami(&psi).dot(&psi).abs();
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 16, grid.clone())?);
        let g = grad(&r_scalar(&grid.synthesize(&psi)?, &geom)?)?;
        let n = shell_norm(&g, ShellInnerKind::L2Qeps)?.powi(2);
        w.see(rel(n, eps / (1.0 + eps) * h1));
        rec.report(format!("‖∇R_ε ψ‖²/ε at eps {eps}"), n / eps);
    }
    rec.le("‖∇R_ε ψ‖² = ε/(1+ε)‖ψ‖²_{H¹}", w.0, 1e-8, "bounded by ‖ψ‖²_{H¹} for all ε");

    // div R̊_ε u = 0 for divergence-free u; curl of a constant.
    let mut w = Worst::default();
    let mut wc = Worst::default();
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 8, grid.clone())?);
        let u = crate::sphere::velocity(&grid, &random_divfree(&mut r, 10))?;
        let lifted = r_ring(&u, &geom)?;
        w.see(div(&lifted)?.max_abs() / lifted.max_abs());
        let c = ShellVectorField::from_cartesian(geom.clone(), |_| [0.3, -1.2, 0.7]);
        wc.see(curl(&c)?.max_abs());
    }
    rec.le("div R̊_ε u = 0 for div′u = 0", w.0, 1e-9, "relative to max |R̊u|");
    rec.le("curl of a constant Cartesian field = 0", wc.0, 1e-9, "");

    // curl–Stokes identities on random basis fields.
    let grid7 = Arc::new(SphereGrid::new(7));
    let (mut wa, mut ws, mut wl, mut wp, mut w14, mut w23, mut wh) =
        (Worst::default(), Worst::default(), Worst::default(), Worst::default(), Worst::default(), Worst::default(), Worst::default());
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 16, grid7.clone())?);
        let basis = ShellBasis::new(geom.clone(), 6)?;
        for _ in 0..3 {
            let u = basis.synthesize(&random_coeffs(&mut r, &basis, RESOLVED))?;
            let v = basis.synthesize(&random_coeffs(&mut r, &basis, RESOLVED))?;
            let (cu, cv) = (curl(&u)?, curl(&v)?);
            let (au, av) = (apply_stokes_eps(&u)?, apply_stokes_eps(&v)?);
            let ncu = shell_norm(&u, ShellInnerKind::VEpsSeminorm)?;
            let ncv = shell_norm(&v, ShellInnerKind::VEpsSeminorm)?;
            let lhs = shell_inner(&cu, &cv, ShellInnerKind::L2Qeps)?;
            wa.see((lhs - shell_inner(&u, &av, ShellInnerKind::L2Qeps)?).abs() / (ncu * ncv));
            let nu_ = shell_norm(&u, ShellInnerKind::L2Qeps)?;
            let nv = shell_norm(&v, ShellInnerKind::L2Qeps)?;
            let sym = shell_inner(&au, &v, ShellInnerKind::L2Qeps)? - shell_inner(&u, &av, ShellInnerKind::L2Qeps)?;
            ws.see(sym.abs() / (nu_ * nv * (ncu / nu_) * (ncv / nv)).max(nu_ * nv));
            let lap = laplacian_vector(&u)?;
            wl.see((-shell_inner(&lap, &u, ShellInnerKind::L2Qeps)? - ncu * ncu).abs() / (ncu * ncu));
            let p1 = basis.solve_mass(&basis.project_loads(&au)?)?;
            let p2 = basis.solve_mass(&basis.project_loads(&lap.scaled(-1.0))?)?;
            let mut d = p1.clone();
            d.axpy(-1.0, &p2);
            wp.see((basis.energy(&d) / basis.energy(&p1)).sqrt());
            let mt = m_tilde(&u);
            let nt = n_tilde(&u);
            let (cm, cn) = (curl(&mt)?, curl(&nt)?);
            let cross = shell_inner(&cm, &cn, ShellInnerKind::WeightedR)?;
            let total = shell_inner(&cu, &cu, ShellInnerKind::WeightedR)?;
            w14.see(cross.abs() / (ncu * ncu));
            let split = shell_inner(&cm, &cm, ShellInnerKind::WeightedR)? + shell_inner(&cn, &cn, ShellInnerKind::WeightedR)?;
            w23.see(rel(total, split));
            let (dv, nn) = h_eps_residuals(&u)?;
            wh.see(dv.max(nn) / u.max_abs());
        }
    }
    rec.le("(curl u, curl v) = (u, A_ε v)", wa.0, 1e-8, "nr 16, relative to ‖u‖_V‖v‖_V");
    rec.le("(A_ε u, v) = (u, A_ε v)", ws.0, 1e-8, "");
    rec.le("(−Δu, u) = ‖curl u‖²", wl.0, 1e-8, "");
    rec.le("P_ε(curl curl u) = P_ε(−Δu)", wp.0, 1e-7, "Galerkin projection, relative");
    rec.le("(curl M̃u, curl Ñu)_r = 0", w14.0, 1e-9, "relative to ‖u‖²_V");
    rec.le("‖curl u‖²_r = ‖curl M̃u‖²_r + ‖curl Ñu‖²_r", w23.0, 1e-8, "");
    rec.le("basis fields: div u = 0, u·n = 0", wh.0, 1e-8, "relative to max |u|");

    let mut wb = Worst::default();
    for &eps in &opts.eps_list {
        for nr in [6, 8, 12] {
            wb.see(poincare_basis(eps, 6, nr)?.boundary_residual());
        }
    }
    rec.le("basis boundary rows (u·n, curl u × n)", wb.0, 1e-9, "max over profiles and radii");

    // Advection: antisymmetry and the mean-sector scaling ε/(1+ε).
    let (mut wanti, mut wscale) = (Worst::default(), Worst::default());
    let lw = 5;
    for &eps in &opts.eps_list {
        let basis = poincare_basis(eps, lw, 16)?;
        for _ in 0..2 {
            let cu = random_coeffs(&mut r, &basis, RESOLVED);
            let cv = random_coeffs(&mut r, &basis, RESOLVED);
            let b = advection_loads(&basis, &cu, &cv)?;
            let (nu_, nv, nvv) = (basis.energy(&cu).sqrt(), basis.energy(&cv).sqrt(), basis.curl_energy(&cv).sqrt());
            wanti.see(b.dot(&cv).abs() / (nu_ * nv * nvv));
            let wf = random_divfree(&mut r, lw - 1);
            let phi = random_divfree(&mut r, lw);
            let shell = advection_loads(&basis, &basis.lift(&wf), &basis.lift(&wf))?.dot(&basis.lift(&phi));
            let sgrid = SphereGrid::new(lw);
            let sphere = nonlinear_term(&sgrid, &wf.resized(lw))?.inner(&phi, NormKind::L2S2);
            let scale = wf.norm(NormKind::L2S2) * wf.norm(NormKind::VSeminorm) * phi.norm(NormKind::L2S2);
            wscale.see((shell - eps / (1.0 + eps) * sphere).abs() / (eps * scale));
        }
    }
    rec.le("⟨B_ε(u, v), v⟩ = 0", wanti.0, 1e-9, "relative to ‖u‖‖v‖‖v‖_V");
    rec.le("⟨B_ε(R̊w, R̊w), R̊φ⟩ = ε/(1+ε)⟨(w·∇′)w, φ⟩", wscale.0, 1e-8, "relative to ε‖w‖‖w‖_V‖φ‖");

    let geom = Arc::new(ShellGeometry::new(0.2, 2, grid.clone())?);
    rec.flag("shell_diff with nr < 3 is a configuration error", curl(&ShellVectorField::zeros(geom)).is_err(), "");
    Ok(())
}
