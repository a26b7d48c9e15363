//! Solver dynamics: decay, energy ledgers, shell trajectory invariants,
//! Monte Carlo statistics and moment scaling.

use std::sync::Arc;

use ndarray::{Array2, Axis};

use super::{random_divfree, rel, rng, Recorder, SuiteOptions, SuiteReport, Worst};
use crate::error::Result;
use crate::harness::config::{NoiseConfig, StudyConfig};
use crate::harness::study::run_convergence_study;
use crate::noise::{sample_path, NoiseModel};
use crate::shell::{h_eps_residuals, ShellGeometry};
use crate::shell_solver::{pollution, FlowMode, ShellBasis, ShellSolver, ShellSolverConfig, ShellTrajectory};
use crate::sphere::{div, velocity, DivFreeSpectral, NormKind, StreamMode};
use crate::sphere_solver::{SphereSolver, SphereSolverConfig, SphereTrajectory, TimeScheme};

fn lmodes(lmax: usize, m: &[(usize, i64, f64)]) -> Result<DivFreeSpectral> {
    DivFreeSpectral::from_modes(lmax, &m.iter().map(|&t| t.into()).collect::<Vec<StreamMode>>())
}

fn sphere_run(cfg: SphereSolverConfig, u0: &DivFreeSpectral) -> Result<SphereTrajectory> {
    SphereSolver::new(cfg)?.run(u0, None)
}

/// Worst excess of E + D/2 over E₀ + (1/ν)∫‖f‖²_{V′} beyond the identity
/// residual at every sample.
fn sphere_inequality_excess(tr: &SphereTrajectory) -> f64 {
    let e0 = tr.initial_energy;
    let mut w = f64::NEG_INFINITY;
    for s in &tr.samples {
        let l = &s.ledger;
        let res = (s.energy + l.dissipation - e0 - l.forcing_work).abs();
        w = w.max(s.energy + 0.5 * l.dissipation - e0 - l.forcing_dual - res);
    }
    w
}

fn shell_inequality_excess(tr: &ShellTrajectory) -> f64 {
    let e0 = tr.initial_energy;
    let mut w = f64::NEG_INFINITY;
    for s in &tr.samples {
        let l = &s.ledger;
        let res = (s.energy + l.dissipation - e0 - l.forcing_work).abs();
        w = w.max(s.energy + 0.5 * l.dissipation - e0 - l.forcing_dual - res);
    }
    w
}

/// max over points of |∫ r (Ñu)_tan dr| / ∫ r |(Ñu)_tan| dr.
fn fluct_r_moment(basis: &ShellBasis, c: &crate::shell_solver::ShellCoeffs) -> Result<f64> {
    let f = basis.synthesize(&basis.fluctuation(c))?;
    let geom = basis.geometry();
    let w = geom.radial_weights_r1();
    let mut worst: f64 = 0.0;
    for comp in [&f.lambda, &f.phi] {
        let (nlat, nlon) = (comp.dim().1, comp.dim().2);
        let mut m = Array2::<f64>::zeros((nlat, nlon));
        let mut s = Array2::<f64>::zeros((nlat, nlon));
        for (k, lvl) in comp.axis_iter(Axis(0)).enumerate() {
            m.scaled_add(w[k], &lvl);
            s.scaled_add(w[k], &lvl.mapv(f64::abs));
        }
        let smax = s.iter().fold(0.0f64, |a, v| a.max(*v));
        if smax > 0.0 {
            worst = worst.max(m.iter().fold(0.0f64, |a, v| a.max(v.abs())) / smax);
        }
    }
    Ok(worst)
}

pub(crate) fn dynamics(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("dynamics", report);
    let mut r = rng(opts.seed, 21);
    let want = (-0.6f64).exp();

    // Single-mode decay, ν = 0.1, l = 2, t = 1, dt = 1e-3.
    for scheme in [TimeScheme::IntegratingFactor, TimeScheme::ImexEuler] {
        let mut cfg = SphereSolverConfig::new(8, 0.1, 1e-3, 1.0);
        cfg.scheme = scheme;
        cfg.sample_every = 1000;
        let u0 = DivFreeSpectral::mode(8, 2, 0, 1.0)?;
        let tr = sphere_run(cfg, &u0)?;
        let ratio = (tr.samples.last().unwrap().energy / tr.initial_energy).sqrt();
        rec.report(format!("decay ratio {scheme:?}"), ratio);
        rec.le(format!("‖u(1)‖/‖u₀‖ = e^(−0.6) for curl′Y_20, {scheme:?}"), (ratio - want).abs(), 1e-3, "ν = 0.1, dt = 1e-3");
    }

    // Nonlinear energy neutrality.
    let u0 = random_divfree(&mut r, 10).scaled(3.0);
    let mut cfg = SphereSolverConfig::new(10, 0.05, 1e-3, 0.2);
    cfg.sample_every = 50;
    let tr = sphere_run(cfg, &u0)?;
    let ratio = tr.samples.last().unwrap().ledger.nonlinear_ratio;
    rec.le("per-step |2dt(B(u),u)| / dissipation", ratio, 1e-9, "200 steps, random u₀ at lmax 10");

    // Energy identity residual halves under dt halving (unforced NSE).
    let u0 = lmodes(10, &[(1, 0, 0.3), (2, 1, -0.2), (3, 0, 0.15), (4, -3, 0.1)])?;
    let mut res = Vec::new();
    for dt in [1e-2, 5e-3] {
        let mut cfg = SphereSolverConfig::new(10, 0.05, dt, 0.5);
        cfg.sample_every = 1_000_000;
        res.push(sphere_run(cfg, &u0)?.energy_residual().abs());
    }
    rec.report("sphere residual dt=1e-2", res[0]);
    rec.report("sphere residual dt=5e-3", res[1]);
    let q = res[0] / res[1];
    rec.ge("sphere energy residual ratio under dt halving ≥ 1.5", q, 1.5, "");
    rec.le("sphere energy residual ratio under dt halving ≤ 2.5", q, 2.5, "");

    // Forced energy inequality along the trajectory.
    let mut cfg = SphereSolverConfig::new(10, 0.05, 1e-3, 0.5);
    cfg.forcing = Some(lmodes(10, &[(3, 1, 0.5)])?);
    cfg.sample_every = 10;
    let tr = sphere_run(cfg, &u0)?;
    rec.le("‖u‖² + ν∫‖curl′u‖² ≤ ‖u₀‖² + (1/ν)∫‖f‖²_{V′} + |residual|", sphere_inequality_excess(&tr), 0.0, "all samples");

    // Divergence-free states, absent mean mode, equicontinuity.
    let g = crate::sphere::SphereGrid::new(10);
    let (mut wd, mut m0) = (Worst::default(), 0.0f64);
    for u in &tr.states {
        let d = g.synthesize(&div(&g, &velocity(&g, u)?)?)?;
        wd.see(d.values.iter().fold(0.0f64, |a, v| a.max(v.abs())) / u.norm(NormKind::L2S2));
        m0 = m0.max(u.coeffs()[0].abs());
    }
    rec.le("emitted states: |div′u| ≤ 1e-9‖u‖", wd.0, 1e-9, "");
    rec.le("l = 0 stream coefficient stays zero", m0, 0.0, "");
    let eq = tr.equicontinuity(5);
    rec.report("equicontinuity sup ‖u(t+θ) − u(t)‖_{D(A⁻¹)}/θ^{1/2}", eq);
    rec.flag("equicontinuity diagnostic finite", eq.is_finite(), format!("θ = 0.05, value {eq:.4e}"));

    let z = sphere_run(SphereSolverConfig::new(6, 0.1, 1e-2, 0.2), &DivFreeSpectral::zeros(6))?;
    rec.le("sphere: zero data → zero", z.states.iter().map(|u| u.norm(NormKind::L2S2)).fold(0.0, f64::max), 0.0, "");
    let t0 = sphere_run(SphereSolverConfig::new(10, 0.05, 1e-3, 0.0), &u0)?;
    rec.flag("sphere: T = 0 → [u₀]", t0.states.len() == 1 && t0.states[0] == u0, "");

    // Shell trajectories.
    let lmax = 6;
    let grid = Arc::new(crate::sphere::SphereGrid::new(lmax + 1));
    let u0 = lmodes(lmax, &[(1, 0, 0.3), (2, 1, -0.2), (3, 0, 0.15), (4, -3, 0.1)])?;
    let forcing = lmodes(lmax, &[(3, 1, 0.5)])?;
    let (mut wpy, mut wpo, mut wh, mut wm, mut wineq) =
        (Worst::default(), Worst::default(), Worst::default(), Worst::default(), f64::NEG_INFINITY);
    let mut leak = Vec::new();
    for &eps in &opts.eps_list {
        let geom = Arc::new(ShellGeometry::new(eps, 8, grid.clone())?);
        for mode in [FlowMode::Stokes, FlowMode::Nse] {
            let mut cfg = ShellSolverConfig::new(0.05, 1e-3, 0.2);
            cfg.mode = mode;
            cfg.forcing = Some(forcing.clone());
            cfg.sample_every = 20;
            let solver = ShellSolver::new(geom.clone(), lmax, cfg)?;
            let b = solver.basis();
            let mut c0 = b.lift(&u0);
            c0.axpy(eps, &pollution(b, &u0));
            let tr = solver.run_shell(c0, None, true)?;
            for (s, c) in tr.samples.iter().zip(&tr.states) {
                wpy.see(rel(s.energy, s.mean_energy + s.fluct_energy));
                wpo.see(s.fluct_energy.sqrt() / (2.0 * eps * s.fluct_curl_energy.sqrt()));
                let u = b.synthesize(c)?;
                let (d, n) = h_eps_residuals(&u)?;
                wh.see(d.max(n) / u.max_abs());
                wm.see(fluct_r_moment(b, c)?);
            }
            wineq = wineq.max(shell_inequality_excess(&tr));
        }
        // Leakage from lifted data in Stokes mode.
        if eps > 0.06 {
            let mut cfg = ShellSolverConfig::new(0.05, 1e-3, 0.5);
            cfg.forcing = Some(forcing.clone());
            cfg.sample_every = 25;
            let solver = ShellSolver::new(geom.clone(), lmax, cfg)?;
            let tr = solver.run_shell(solver.basis().lift(&u0), None, false)?;
            let l = tr.samples.iter().map(|s| (s.fluct_energy / s.energy).sqrt()).fold(0.0, f64::max);
            rec.report(format!("leakage sup ‖Ñu‖/‖u‖ at eps {eps}"), l);
            rec.report(format!("leakage constant C at eps {eps}"), l / eps);
            leak.push(l);
        }
    }
    rec.le("shell: ‖u‖² = ‖M̃u‖² + ‖Ñu‖² along trajectories", wpy.0, 1e-8, "Stokes and NSE, all ε");
    rec.le("shell: ‖β̃_ε‖ ≤ 2ε‖curl β̃_ε‖ along trajectories", wpo.0, 1.0 + 1e-6, "ratio");
    rec.le("shell: div u and u·n along trajectories", wh.0, 1e-8, "relative to max |u|");
    rec.le("shell: ∫ r β̃_ε dr = 0 (tangential) along trajectories", wm.0, 1e-9, "relative to ∫ r |β̃_ε| dr");
    rec.le("shell: energy inequality with |residual|", wineq, 0.0, "forced, all samples");
    let dec = leak.windows(2).all(|w| w[1] < w[0]);
    rec.flag("shell: lifted-data leakage ‖Ñu‖/‖u‖ decreasing in ε", dec, leak.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "));

    let geom = Arc::new(ShellGeometry::new(0.2, 6, Arc::new(crate::sphere::SphereGrid::new(6)))?);
    let solver = ShellSolver::new(geom.clone(), 5, ShellSolverConfig::new(0.05, 1e-2, 0.2))?;
    let z = solver.run_shell(solver.basis().zeros(), None, true)?;
    let zmax = z.states.iter().map(|c| c.dot(c)).fold(0.0, f64::max);
    rec.le("shell: zero data → zero", zmax, 0.0, "");
    let s0 = ShellSolver::new(geom.clone(), 5, ShellSolverConfig::new(0.05, 1e-2, 0.0))?;
    let c0 = s0.basis().lift(&u0);
    let t0 = s0.run_shell(c0.clone(), None, true)?;
    rec.flag("shell: T = 0 → [u₀]", t0.states.len() == 1 && t0.states[0] == c0, "");

    // Shell energy residual halving.
    let mut res = Vec::new();
    for dt in [1e-2, 5e-3] {
        let mut cfg = ShellSolverConfig::new(0.05, dt, 0.5);
        cfg.sample_every = 1_000_000;
        let solver = ShellSolver::new(geom.clone(), 5, cfg)?;
        let mut c0 = solver.basis().lift(&u0);
        c0.axpy(0.2, &pollution(solver.basis(), &u0));
        res.push(solver.run_shell(c0, None, false)?.energy_residual().abs());
    }
    let q = res[0] / res[1];
    rec.report("shell residual dt=1e-2", res[0]);
    rec.report("shell residual dt=5e-3", res[1]);
    rec.ge("shell energy residual ratio under dt halving ≥ 1.5", q, 1.5, "Stokes, ε = 0.2");
    rec.le("shell energy residual ratio under dt halving ≤ 2.5", q, 2.5, "");
    Ok(())
}

/// Linear noise-driven sphere runs against the OU closed form, and the
/// path-averaged energy bound.
pub(crate) fn stochastic(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("stochastic", report);
    let paths = 32u64;
    let (nu, dt, t) = (0.05, 1e-3, 1.0);
    let lmax = 6;
    // A single direction g¹ spread over three harmonics.
    let g1 = lmodes(lmax, &[(1, 1, 0.4), (2, 0, 0.3), (3, -2, 0.2)])?;
    let model = NoiseModel::new(vec![g1.clone()]);
    let mut cfg = SphereSolverConfig::new(lmax, nu, dt, t);
    cfg.noise = Some(model.clone());
    cfg.nonlinear = false;
    cfg.sample_every = 250;
    let solver = SphereSolver::new(cfg.clone())?;
    let nsteps = cfg.nsteps();
    let mut finals = Vec::new();
    for p in 0..paths {
        let path = sample_path(opts.seed, p, 1, dt, nsteps)?;
        let tr = solver.run(&DivFreeSpectral::zeros(lmax), Some(&path))?;
        finals.push(tr.samples.last().unwrap().energy);
    }
    let mut ou = 0.0;
    for (k, l, _) in crate::sphere::modes(lmax) {
        if l == 0 {
            continue;
        }
        let ll = (l * (l + 1)) as f64;
        let g = g1.coeffs()[k];
        ou += ll * g * g * (1.0 - (-2.0 * nu * ll * t).exp()) / (2.0 * nu * ll);
    }
    let n = paths as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let sd = (finals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    rec.report("OU closed form E‖u(1)‖²", ou);
    rec.report("OU Monte Carlo mean", mean);
    rec.report("OU Monte Carlo standard error", se);
    rec.le("E‖u(t)‖² matches the OU variance within 3σ", (mean - ou).abs() / se, 3.0, "32 paths, t = 1, in units of SE");

    // Energy bound ‖u‖² + ν∫‖curl′u‖² ≤ ‖u₀‖² + (1/ν)∫‖f‖²_{V′} + K∫‖G‖²_HS.
    let nmodel = NoiseModel::from_modes(lmax, &NoiseConfig::default().modes)?;
    let mut cfg = SphereSolverConfig::new(lmax, nu, dt, 0.5);
    cfg.noise = Some(nmodel.clone());
    cfg.sample_every = 50;
    let solver = SphereSolver::new(cfg.clone())?;
    let u0 = lmodes(lmax, &[(1, 0, 0.3), (2, 1, -0.2), (3, 0, 0.15), (4, -3, 0.1)])?;
    let mut lhs: Vec<Vec<f64>> = Vec::new();
    let mut rhs0 = Vec::new();
    let mut qv = Vec::new();
    for p in 0..paths {
        let path = sample_path(opts.seed ^ 0x5eed, p, nmodel.n(), dt, cfg.nsteps())?;
        let tr = solver.run(&u0, Some(&path))?;
        lhs.push(tr.samples.iter().map(|s| s.energy + 0.5 * s.ledger.dissipation).collect());
        if p == 0 {
            rhs0 = tr.samples.iter().map(|s| tr.initial_energy + s.ledger.forcing_dual).collect();
            qv = tr.samples.iter().map(|s| s.ledger.noise_qv).collect();
        }
    }
    let (mut excess, mut k_emp) = (f64::NEG_INFINITY, 0.0f64);
    for i in 0..rhs0.len() {
        let col: Vec<f64> = lhs.iter().map(|v| v[i]).collect();
        let m = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let rhs = rhs0[i] + qv[i];
        excess = excess.max((m - rhs - 3.0 * sd / n.sqrt()) / rhs);
        if qv[i] > 0.0 {
            k_emp = k_emp.max((m - rhs0[i]) / qv[i]);
        }
    }
    rec.report("empirical K", k_emp);
    rec.le(
        "E[‖u‖² + ν∫‖curl′u‖²] ≤ ‖u₀‖² + (1/ν)∫‖f‖²_{V′} + K∫‖G‖²_HS, K = 1",
        excess,
        1e-12,
        format!("relative excess, 32 paths, 3σ slack, f = 0; empirical K = {k_emp:.3}"),
    );
    Ok(())
}

/// sup_t ‖β̃_ε‖^p / ε^{p/2} across the sweep with polluted data and noise.
pub(crate) fn moment(opts: &SuiteOptions, report: &mut SuiteReport) -> Result<()> {
    let mut rec = Recorder::new("moment", report);
    let cfg = StudyConfig {
        eps_list: opts.eps_list.clone(),
        lmax: 6,
        nr: 6,
        t_final: 0.2,
        stochastic: true,
        paths: 4,
        seed: opts.seed,
        moment_p: opts.moment_p,
        initial_pollution: 1.0,
        noise_pollution: 1.0,
        sample_every: 20,
        ..StudyConfig::default()
    };
    let out = run_convergence_study(&cfg, 1)?;
    for e in &out.report.entries {
        rec.report(format!("moment p={} at eps {}", opts.moment_p, e.eps), e.moment.unwrap_or(f64::NAN));
    }
    let ms: Vec<f64> = out.report.entries.iter().map(|e| e.moment.unwrap_or(f64::NAN)).collect();
    let ratio = ms.iter().cloned().fold(0.0, f64::max) / ms[0];
    rec.le(
        format!("sup_t ‖β̃_ε‖^{} / ε^{} bounded across ε", opts.moment_p, opts.moment_p / 2.0),
        if ms.iter().all(|m| m.is_finite()) { ratio } else { f64::NAN },
        2.0,
        "max over ε relative to the largest ε, 4 paths",
    );
    Ok(())
}
