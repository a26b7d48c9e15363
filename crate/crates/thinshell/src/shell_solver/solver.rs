use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{ShellBasis, ShellCoeffs};
use super::nonlinear::advection_loads;
use crate::error::{config, Error, Result};
use crate::noise::{NoiseModel, WienerPath};
use crate::shell::ShellGeometry;
use crate::sphere::{modes, DivFreeSpectral};
use crate::sphere_solver::TimeScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// Linear Stokes system.
    #[default]
    Stokes,
    /// Full Navier–Stokes.
    Nse,
}

#[derive(Clone, Debug)]
pub struct ShellSolverConfig {
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub mode: FlowMode,
    pub scheme: TimeScheme,
    /// Sphere forcing, applied through its lift R̊_ε.
    pub forcing: Option<DivFreeSpectral>,
    /// Sphere noise, applied through its lift.
    pub noise: Option<NoiseModel>,
    /// Amplitude a of the fluctuation added to each lifted noise field:
    /// g̃ = R̊_ε g + a·ε·η with η of zero radial moment.
    pub noise_pollution: f64,
    pub sample_every: usize,
}

impl ShellSolverConfig {
    pub fn new(nu: f64, dt: f64, t_final: f64) -> Self {
        ShellSolverConfig {
            nu,
            dt,
            t_final,
            mode: FlowMode::Stokes,
            scheme: TimeScheme::IntegratingFactor,
            forcing: None,
            noise: None,
            noise_pollution: 0.0,
            sample_every: 1,
        }
    }
    pub fn nsteps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Shell energy budget, same conventions as the sphere ledger.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShellLedger {
    pub dissipation: f64,
    pub forcing_work: f64,
    pub forcing_dual: f64,
    pub noise_qv: f64,
    pub martingale: f64,
    /// ν Σ dt ‖curl Ñ_ε u‖².
    pub fluct_dissipation: f64,
}

#[derive(Clone, Debug)]
pub struct ShellState {
    pub t: f64,
    pub step: usize,
    pub coeffs: ShellCoeffs,
    pub ledger: ShellLedger,
}

/// Decomposition diagnostics at one sample time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShellSample {
    pub t: f64,
    pub energy: f64,
    pub curl_energy: f64,
    /// ‖M̃_ε u‖².
    pub mean_energy: f64,
    /// ‖Ñ_ε u‖².
    pub fluct_energy: f64,
    /// ‖curl Ñ_ε u‖².
    pub fluct_curl_energy: f64,
    pub ledger: ShellLedger,
}

#[derive(Clone, Debug)]
pub struct ShellTrajectory {
    /// α_ε = M̊_ε u at each sample.
    pub alpha: Vec<DivFreeSpectral>,
    pub samples: Vec<ShellSample>,
    pub initial_energy: f64,
    pub states: Vec<ShellCoeffs>,
}

impl ShellTrajectory {
    pub fn energy_residual(&self) -> f64 {
        let s = self.samples.last().expect("non-empty trajectory");
        let l = &s.ledger;
        s.energy + l.dissipation - self.initial_energy - l.forcing_work - l.noise_qv - l.martingale
    }
}

/// c ← A c + B g for one degree and one potential family.
#[derive(Clone, Debug)]
struct Stepper {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

fn stepper(m: &DMatrix<f64>, k: &DMatrix<f64>, nu_dt: f64, scheme: TimeScheme) -> Result<Stepper> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Stepper { a: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, 0) });
    }
    let singular = || Error::Config("radial solve is singular".into());
    match scheme {
        TimeScheme::ImexEuler => {
            let lhs = m + k * nu_dt;
            let inv = lhs.try_inverse().ok_or_else(singular)?;
            Ok(Stepper { a: &inv * m, b: inv })
        }
        TimeScheme::IntegratingFactor => {
            let ch = m.clone().cholesky().ok_or_else(singular)?;
            let l = ch.l();
            let linv = l.clone().try_inverse().ok_or_else(singular)?;
            let c = &linv * k * linv.transpose();
            let c = (&c + c.transpose()) * 0.5;
            let eig = c.symmetric_eigen();
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| (-nu_dt * v).exp()));
            let q = &eig.eigenvectors;
            let e = linv.transpose() * q * d * q.transpose() * l.transpose();
            let minv = ch.inverse();
            Ok(Stepper { b: &e * minv, a: e })
        }
    }
}

fn apply(s: &Stepper, c: &[f64], g: &[f64]) -> Vec<f64> {
    if c.is_empty() {
        return vec![];
    }
    let v = &s.a * DVector::from_column_slice(c) + &s.b * DVector::from_column_slice(g);
    v.iter().copied().collect()
}

pub struct ShellSolver {
    basis: ShellBasis,
    config: ShellSolverConfig,
    steppers: Vec<(Stepper, Stepper)>,
    forcing_load: Option<ShellCoeffs>,
    forcing_dual_sq: f64,
    noise_loads: Vec<ShellCoeffs>,
    noise_norms: Vec<f64>,
}

impl ShellSolver {
    pub fn new(geometry: Arc<ShellGeometry>, lmax: usize, config: ShellSolverConfig) -> Result<Self> {
        if !(config.nu > 0.0) || !(config.dt > 0.0) || !(config.t_final >= 0.0) || config.sample_every == 0 {
            return config_err("require nu > 0, dt > 0, t_final >= 0, sample_every >= 1");
        }
        if config.mode == FlowMode::Nse && geometry.sphere_grid().lmax() < lmax + 1 {
            return config_err("NSE mode needs a sphere grid resolving lmax + 1");
        }
        let basis = ShellBasis::new(geometry, lmax)?;
        let mut steppers = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let m = basis.matrices(l);
            if l == 0 {
                steppers.push((
                    Stepper { a: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, 0) },
                    Stepper { a: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, 0) },
                ));
                continue;
            }
            let nd = config.nu * config.dt;
            steppers.push((
                stepper(&m.mass_tor, &m.stiff_tor, nd, config.scheme)?,
                stepper(&m.mass_pol, &m.stiff_pol, nd, config.scheme)?,
            ));
        }
        let forcing_load = config.forcing.as_ref().map(|f| basis.lift_load(f));
        let forcing_dual_sq = match &forcing_load {
            Some(f) => dual_norm_sq(&basis, f)?,
            None => 0.0,
        };
        let mut noise_loads = Vec::new();
        if let Some(model) = &config.noise {
            for g in model.coefficients() {
                let mut load = basis.lift_load(g);
                if config.noise_pollution != 0.0 {
                    let eta = pollution(&basis, g);
                    let eta_load = mass_apply(&basis, &eta);
                    load.axpy(config.noise_pollution * basis.geometry().eps(), &eta_load);
                }
                noise_loads.push(load);
            }
        }
        let mut noise_norms = Vec::new();
        for g in &noise_loads {
            noise_norms.push(g.dot(&basis.solve_mass(g)?));
        }
        Ok(ShellSolver { basis, config, steppers, forcing_load, forcing_dual_sq, noise_loads, noise_norms })
    }

    pub fn basis(&self) -> &ShellBasis {
        &self.basis
    }
    pub fn config(&self) -> &ShellSolverConfig {
        &self.config
    }

    /// ⟨B_ε(u, u), b_i⟩.
    pub fn nonlinear_term_shell(&self, c: &ShellCoeffs) -> Result<ShellCoeffs> {
        advection_loads(&self.basis, c, c)
    }

    pub fn initial_state(&self, c0: ShellCoeffs) -> ShellState {
        ShellState { t: 0.0, step: 0, coeffs: c0, ledger: ShellLedger::default() }
    }

    pub fn step_shell(&self, state: &ShellState, dw: Option<&[f64]>) -> Result<ShellState> {
        let cfg = &self.config;
        let dt = cfg.dt;
        let nnoise = self.noise_loads.len();
        match dw {
            Some(w) if w.len() != nnoise => return config_err("noise increment length mismatch"),
            None if nnoise > 0 => return config_err("noise configured but no increments supplied"),
            _ => {}
        }
        let c = &state.coeffs;
        let mut ledger = state.ledger.clone();
        ledger.dissipation += 2.0 * cfg.nu * dt * self.basis.curl_energy(c);
        let fl = self.basis.fluctuation(c);
        ledger.fluct_dissipation += cfg.nu * dt * self.basis.curl_energy(&fl);
        let mut load = self.basis.zeros();
        if let Some(f) = &self.forcing_load {
            ledger.forcing_work += 2.0 * dt * f.dot(c);
            ledger.forcing_dual += dt * self.forcing_dual_sq / cfg.nu;
            load.axpy(dt, f);
        }
        if cfg.mode == FlowMode::Nse {
            load.axpy(-dt, &self.nonlinear_term_shell(c)?);
        }
        if let Some(w) = dw {
            let fac = cfg.noise.as_ref().map(|n| n.factor(state.step)).unwrap_or(1.0);
            for (j, g) in self.noise_loads.iter().enumerate() {
                load.axpy(fac * w[j], g);
                ledger.martingale += 2.0 * fac * w[j] * g.dot(c);
                ledger.noise_qv += dt * fac * fac * self.noise_norms[j];
            }
        }
        let mut next = self.basis.zeros();
        for (lm, l, _) in modes(self.basis.lmax()) {
            if l == 0 {
                continue;
            }
            let (st, sp) = &self.steppers[l];
            let t = apply(st, c.tor_mode(lm), load.tor_mode(lm));
            next.tor_mode_mut(lm).copy_from_slice(&t);
            let p = apply(sp, c.pol_mode(lm), load.pol_mode(lm));
            next.pol_mode_mut(lm).copy_from_slice(&p);
        }
        if !next.is_finite() {
            return Err(Error::Divergence { step: state.step + 1, what: "non-finite shell state".into() });
        }
        Ok(ShellState { t: (state.step + 1) as f64 * dt, step: state.step + 1, coeffs: next, ledger })
    }

    fn sample(&self, s: &ShellState) -> (DivFreeSpectral, ShellSample) {
        let b = &self.basis;
        let alpha = b.mean_stream(&s.coeffs);
        let fl = b.fluctuation(&s.coeffs);
        let sample = ShellSample {
            t: s.t,
            energy: b.energy(&s.coeffs),
            curl_energy: b.curl_energy(&s.coeffs),
            mean_energy: b.energy(&b.lift(&alpha)),
            fluct_energy: b.energy(&fl),
            fluct_curl_energy: b.curl_energy(&fl),
            ledger: s.ledger.clone(),
        };
        (alpha, sample)
    }

    pub fn run_shell(&self, c0: ShellCoeffs, path: Option<&WienerPath>, keep_states: bool) -> Result<ShellTrajectory> {
        let nsteps = self.config.nsteps();
        if let Some(p) = path {
            if p.nsteps() < nsteps {
                return config_err("Wiener path shorter than the run");
            }
        }
        let mut state = self.initial_state(c0);
        let initial_energy = self.basis.energy(&state.coeffs);
        let mut traj = ShellTrajectory { alpha: vec![], samples: vec![], initial_energy, states: vec![] };
        let push = |traj: &mut ShellTrajectory, st: &ShellState| {
            let (a, s) = self.sample(st);
            traj.alpha.push(a);
            traj.samples.push(s);
            if keep_states {
                traj.states.push(st.coeffs.clone());
            }
        };
        push(&mut traj, &state);
        for k in 0..nsteps {
            let dw = if self.noise_loads.is_empty() {
                None
            } else {
                Some(path.ok_or_else(|| Error::Config("stochastic shell run without a Wiener path".into()))?.step(k))
            };
            state = self.step_shell(&state, dw)?;
            if (k + 1) % self.config.sample_every == 0 || k + 1 == nsteps {
                push(&mut traj, &state);
            }
        }
        Ok(traj)
    }
}

fn config_err<T>(msg: &str) -> Result<T> {
    config(msg)
}

/// ‖f‖²_{V′_ε} of a load vector in the discrete space: Σ Fᵀ K⁻¹ F.
pub fn dual_norm_sq(basis: &ShellBasis, f: &ShellCoeffs) -> Result<f64> {
    let mut s = 0.0;
    for (lm, l, _) in modes(basis.lmax()) {
        if l == 0 {
            continue;
        }
        let m = basis.matrices(l);
        let t = super::basis::solve_spd(&m.stiff_tor, f.tor_mode(lm))?;
        s += t.iter().zip(f.tor_mode(lm)).map(|(a, b)| a * b).sum::<f64>();
        if basis.np() > 0 {
            let p = super::basis::solve_spd(&m.stiff_pol, f.pol_mode(lm))?;
            s += p.iter().zip(f.pol_mode(lm)).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(s)
}

/// Fluctuation profile attached to a stream field: toroidal coefficient 1
/// (zero plain radial mean, hence zero r-moment of the tangential part).
pub fn pollution(basis: &ShellBasis, psi: &DivFreeSpectral) -> ShellCoeffs {
    let mut c = basis.zeros();
    if basis.nt() < 2 {
        return c;
    }
    let psi = psi.resized(basis.lmax());
    for (lm, l, _) in modes(basis.lmax()) {
        if l > 0 {
            c.tor_mode_mut(lm)[1] = psi.coeffs()[lm];
        }
    }
    c
}

/// Loads M c of a coefficient vector.
pub fn mass_apply(basis: &ShellBasis, c: &ShellCoeffs) -> ShellCoeffs {
    let mut out = basis.zeros();
    for (lm, l, _) in modes(basis.lmax()) {
        if l == 0 {
            continue;
        }
        let m = basis.matrices(l);
        let t = &m.mass_tor * DVector::from_column_slice(c.tor_mode(lm));
        out.tor_mode_mut(lm).copy_from_slice(t.as_slice());
        if basis.np() > 0 {
            let p = &m.mass_pol * DVector::from_column_slice(c.pol_mode(lm));
            out.pol_mode_mut(lm).copy_from_slice(p.as_slice());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{NormKind, SphereGrid};
    use crate::sphere_solver::{SphereSolver, SphereSolverConfig};

    fn solver(eps: f64, cfg: ShellSolverConfig) -> ShellSolver {
        let geom = Arc::new(ShellGeometry::new(eps, 6, Arc::new(SphereGrid::new(5))).unwrap());
        ShellSolver::new(geom, 4, cfg).unwrap()
    }

    fn u0() -> DivFreeSpectral {
        DivFreeSpectral::mode(4, 1, 0, 0.5).unwrap().add(&DivFreeSpectral::mode(4, 3, 1, 0.2).unwrap())
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = solver(0.2, ShellSolverConfig::new(0.1, 0.01, 0.1));
        let tr = s.run_shell(s.basis().zeros(), None, true).unwrap();
        assert!(tr.states.iter().all(|c| c.dot(c) == 0.0));
    }

    #[test]
    fn unforced_energy_decreases_with_first_order_ledger() {
        let run = |dt: f64| {
            let s = solver(0.3, ShellSolverConfig::new(0.1, dt, 0.3));
            s.run_shell(s.basis().lift(&u0()), None, false).unwrap()
        };
        let (a, b) = (run(0.01), run(0.005));
        assert!(a.samples.windows(2).all(|w| w[1].energy < w[0].energy));
        let ratio = a.energy_residual() / b.energy_residual();
        assert!((1.5..2.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn thinner_shell_mean_is_closer_to_sphere() {
        let (nu, dt, t) = (0.1, 0.01, 0.3);
        let mut sc = SphereSolverConfig::new(4, nu, dt, t);
        sc.nonlinear = false;
        let sp = SphereSolver::new(sc).unwrap().run(&u0(), None).unwrap();
        let err = |eps: f64| {
            let s = solver(eps, ShellSolverConfig::new(nu, dt, t));
            let tr = s.run_shell(s.basis().lift(&u0()), None, false).unwrap();
            tr.alpha.last().unwrap().sub(sp.states.last().unwrap()).norm(NormKind::L2S2)
        };
        let (a, b) = (err(0.1), err(0.05));
        assert!(b < 0.6 * a && b < 0.05 * u0().norm(NormKind::L2S2), "{a} {b}");
    }

    #[test]
    fn nse_needs_finer_grid() {
        let geom = Arc::new(ShellGeometry::new(0.2, 6, Arc::new(SphereGrid::new(4))).unwrap());
        let mut c = ShellSolverConfig::new(0.1, 0.01, 0.1);
        c.mode = FlowMode::Nse;
        assert!(ShellSolver::new(geom, 4, c).is_err());
    }
}
