//! Spectral Galerkin solver for (stochastic) Navier–Stokes on S² in
//! stream-function coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::noise::{NoiseModel, WienerPath};
use crate::sphere::{curl_scalar, velocity, vorticity, DivFreeSpectral, NormKind, SphereGrid, TangentFieldS2};

/// Treatment of the diffusion term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// Backward Euler on diffusion.
    ImexEuler,
    /// Exact exponential of the diffusion operator.
    #[default]
    IntegratingFactor,
}

#[derive(Clone, Debug)]
pub struct SphereSolverConfig {
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub lmax: usize,
    pub forcing: Option<DivFreeSpectral>,
    pub noise: Option<NoiseModel>,
    pub scheme: TimeScheme,
    /// Include the advective term; off gives the linear Stokes system.
    pub nonlinear: bool,
    /// Record a sample every this many steps.
    pub sample_every: usize,
}

impl SphereSolverConfig {
    pub fn new(lmax: usize, nu: f64, dt: f64, t_final: f64) -> Self {
        SphereSolverConfig {
            nu,
            dt,
            t_final,
            lmax,
            forcing: None,
            noise: None,
            scheme: TimeScheme::IntegratingFactor,
            nonlinear: true,
            sample_every: 1,
        }
    }

    pub fn nsteps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return config("require nu > 0, dt > 0, t_final >= 0");
        }
        if self.sample_every == 0 {
            return config("sample_every must be at least 1");
        }
        Ok(())
    }
}

/// Discrete energy budget accumulated with left-endpoint quadrature.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SphereLedger {
    /// 2ν Σ dt ‖curl′u‖².
    pub dissipation: f64,
    /// 2 Σ dt (f, u).
    pub forcing_work: f64,
    /// (1/ν) Σ dt ‖f‖²_{V′}.
    pub forcing_dual: f64,
    /// Σ dt ‖G‖²_HS.
    pub noise_qv: f64,
    /// 2 Σ (u, G Δβ).
    pub martingale: f64,
    /// Largest per-step |2 dt (B(u,u), u)| relative to the step dissipation.
    pub nonlinear_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct SphereState {
    pub t: f64,
    pub step: usize,
    pub u: DivFreeSpectral,
    pub ledger: SphereLedger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereSample {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub ledger: SphereLedger,
}

#[derive(Clone, Debug)]
pub struct SphereTrajectory {
    pub states: Vec<DivFreeSpectral>,
    pub samples: Vec<SphereSample>,
    pub initial_energy: f64,
}

impl SphereTrajectory {
    /// ‖u(T)‖² + 2ν∫‖curl′u‖² − ‖u₀‖² − 2∫(f,u) − ∫‖G‖² − 2∫(u, G dW).
    pub fn energy_residual(&self) -> f64 {
        let s = self.samples.last().expect("trajectory has at least one sample");
        let l = &s.ledger;
        s.energy + l.dissipation - self.initial_energy - l.forcing_work - l.noise_qv - l.martingale
    }

    /// sup over sample pairs of ‖u(t+θ) − u(t)‖_{D(A⁻¹)} / θ^{1/2}.
    pub fn equicontinuity(&self, lag: usize) -> f64 {
        if lag == 0 || self.states.len() <= lag {
            return 0.0;
        }
        let mut sup: f64 = 0.0;
        for k in 0..self.states.len() - lag {
            let th = self.samples[k + lag].t - self.samples[k].t;
            let d = self.states[k + lag].sub(&self.states[k]).norm(NormKind::DaInv);
            sup = sup.max(d / th.sqrt());
        }
        sup
    }
}

pub struct SphereSolver {
    grid: SphereGrid,
    config: SphereSolverConfig,
    damping: Vec<f64>,
    gain: Vec<f64>,
}

impl SphereSolver {
    pub fn new(config: SphereSolverConfig) -> Result<Self> {
        config.validate()?;
        if let Some(f) = &config.forcing {
            if f.lmax() > config.lmax {
                return config_err("forcing truncation exceeds solver lmax");
            }
        }
        let grid = SphereGrid::new(config.lmax);
        let n = crate::sphere::coeff_len(config.lmax);
        let mut damping = vec![0.0; n];
        let mut gain = vec![0.0; n];
        for (k, l, _) in crate::sphere::modes(config.lmax) {
            let a = config.nu * (l * (l + 1)) as f64 * config.dt;
            let (d, g) = match config.scheme {
                TimeScheme::IntegratingFactor => ((-a).exp(), (-a).exp()),
                TimeScheme::ImexEuler => (1.0 / (1.0 + a), 1.0 / (1.0 + a)),
            };
            damping[k] = if l == 0 { 0.0 } else { d };
            gain[k] = if l == 0 { 0.0 } else { g };
        }
        Ok(SphereSolver { grid, config, damping, gain })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }
    pub fn config(&self) -> &SphereSolverConfig {
        &self.config
    }

    /// Leray projection of ∇′_u u in rotational form.
    pub fn nonlinear_term(&self, u: &DivFreeSpectral) -> Result<DivFreeSpectral> {
        nonlinear_term(&self.grid, &u.resized(self.config.lmax))
    }

    pub fn initial_state(&self, u0: &DivFreeSpectral) -> SphereState {
        SphereState { t: 0.0, step: 0, u: u0.resized(self.config.lmax), ledger: SphereLedger::default() }
    }

    /// One step: ψ ← D (ψ + dt(f − B(ψ)) + Σ g^j Δβ_j) with D the diffusion
    /// factor of the configured scheme.
    pub fn step(&self, state: &SphereState, dw: Option<&[f64]>) -> Result<SphereState> {
        let cfg = &self.config;
        match (&cfg.noise, dw) {
            (Some(n), Some(w)) if w.len() == n.n() => {}
            (None, None) => {}
            (Some(n), None) if n.n() == 0 => {}
            _ => return config_err("noise increments must be supplied exactly when noise is configured"),
        }
        let u = &state.u;
        let dt = cfg.dt;
        let mut rhs = DivFreeSpectral::zeros(cfg.lmax);
        let mut ledger = state.ledger.clone();
        let enstrophy = u.norm(NormKind::VSeminorm).powi(2);
        let diss = 2.0 * cfg.nu * dt * enstrophy;
        ledger.dissipation += diss;
        if cfg.nonlinear {
            let b = self.nonlinear_term(u)?;
            let work = 2.0 * dt * b.inner(u, NormKind::L2S2);
            if diss > 0.0 {
                ledger.nonlinear_ratio = ledger.nonlinear_ratio.max(work.abs() / diss);
            }
            rhs = rhs.sub(&b.scaled(dt));
        }
        if let Some(f) = &cfg.forcing {
            let f = f.resized(cfg.lmax);
            ledger.forcing_work += 2.0 * dt * f.inner(u, NormKind::L2S2);
            ledger.forcing_dual += dt * dual_norm_sq(&f) / cfg.nu;
            rhs = rhs.add(&f.scaled(dt));
        }
        let mut noise = DivFreeSpectral::zeros(cfg.lmax);
        if let (Some(model), Some(w)) = (&cfg.noise, dw) {
            let fac = model.factor(state.step);
            for (g, dbeta) in model.coefficients().iter().zip(w) {
                noise = noise.add(&g.resized(cfg.lmax).scaled(fac * dbeta));
            }
            ledger.noise_qv += dt * model.hs_norm_sq(state.step);
            ledger.martingale += 2.0 * noise.inner(u, NormKind::L2S2);
        }
        let mut next = u.clone();
        {
            let c = next.stream_mut();
            for k in 0..c.len() {
                let r = rhs.coeffs()[k];
                let n = noise.coeffs()[k];
                c[k] = self.damping[k] * c[k] + self.gain[k] * (r + n);
            }
        }
        if !next.is_finite() {
            return Err(Error::Divergence { step: state.step + 1, what: "non-finite sphere state".into() });
        }
        Ok(SphereState { t: (state.step + 1) as f64 * dt, step: state.step + 1, u: next, ledger })
    }

    pub fn run(&self, u0: &DivFreeSpectral, path: Option<&WienerPath>) -> Result<SphereTrajectory> {
        let nsteps = self.config.nsteps();
        if let Some(p) = path {
            if p.nsteps() < nsteps {
                return config_err(format!("Wiener path has {} steps, run needs {nsteps}", p.nsteps()));
            }
        }
        let mut state = self.initial_state(u0);
        let initial_energy = state.u.norm(NormKind::L2S2).powi(2);
        let mut traj = SphereTrajectory { states: vec![], samples: vec![], initial_energy };
        record(&mut traj, &state);
        for k in 0..nsteps {
            let dw = match (&self.config.noise, path) {
                (Some(n), Some(p)) if n.n() > 0 => Some(p.step(k)),
                (Some(n), None) if n.n() > 0 => return config_err("stochastic run without a Wiener path"),
                _ => None,
            };
            state = self.step(&state, dw)?;
            if (k + 1) % self.config.sample_every == 0 || k + 1 == nsteps {
                record(&mut traj, &state);
            }
        }
        Ok(traj)
    }
}

fn record(traj: &mut SphereTrajectory, s: &SphereState) {
    traj.states.push(s.u.clone());
    traj.samples.push(SphereSample {
        t: s.t,
        energy: s.u.norm(NormKind::L2S2).powi(2),
        enstrophy: s.u.norm(NormKind::VSeminorm).powi(2),
        ledger: s.ledger.clone(),
    });
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    config(msg)
}

/// ‖f‖²_{V′} = ‖A^{-1/2} f‖² = Σ ψ_lm² for f = curl′ψ.
pub fn dual_norm_sq(f: &DivFreeSpectral) -> f64 {
    f.coeffs().iter().skip(1).map(|c| c * c).sum()
}

/// P(∇′_u u) = P(−ω (u × x)), with ω = curl′u and u × x = (u_φ, −u_λ).
/// The grid must resolve cubic products of degree-lmax fields.
pub fn nonlinear_term(grid: &SphereGrid, u: &DivFreeSpectral) -> Result<DivFreeSpectral> {
    let v = velocity(grid, u)?;
    let w = grid.synthesize(&vorticity(u))?;
    let f = TangentFieldS2 { lambda: -&w.values * &v.phi, phi: &w.values * &v.lambda };
    let c = curl_scalar(grid, &f)?;
    let lmax = u.lmax();
    Ok(DivFreeSpectral::from_stream(
        c.resized(lmax).map_degree(|l| if l == 0 { 0.0 } else { 1.0 / (l * (l + 1)) as f64 }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_path;

    fn u0() -> DivFreeSpectral {
        DivFreeSpectral::mode(6, 2, 1, 0.4).unwrap().add(&DivFreeSpectral::mode(6, 3, -2, 0.3).unwrap())
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let tr = SphereSolver::new(SphereSolverConfig::new(6, 0.1, 0.01, 0.0)).unwrap().run(&u0(), None).unwrap();
        assert_eq!(tr.states.len(), 1);
        assert_eq!(tr.states[0], u0());
    }

    #[test]
    fn schemes_agree_to_first_order() {
        let mut c = SphereSolverConfig::new(6, 0.1, 1e-3, 0.2);
        c.nonlinear = true;
        c.sample_every = 200;
        let a = SphereSolver::new(c.clone()).unwrap().run(&u0(), None).unwrap();
        c.scheme = TimeScheme::ImexEuler;
        let b = SphereSolver::new(c).unwrap().run(&u0(), None).unwrap();
        let d = a.states.last().unwrap().sub(b.states.last().unwrap()).norm(NormKind::L2S2);
        assert!(d < 1e-3 * u0().norm(NormKind::L2S2), "{d}");
    }

    #[test]
    fn single_mode_is_steady_for_advection() {
        let s = SphereSolver::new(SphereSolverConfig::new(6, 0.1, 0.01, 1.0)).unwrap();
        let u = DivFreeSpectral::mode(6, 3, 2, 1.0).unwrap();
        assert!(s.nonlinear_term(&u).unwrap().norm(NormKind::L2S2) < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SphereSolver::new(SphereSolverConfig::new(6, 0.1, 0.0, 1.0)).is_err());
        assert!(SphereSolver::new(SphereSolverConfig::new(6, -1.0, 0.1, 1.0)).is_err());
        let mut c = SphereSolverConfig::new(6, 0.1, 0.01, 1.0);
        c.noise = Some(NoiseModel::new(vec![DivFreeSpectral::mode(6, 1, 0, 1.0).unwrap()]));
        let s = SphereSolver::new(c).unwrap();
        let short = sample_path(1, 0, 1, 0.01, 10).unwrap();
        assert!(s.run(&u0(), Some(&short)).is_err());
    }
}
