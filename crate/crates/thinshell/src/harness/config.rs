use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::shell_solver::FlowMode;
use crate::sphere::StreamMode;
use crate::sphere_solver::TimeScheme;

/// Largest truncation accepted for NSE studies.
pub const NSE_LMAX_CAP: usize = 15;

/// Noise block of a study: N directions g^j = a·curl′Y_lm. When `seed` is
/// absent the study seed drives the Wiener paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub modes: Vec<StreamMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            n: 3,
            modes: vec![StreamMode::new(1, 0, 0.2), StreamMode::new(2, 1, 0.15), StreamMode::new(3, -2, 0.1)],
            seed: None,
        }
    }
}

/// Thin-shell convergence study parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub eps_list: Vec<f64>,
    pub lmax: usize,
    pub nr: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub mode: FlowMode,
    pub scheme: TimeScheme,
    pub stochastic: bool,
    pub paths: usize,
    pub seed: u64,
    pub moment_p: f64,
    /// Sphere initial velocity u₀ as stream modes.
    pub initial: Vec<StreamMode>,
    /// Time-constant sphere forcing f.
    pub forcing: Vec<StreamMode>,
    pub noise: NoiseConfig,
    /// ũ₀ = R̊_ε u₀ + a·ε·η with η a zero-mean radial profile.
    pub initial_pollution: f64,
    /// g̃^j = R̊_ε g^j + a·ε·η.
    pub noise_pollution: f64,
    /// Replace each shell run by the exact lift of the sphere trajectory.
    pub self_consistency: bool,
    /// Errors are measured every this many steps (and at T).
    pub sample_every: usize,
    /// Output directory; not part of the report.
    #[serde(skip_serializing)]
    pub out: Option<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            eps_list: vec![0.4, 0.2, 0.1, 0.05],
            lmax: 10,
            nr: 6,
            nu: 0.05,
            dt: 1e-3,
            t_final: 0.5,
            mode: FlowMode::Stokes,
            scheme: TimeScheme::IntegratingFactor,
            stochastic: false,
            paths: 8,
            seed: 0,
            moment_p: 2.0,
            initial: vec![
                StreamMode::new(1, 0, 0.3),
                StreamMode::new(2, 1, -0.2),
                StreamMode::new(3, 0, 0.15),
                StreamMode::new(4, -3, 0.1),
            ],
            forcing: vec![StreamMode::new(3, 1, 0.5)],
            noise: NoiseConfig::default(),
            initial_pollution: 0.0,
            noise_pollution: 0.0,
            self_consistency: false,
            sample_every: 10,
            out: None,
        }
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: StudyConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn nsteps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise.seed.unwrap_or(self.seed)
    }

    /// Number of Monte Carlo paths actually run.
    pub fn path_count(&self) -> usize {
        if self.stochastic {
            self.paths
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return config("eps_list must not be empty");
        }
        for e in &self.eps_list {
            if !(*e > 0.0 && *e < 0.5) {
                return config(format!("every eps must lie in (0, 1/2), got {e}"));
            }
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return config("eps_list must be strictly decreasing");
        }
        if self.stochastic && self.paths == 0 {
            return config("a stochastic study needs at least one path");
        }
        if !(self.nu > 0.0) || !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return config("require nu > 0, dt > 0, t_final >= 0");
        }
        if self.lmax == 0 {
            return config("lmax must be at least 1");
        }
        if self.mode == FlowMode::Nse && self.lmax > NSE_LMAX_CAP {
            return config(format!("NSE studies are capped at lmax = {NSE_LMAX_CAP}, got {}", self.lmax));
        }
        if self.nr < 4 {
            return config("nr must be at least 4 for the poloidal basis");
        }
        if !(self.moment_p >= 2.0) {
            return config("moment_p must be at least 2");
        }
        if self.sample_every == 0 {
            return config("sample_every must be at least 1");
        }
        if self.stochastic && self.noise.n != self.noise.modes.len() {
            return config(format!("noise N = {} but {} modes listed", self.noise.n, self.noise.modes.len()));
        }
        for s in self.initial.iter().chain(&self.forcing).chain(&self.noise.modes) {
            if s.l == 0 || s.l > self.lmax || s.m.unsigned_abs() as usize > s.l || !s.amplitude.is_finite() {
                return config(format!("invalid mode [{}, {}, {}] for lmax {}", s.l, s.m, s.amplitude, self.lmax));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = StudyConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"initial\":[[1,0,0.3]"));
        assert_eq!(StudyConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = StudyConfig::from_json(r#"{"eps_list": [0.3, 0.1, 0.05], "mode": "nse"}"#).unwrap();
        assert_eq!(c.mode, FlowMode::Nse);
        assert_eq!(c.lmax, 10);
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!(StudyConfig::from_json(r#"{"eps_list": [0.1, 0.2]}"#).is_err());
        assert!(StudyConfig::from_json(r#"{"eps_list": [0.5, 0.2]}"#).is_err());
        assert!(StudyConfig::from_json(r#"{"stochastic": true, "paths": 0}"#).is_err());
        assert!(StudyConfig::from_json(r#"{"lmx": 3}"#).is_err());
        assert!(StudyConfig::from_json(r#"{"mode": "nse", "lmax": 16}"#).is_err());
        assert!(StudyConfig::from_json(r#"{"mode": "stokes", "lmax": 16}"#).is_ok());
    }
}
