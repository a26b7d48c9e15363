//! Finite-dimensional Wiener driving G dW = Σ_j g^j dβ_j, reproducible
//! increments, and the lift of noise coefficients to the shell.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{config, usage, Result};
use crate::shell::{r_ring, shell_norm, ShellGeometry, ShellInnerKind, ShellVectorField};
use crate::sphere::{curl_stream, DivFreeSpectral, NormKind, StreamMode};

/// Noise coefficients g¹…gᴺ on S² with an optional per-step modulation.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    g: Vec<DivFreeSpectral>,
    modulation: Option<Vec<f64>>,
}

impl NoiseModel {
    pub fn new(g: Vec<DivFreeSpectral>) -> Self {
        NoiseModel { g, modulation: None }
    }

    /// One direction g^j = a·curl′Y_lm per listed mode.
    pub fn from_modes(lmax: usize, modes: &[StreamMode]) -> Result<Self> {
        let g = modes
            .iter()
            .map(|m| DivFreeSpectral::mode(lmax, m.l, m.m, m.amplitude))
            .collect::<Result<Vec<_>>>()?;
        Ok(NoiseModel::new(g))
    }

    /// Scale g^j at step k by `factors[k]` (1 beyond the end).
    pub fn with_modulation(mut self, factors: Vec<f64>) -> Self {
        self.modulation = Some(factors);
        self
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }
    pub fn coefficients(&self) -> &[DivFreeSpectral] {
        &self.g
    }
    pub fn factor(&self, step: usize) -> f64 {
        self.modulation.as_ref().and_then(|f| f.get(step).copied()).unwrap_or(1.0)
    }

    /// ‖G(t_k)‖²_{L_2(ℝᴺ, H)}.
    pub fn hs_norm_sq(&self, step: usize) -> f64 {
        self.factor(step).powi(2) * hs_norm_sphere(&self.g)
    }

    /// ∫₀ᵀ ‖g^j‖² dt summed over j, with left-endpoint steps.
    pub fn integrated_bound(&self, dt: f64, nsteps: usize) -> f64 {
        (0..nsteps).map(|k| dt * self.hs_norm_sq(k)).sum()
    }
}

/// Brownian increments Δβ_j(t_k), stored step-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    pub seed: u64,
    pub path_id: u64,
    pub dt: f64,
    n: usize,
    nsteps: usize,
    increments: Vec<f64>,
}

impl WienerPath {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn nsteps(&self) -> usize {
        self.nsteps
    }
    /// Increments of all modes at step k.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.increments[k * self.n..(k + 1) * self.n]
    }
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
    /// Little-endian bytes of the increment table.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.increments.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

fn stream_rng(seed: u64, path_id: u64, j: usize) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path_id.to_le_bytes());
    key[16..24].copy_from_slice(b"thinshel");
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(j as u64);
    rng
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha12Rng) -> f64 {
    let u1 = 1.0 - unit(rng.next_u64());
    let u2 = unit(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Standard normal indexed by (seed, path_id, j, k); each draw occupies a
/// fixed window of the (seed, path_id, j) ChaCha stream.
pub fn standard_normal(seed: u64, path_id: u64, j: usize, k: usize) -> f64 {
    let mut rng = stream_rng(seed, path_id, j);
    rng.set_word_pos(4 * k as u128);
    box_muller(&mut rng)
}

pub fn sample_path(seed: u64, path_id: u64, n: usize, dt: f64, nsteps: usize) -> Result<WienerPath> {
    if !(dt > 0.0) {
        return config(format!("time step must be positive, got {dt}"));
    }
    let total = n
        .checked_mul(nsteps)
        .filter(|t| *t <= (1usize << 31))
        .ok_or_else(|| crate::Error::Config(format!("increment table {n}x{nsteps} too large")))?;
    let mut increments = vec![0.0; total];
    let sq = dt.sqrt();
    for j in 0..n {
        let mut rng = stream_rng(seed, path_id, j);
        for k in 0..nsteps {
            increments[k * n + j] = sq * box_muller(&mut rng);
        }
    }
    Ok(WienerPath { seed, path_id, dt, n, nsteps, increments })
}

/// Noise lifted to a shell geometry: g̃^j = R̊_ε g^j.
#[derive(Clone, Debug)]
pub struct LiftedNoise {
    pub fields: Vec<ShellVectorField>,
}

pub fn lift_noise(model: &NoiseModel, geom: &Arc<ShellGeometry>) -> Result<LiftedNoise> {
    let grid = geom.sphere_grid();
    let fields = model
        .g
        .iter()
        .map(|g| r_ring(&curl_stream(grid, &g.stream().resized(grid.lmax()))?, geom))
        .collect::<Result<Vec<_>>>()?;
    Ok(LiftedNoise { fields })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsSpace {
    HSphere,
    HEps,
}

/// Coefficient set on either side of the lift.
pub enum NoiseSet<'a> {
    Sphere(&'a [DivFreeSpectral]),
    Shell(&'a [ShellVectorField]),
}

pub fn hs_norm_sphere(g: &[DivFreeSpectral]) -> f64 {
    g.iter().map(|g| g.norm(NormKind::L2S2).powi(2)).sum()
}

/// Σ_j ‖g^j‖² in the stated space.
pub fn hs_norm(set: &NoiseSet<'_>, space: HsSpace) -> Result<f64> {
    match (set, space) {
        (NoiseSet::Sphere(g), HsSpace::HSphere) => Ok(hs_norm_sphere(g)),
        (NoiseSet::Shell(f), HsSpace::HEps) => {
            let mut s = 0.0;
            for u in f.iter() {
                s += shell_norm(u, ShellInnerKind::L2Qeps)?.powi(2);
            }
            Ok(s)
        }
        _ => usage("noise coefficients do not live in the requested space"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_noise() {
        let p = sample_path(1, 0, 0, 1e-3, 100).unwrap();
        assert!(p.increments().is_empty());
        assert_eq!(hs_norm(&NoiseSet::Sphere(&[]), HsSpace::HSphere).unwrap(), 0.0);
    }

    #[test]
    fn random_access_matches_sequential() {
        let p = sample_path(11, 4, 3, 0.5, 50).unwrap();
        for k in [0, 7, 49] {
            for j in 0..3 {
                let z = standard_normal(11, 4, j, k) * 0.5f64.sqrt();
                assert_eq!(z.to_bits(), p.step(k)[j].to_bits());
            }
        }
    }

    #[test]
    fn determinism_and_independence_of_ids() {
        let a = sample_path(7, 3, 2, 1e-3, 40).unwrap();
        let b = sample_path(7, 3, 2, 1e-3, 40).unwrap();
        let c = sample_path(7, 4, 2, 1e-3, 40).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn overflow_guard_and_bad_dt() {
        assert!(sample_path(0, 0, usize::MAX, 1e-3, 2).is_err());
        assert!(sample_path(0, 0, 1, 0.0, 2).is_err());
    }

    #[test]
    fn single_term_hs_norm() {
        // ‖a curl′Y_10‖² = 2a², so a = √2 gives ‖g‖ = 2.
        let g = DivFreeSpectral::mode(4, 1, 0, 2f64.sqrt()).unwrap();
        let v = hs_norm(&NoiseSet::Sphere(&[g]), HsSpace::HSphere).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn space_mismatch_is_usage_error() {
        assert!(hs_norm(&NoiseSet::Sphere(&[]), HsSpace::HEps).is_err());
    }
}
