//! Galerkin solver for the shell system with free boundary conditions.

mod basis;
mod nonlinear;
mod solver;

pub use basis::{LevelSpectra, ModeMatrices, RadialProfile, ShellBasis, ShellCoeffs};
pub use nonlinear::advection_loads;
pub use solver::{
    dual_norm_sq, mass_apply, pollution, FlowMode, ShellLedger, ShellSample, ShellSolver, ShellSolverConfig,
    ShellState, ShellTrajectory,
};

use crate::error::{Error, Result};
use crate::shell::{curl, h_eps_residuals, ShellVectorField};

/// A_ε u = curl curl u on a gridded field; rejects inputs whose normal
/// component does not vanish on the boundary.
pub fn apply_stokes_eps(u: &ShellVectorField) -> Result<ShellVectorField> {
    let (_, normal) = h_eps_residuals(u)?;
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    if normal > 1e-8 * scale {
        return Err(Error::Consistency(format!("u·n = {normal:e} on the boundary")));
    }
    curl(&curl(u)?)
}
