//! Thin-shell geometry, averaging and retract operators, and spherical
//! coordinate calculus on Q_ε.

mod averaging;
mod decompose;
mod diff;
mod fields;
mod geometry;
mod inner;

pub use averaging::{
    average, dual_pair_check, m_hat, m_ring, m_scalar, m_tilde, n_hat, n_tilde, r_ring, r_scalar, retract,
    AverageKind, Averaged, RetractKind, ShellField, SphereInput,
};
pub use decompose::{decompose, h_eps_residuals, ShellDecomposition};
pub use diff::{curl, div, grad, laplacian_scalar, laplacian_vector, shell_diff, DiffKind};
pub use fields::{spherical_frame, ShellScalarField, ShellVectorField};
pub use geometry::ShellGeometry;
pub use inner::{l2_scalar, lp_norm, shell_inner, shell_norm, ShellInnerKind};
