//! Spherical-harmonic transforms and tangential calculus on the unit sphere.

mod fields;
mod grid;
pub mod legendre;
mod ops;

pub use fields::{
    coeff_len, degree_of, lm_index, modes, stream_norm, DivFreeSpectral, NormKind, ScalarFieldS2, SpectralScalar,
    StreamMode, TangentFieldS2,
};
pub use grid::SphereGrid;
pub use ops::{
    apply_operator, curl_scalar, curl_stream, div, grad, laplace_beltrami, laplace_de_rham, leray_project, velocity,
    vorticity, SphereField, SphereOperator,
};
