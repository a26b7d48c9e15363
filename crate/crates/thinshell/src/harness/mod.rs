//! Convergence study driver, property suite, rate fitting and output files.

pub mod config;
pub mod fit;
pub mod io;
pub mod properties;
pub mod study;

pub use config::{NoiseConfig, StudyConfig};
pub use fit::{fit_rate, RateFit, NO_CONVERGENCE_RATE};
pub use properties::{run_property_suite, CheckResult, SuiteOptions, SuiteReport, SELECTORS};
pub use study::{run_convergence_study, shell_run, sphere_run, ConvergenceReport, ErrorRow, StudyOutput};
