//! Manufactured-solution studies, benchmark geometries and output functionals.

pub mod benchmarks;
pub mod calibrate;
pub mod forces;
pub mod mms;

use thiserror::Error;

use crate::ensemble::EnsembleError;
use crate::fespace::FeError;
use crate::linsolve::SolveError;
use crate::mesh::MeshError;

pub use calibrate::{calibrate_inverse_constant, CalibrationReport};
pub use forces::{drag_lift_dp, Forces, DRAG_SCALE};
pub use mms::{convergence_study, ConvergenceSetup, ConvergenceTable, MmsFamily};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Ensemble(EnsembleError),
    #[error("probe point ({}, {}) lies outside the mesh", .0[0], .0[1])]
    ProbeOutside([f64; 2]),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("{0}")]
    Invalid(String),
}
