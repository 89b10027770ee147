//! Simulation and verification toolkit for measurement-based quantum
//! feedback control of finite-dimensional systems under continuous weak
//! measurement: stochastic master equation integration, switching feedback
//! stabilization, measurement channel design checks, fundamental performance
//! bounds, and Monte Carlo experiment orchestration.

pub mod bounds;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod sampling;
pub mod state;

pub use error::{QfcError, Result};
pub use state::{
    distance, purity, von_neumann_entropy, CMatrix, CVector, DensityMatrix, HermitianOperator,
    MeasurementChannel, SystemModel, TargetState,
};
