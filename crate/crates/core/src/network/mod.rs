//! Radial feeder model and quasi-static nodal solve.
//!
//! Voltages and currents are positive-sequence phasors in per unit on the
//! feeder's system base. Each time step the engine hands the solver a set of
//! node loads: constant-admittance parts go straight into the nodal matrix
//! and the remaining voltage-dependent injections are handled by fixed-point
//! iteration.

mod feeder;
mod solve;
mod source;
mod zip;

pub use feeder::{
    build_admittance, Admittance, Branch, CapBank, FeederModel, Transformer, VoltageLevel,
};
pub use solve::{
    power_balance, solve_network, NetworkSolution, NodeLoads, PowerBalance, SolverOptions,
    VoltageDependentLoad,
};
pub use source::{apply_sag, Sag, SourceMode, SourceModel};
pub use zip::{zip_power, ZipLoad};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("feeder topology: {0}")]
    Topology(String),
    #[error("source model: {0}")]
    Source(String),
    #[error("sag intervals [{}, {}) and [{}, {}) overlap", .first.0, .first.1, .second.0, .second.1)]
    OverlappingSags {
        first: (f64, f64),
        second: (f64, f64),
    },
    #[error("nodal admittance matrix is singular")]
    Singular,
    #[error("network solve did not converge after {iterations} iterations (last change {mismatch:.3e} pu)")]
    NonConvergence {
        iterations: usize,
        mismatch: f64,
        last: Vec<Complex64>,
    },
}
