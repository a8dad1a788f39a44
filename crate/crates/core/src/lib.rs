//! Dynamic phasor simulation of a radial distribution feeder loaded with
//! protected induction motors.
//!
//! The crate is organised bottom-up:
//!
//! - [`motor`]: three-phase slip dynamics (MA, MB, MC) and the single-phase
//!   performance model with stall mode (MD).
//! - [`protection`]: timed relay state machines (P1..P5), the OR-gate
//!   aggregator and capacitor bank over-voltage switching.
//! - [`network`]: feeder topology, nodal admittance assembly and the
//!   quasi-static fixed-point solve behind a Thevenin or stiff source.
//! - [`scenario`]: built-in commercial building templates, seeded protection
//!   parameter sampling and the JSON scenario file.
//! - [`engine`]: the fixed-step loop, trace recording, run comparison and
//!   CSV export.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod engine;
pub mod motor;
pub mod network;
pub mod protection;
pub mod scenario;
pub mod units;

pub use engine::{
    compare_runs, run, ComparisonReport, Engine, EngineError, Event, EventCause, EventKind,
    RunError, RunMetadata, SimState, SimulationTrace,
};
pub use motor::{MotorParams, MotorState, MotorType};
pub use network::{FeederModel, NetworkError, SourceModel, ZipLoad};
pub use protection::ProtectionKind;
pub use scenario::{load_scenario, BuildingTemplate, LoadClass, Scenario, ScenarioError};

pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
