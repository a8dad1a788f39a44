//! Building-level motor protection schemes.
//!
//! P1 (electronic relay), P4 (contactor) and P5 (building management system)
//! share one voltage-dependent automaton with reconnection logic and differ
//! only in their settings. P2 is a definite-time current overload with a
//! single permanent trip, P3 a first-order thermal model of a stalled motor.
//! Every automaton is a pure `(params, state, measurement) -> state` function.

mod capbank;
mod overload;
mod thermal;
mod voltage;

pub use capbank::{step_capbank, CapBankParams, CapBankState, CapBankStatus};
pub use overload::{step_overload_protection, OverloadParams};
pub use thermal::{step_thermal_protection, ThermalHeating, ThermalParams, ThermalState};
pub use voltage::{step_voltage_protection, VoltageProtectionParams};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProtectionKind {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl ProtectionKind {
    pub const ALL: [ProtectionKind; 5] = [
        ProtectionKind::P1,
        ProtectionKind::P2,
        ProtectionKind::P3,
        ProtectionKind::P4,
        ProtectionKind::P5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtectionKind::P1 => "P1",
            ProtectionKind::P2 => "P2",
            ProtectionKind::P3 => "P3",
            ProtectionKind::P4 => "P4",
            ProtectionKind::P5 => "P5",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Whether the scheme can release a trip on its own.
    pub fn reconnects(self) -> bool {
        matches!(
            self,
            ProtectionKind::P1 | ProtectionKind::P4 | ProtectionKind::P5
        )
    }
}

impl fmt::Display for ProtectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtectionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtectionKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown protection `{s}`"))
    }
}

/// Timer state shared by the voltage-dependent and overload automata.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProtectionState {
    pub trip_timer: f64,
    pub rec_timer: f64,
    pub trip_counter: u32,
    pub prot_trip: bool,
}

/// OR gate over protection outputs: first come, first trip.
///
/// Latched protections (P2, P3) keep their input asserted, so a device is
/// only released once every reconnecting protection has deasserted as well.
pub fn combine_trips(trip_signals: &[bool]) -> bool {
    trip_signals.iter().any(|&t| t)
}
