use serde::{Deserialize, Serialize};

use super::voltage::accumulate_trip;
use super::ProtectionState;

/// Definite-time current overload (P2). The trip is permanent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverloadParams {
    pub i_trip: f64,
    pub t_trip: f64,
}

impl OverloadParams {
    /// Overload never reconnects: one trip is all it gets.
    pub const MAX_TRIP_COUNT: u32 = 1;

    pub fn violations(&self, context: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.i_trip > 1.0) {
            out.push(format!(
                "{context}: i_trip must be > 1 (got {})",
                self.i_trip
            ));
        }
        if !(self.t_trip >= 0.0) {
            out.push(format!("{context}: t_trip must be >= 0"));
        }
        out
    }
}

pub fn step_overload_protection(
    p: &OverloadParams,
    s: &ProtectionState,
    i_measured: f64,
    dt: f64,
) -> ProtectionState {
    let mut s = *s;
    accumulate_trip(&mut s, i_measured > p.i_trip, p.t_trip, dt);
    if s.trip_counter >= OverloadParams::MAX_TRIP_COUNT {
        s.prot_trip = true;
    }
    s
}
