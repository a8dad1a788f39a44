use serde::{Deserialize, Serialize};

use super::ProtectionState;

/// Settings of one voltage-dependent protection (P1, P4 or P5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageProtectionParams {
    pub activated: bool,
    /// Simulation time before which the protection is inert.
    pub work_time: f64,
    pub v_trip: f64,
    pub t_trip: f64,
    pub v_reconnect: f64,
    pub t_reconnect: f64,
    pub max_trip_count: u32,
}

impl VoltageProtectionParams {
    pub fn violations(&self, context: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.v_reconnect >= self.v_trip) {
            out.push(format!(
                "{context}: v_reconnect ({}) must be >= v_trip ({})",
                self.v_reconnect, self.v_trip
            ));
        }
        if !(self.t_trip >= 0.0 && self.t_reconnect >= 0.0) {
            out.push(format!("{context}: trip and reconnect delays must be >= 0"));
        }
        if self.max_trip_count < 1 {
            out.push(format!("{context}: max_trip_count must be >= 1"));
        }
        out
    }
}

/// Pickup timer shared with the overload scheme: accumulate while the
/// measurement is beyond its threshold, assert once the delay is exceeded,
/// count each fresh assertion, reset when the measurement returns.
pub(super) fn accumulate_trip(s: &mut ProtectionState, beyond: bool, delay: f64, dt: f64) {
    if beyond {
        s.trip_timer += dt;
        if s.trip_timer > delay {
            if !s.prot_trip {
                s.trip_counter += 1;
            }
            s.prot_trip = true;
        } else {
            s.prot_trip = false;
        }
    } else {
        s.trip_timer = 0.0;
    }
}

/// One step of the voltage-dependent trip/reconnect automaton.
///
/// The reconnection timer is zeroed whenever it is not accumulating (after a
/// reconnect and while untripped). That value is never read in those states,
/// so trip outputs, counters and trip timers are unaffected, and it keeps the
/// two timers from both being non-zero at the end of a step.
pub fn step_voltage_protection(
    p: &VoltageProtectionParams,
    s: &ProtectionState,
    v_measured: f64,
    t_now: f64,
    dt: f64,
) -> ProtectionState {
    let mut s = *s;
    if !p.activated || t_now < p.work_time {
        return s;
    }
    accumulate_trip(&mut s, v_measured < p.v_trip, p.t_trip, dt);
    if s.prot_trip {
        if v_measured > p.v_reconnect {
            s.rec_timer += dt;
            if s.rec_timer > p.t_reconnect {
                s.prot_trip = false;
                s.trip_timer = 0.0;
                s.rec_timer = 0.0;
            }
        } else {
            s.rec_timer = 0.0;
        }
    } else {
        s.rec_timer = 0.0;
    }
    if s.trip_counter >= p.max_trip_count {
        s.prot_trip = true;
    }
    s
}
