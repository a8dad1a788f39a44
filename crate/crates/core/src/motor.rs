//! Electromechanical models for the four composite-load motor categories.
//!
//! Three-phase motors (MA, MB, MC) integrate the per-unit swing equation
//! `d(speed)/dt = (Te - Tm) / 2H` with Heun's method and draw current through
//! the steady-state equivalent circuit at the present slip. The single-phase
//! motor (MD) follows a performance model while running and latches into a
//! constant-impedance stall once the terminal voltage has stayed below the
//! stall threshold for the stall delay.
//!
//! All quantities are per unit on the motor's own base.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clamp on slip, keeping `R2 / slip` finite.
pub const SLIP_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MotorType {
    /// Three-phase, constant torque (compressors).
    MA,
    /// Three-phase, high inertia, speed-dependent torque (fans).
    MB,
    /// Three-phase, low inertia, speed-dependent torque (pumps).
    MC,
    /// Single-phase with stall mode (residential-style compressors and fans).
    MD,
}

impl MotorType {
    pub const ALL: [MotorType; 4] = [MotorType::MA, MotorType::MB, MotorType::MC, MotorType::MD];

    pub fn is_three_phase(self) -> bool {
        !matches!(self, MotorType::MD)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MotorType::MA => "MA",
            MotorType::MB => "MB",
            MotorType::MC => "MC",
            MotorType::MD => "MD",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MotorError {
    #[error("slip {0} is outside (0, 1]; clamp to at least {SLIP_MIN}")]
    DegenerateSlip(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    pub motor_type: MotorType,
    pub rated_power_kw: f64,
    pub rated_voltage: f64,
    pub stator_resistance: f64,
    pub stator_reactance: f64,
    pub magnetizing_reactance: f64,
    pub rotor_resistance: f64,
    pub rotor_reactance: f64,
    pub inertia_h: f64,
    /// Mechanical torque at rated speed.
    pub load_torque: f64,
    /// 0 for constant torque, 2 for fan/pump loads.
    pub load_torque_exponent: f64,
    pub stall_voltage: f64,
    pub stall_delay: f64,
    pub r_stall: f64,
    pub x_stall: f64,
    /// Running-mode voltage exponents of the single-phase performance model.
    pub kp: f64,
    pub kq: f64,
    /// Running-mode power factor of the single-phase performance model.
    pub power_factor: f64,
}

impl MotorParams {
    /// Textbook equivalent-circuit defaults for a category.
    pub fn default_for(motor_type: MotorType) -> Self {
        let (inertia_h, load_torque_exponent) = match motor_type {
            MotorType::MA => (0.1, 0.0),
            MotorType::MB => (0.5, 2.0),
            MotorType::MC => (0.1, 2.0),
            MotorType::MD => (0.05, 0.0),
        };
        MotorParams {
            motor_type,
            rated_power_kw: 1.0,
            rated_voltage: 1.0,
            stator_resistance: 0.04,
            stator_reactance: 0.12,
            magnetizing_reactance: 2.4,
            rotor_resistance: 0.02,
            rotor_reactance: 0.12,
            inertia_h,
            load_torque: 1.0,
            load_torque_exponent,
            stall_voltage: 0.6,
            stall_delay: 0.032,
            r_stall: 0.07,
            x_stall: 0.092,
            kp: 1.0,
            kq: 2.0,
            power_factor: 0.95,
        }
    }

    /// Every violated parameter invariant, prefixed with `context`.
    pub fn violations(&self, context: &str) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("rated_power_kw", self.rated_power_kw),
            ("rated_voltage", self.rated_voltage),
            ("stator_resistance", self.stator_resistance),
            ("stator_reactance", self.stator_reactance),
            ("magnetizing_reactance", self.magnetizing_reactance),
            ("rotor_resistance", self.rotor_resistance),
            ("rotor_reactance", self.rotor_reactance),
            ("inertia_h", self.inertia_h),
            ("r_stall", self.r_stall),
            ("x_stall", self.x_stall),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                out.push(format!("{context}: {name} must be > 0 (got {value})"));
            }
        }
        if !(self.load_torque >= 0.0) {
            out.push(format!("{context}: load_torque must be >= 0"));
        }
        if !(self.load_torque_exponent >= 0.0) {
            out.push(format!("{context}: load_torque_exponent must be >= 0"));
        }
        if !(self.stall_voltage >= 0.0 && self.stall_delay >= 0.0) {
            out.push(format!(
                "{context}: stall_voltage and stall_delay must be >= 0"
            ));
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            out.push(format!("{context}: power_factor must lie in (0, 1]"));
        }
        out
    }

    /// Stall impedance `R_stall + jX_stall`.
    pub fn stall_impedance(&self) -> Complex64 {
        Complex64::new(self.r_stall, self.x_stall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorState {
    pub slip: f64,
    pub connected: bool,
    pub stalled: bool,
    pub terminal_voltage: Complex64,
    pub drawn_current: Complex64,
    pub elapsed_under_stall_voltage: f64,
}

impl MotorState {
    /// A connected motor running at `slip` with no terminal quantities yet.
    pub fn running(slip: f64) -> Self {
        MotorState {
            slip: slip.clamp(0.0, 1.0),
            connected: true,
            stalled: false,
            terminal_voltage: Complex64::new(0.0, 0.0),
            drawn_current: Complex64::new(0.0, 0.0),
            elapsed_under_stall_voltage: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        1.0 - self.slip
    }
}

/// Electrical torque of the approximate equivalent circuit:
/// `Te = v^2 (R2/s) / ((R1 + R2/s)^2 + (X1 + X2)^2)`.
pub fn electrical_torque(params: &MotorParams, slip: f64, v_mag: f64) -> Result<f64, MotorError> {
    if !(slip > 0.0 && slip <= 1.0) {
        return Err(MotorError::DegenerateSlip(slip));
    }
    let r2s = params.rotor_resistance / slip;
    let r = params.stator_resistance + r2s;
    let x = params.stator_reactance + params.rotor_reactance;
    Ok(v_mag * v_mag * r2s / (r * r + x * x))
}

/// Mechanical load torque `T0 * speed^exponent`.
pub fn load_torque(params: &MotorParams, speed: f64) -> f64 {
    params.load_torque * speed.max(0.0).powf(params.load_torque_exponent)
}

/// Slip at which the electrical torque peaks.
pub fn peak_torque_slip(params: &MotorParams) -> f64 {
    let r1 = params.stator_resistance;
    let x = params.stator_reactance + params.rotor_reactance;
    (params.rotor_resistance / (r1 * r1 + x * x).sqrt()).min(1.0)
}

/// Input impedance of the full equivalent circuit (magnetizing branch included).
pub fn equivalent_impedance(params: &MotorParams, slip: f64) -> Complex64 {
    let slip = slip.max(SLIP_MIN);
    let stator = Complex64::new(params.stator_resistance, params.stator_reactance);
    let rotor = Complex64::new(params.rotor_resistance / slip, params.rotor_reactance);
    let mag = Complex64::new(0.0, params.magnetizing_reactance);
    stator + mag * rotor / (mag + rotor)
}

/// Stator current of a three-phase motor at `slip` for terminal voltage `v`.
pub fn three_phase_current(params: &MotorParams, slip: f64, v: Complex64) -> Complex64 {
    v / equivalent_impedance(params, slip)
}

/// Stable-branch slip where `Te = Tm` at constant voltage, if one exists.
pub fn steady_state_slip(params: &MotorParams, v_mag: f64) -> Option<f64> {
    let balance =
        |s: f64| electrical_torque(params, s, v_mag).unwrap_or(0.0) - load_torque(params, 1.0 - s);
    let mut lo = SLIP_MIN;
    let mut hi = peak_torque_slip(params).max(SLIP_MIN);
    if balance(lo) >= 0.0 {
        return Some(lo);
    }
    if balance(hi) < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if balance(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Complex power drawn by a running single-phase motor, `P0 v^kp + j Q0 v^kq`
/// with `P0 = 1` on the motor base.
pub fn single_phase_running_power(params: &MotorParams, v_mag: f64) -> Complex64 {
    let q0 = (1.0 / (params.power_factor * params.power_factor) - 1.0)
        .max(0.0)
        .sqrt();
    Complex64::new(v_mag.powf(params.kp), q0 * v_mag.powf(params.kq))
}

/// Active input power at nominal voltage in steady state; used to size the
/// motor base so that the nominal draw equals the rated kW.
pub fn nominal_input_power(params: &MotorParams) -> Option<f64> {
    let v = Complex64::new(params.rated_voltage, 0.0);
    if params.motor_type.is_three_phase() {
        let slip = steady_state_slip(params, params.rated_voltage)?;
        let i = three_phase_current(params, slip, v);
        Some((v * i.conj()).re)
    } else {
        Some(single_phase_running_power(params, params.rated_voltage).re)
    }
}

fn speed_derivative(params: &MotorParams, speed: f64, v_mag: f64, connected: bool) -> f64 {
    let tm = load_torque(params, speed);
    let te = if connected {
        let slip = (1.0 - speed).clamp(SLIP_MIN, 1.0);
        electrical_torque(params, slip, v_mag).unwrap_or(0.0)
    } else {
        0.0
    };
    (te - tm) / (2.0 * params.inertia_h)
}

/// Advances a three-phase motor by `dt` with the terminal voltage held.
pub fn step_three_phase_motor(
    params: &MotorParams,
    state: &MotorState,
    v_terminal: Complex64,
    dt: f64,
) -> MotorState {
    let v_mag = v_terminal.norm();
    let clamp_speed = |w: f64| w.clamp(0.0, 1.0 - SLIP_MIN);
    let w0 = 1.0 - state.slip;
    let k1 = speed_derivative(params, w0, v_mag, state.connected);
    let w_pred = clamp_speed(w0 + dt * k1);
    let k2 = speed_derivative(params, w_pred, v_mag, state.connected);
    let mut w1 = clamp_speed(w0 + 0.5 * dt * (k1 + k2));
    if !state.connected {
        // coasting never re-accelerates
        w1 = w1.min(w0);
    }
    let slip = 1.0 - w1;
    let drawn_current = if state.connected {
        three_phase_current(params, slip, v_terminal)
    } else {
        Complex64::new(0.0, 0.0)
    };
    MotorState {
        slip,
        connected: state.connected,
        stalled: false,
        terminal_voltage: v_terminal,
        drawn_current,
        elapsed_under_stall_voltage: 0.0,
    }
}

/// Current drawn by a single-phase motor in the given mode.
pub fn single_phase_current(params: &MotorParams, stalled: bool, v: Complex64) -> Complex64 {
    if stalled {
        return v / params.stall_impedance();
    }
    let v_mag = v.norm();
    if v_mag == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    (single_phase_running_power(params, v_mag) / v).conj()
}

/// Advances a single-phase motor by `dt`.
///
/// The stall latch is only cleared by disconnection; a disconnected motor
/// restarts in running mode when reconnected.
pub fn step_single_phase_motor(
    params: &MotorParams,
    state: &MotorState,
    v_terminal: Complex64,
    dt: f64,
) -> MotorState {
    if !state.connected {
        return MotorState {
            slip: state.slip,
            connected: false,
            stalled: false,
            terminal_voltage: v_terminal,
            drawn_current: Complex64::new(0.0, 0.0),
            elapsed_under_stall_voltage: 0.0,
        };
    }
    let mut elapsed = state.elapsed_under_stall_voltage;
    let mut stalled = state.stalled;
    if !stalled {
        if v_terminal.norm() < params.stall_voltage {
            elapsed += dt;
        } else {
            elapsed = 0.0;
        }
        stalled = elapsed >= params.stall_delay;
    }
    MotorState {
        slip: if stalled { 1.0 } else { state.slip },
        connected: true,
        stalled,
        terminal_voltage: v_terminal,
        drawn_current: single_phase_current(params, stalled, v_terminal),
        elapsed_under_stall_voltage: elapsed,
    }
}

/// Dispatches on the motor category.
pub fn step_motor(
    params: &MotorParams,
    state: &MotorState,
    v_terminal: Complex64,
    dt: f64,
) -> MotorState {
    if params.motor_type.is_three_phase() {
        step_three_phase_motor(params, state, v_terminal, dt)
    } else {
        step_single_phase_motor(params, state, v_terminal, dt)
    }
}
