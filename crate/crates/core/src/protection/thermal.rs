use serde::{Deserialize, Serialize};

/// Which current heats the thermal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalHeating {
    /// `R_stall * I^2` only while the motor is stalled.
    #[default]
    StallOnly,
    /// `R_stall * I^2` from the total drawn current, stalled or not.
    TotalCurrent,
}

/// Thermal protection (P3) of a single-phase motor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Trip temperature, pu.
    pub t_threshold: f64,
    /// Thermal time constant, s.
    pub t_therm: f64,
    pub r_stall: f64,
    #[serde(default)]
    pub heating: ThermalHeating,
}

impl ThermalParams {
    pub fn violations(&self, context: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.t_threshold > 0.0) {
            out.push(format!("{context}: t_threshold must be > 0"));
        }
        if !(self.t_therm > 0.0) {
            out.push(format!("{context}: t_therm must be > 0"));
        }
        if !(self.r_stall > 0.0) {
            out.push(format!("{context}: r_stall must be > 0"));
        }
        out
    }

    /// Heating input `u` of the first-order lag.
    pub fn heating_input(&self, i_measured: f64, is_stalled: bool) -> f64 {
        match self.heating {
            ThermalHeating::StallOnly if !is_stalled => 0.0,
            _ => self.r_stall * i_measured * i_measured,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThermalState {
    pub temperature: f64,
    pub tripped: bool,
}

/// Advances `T_therm * dtemp/dt = u - temp` exactly for an input held over
/// the step, then latches a trip once the temperature exceeds the threshold.
pub fn step_thermal_protection(
    p: &ThermalParams,
    s: &ThermalState,
    i_measured: f64,
    is_stalled: bool,
    dt: f64,
) -> ThermalState {
    let u = p.heating_input(i_measured, is_stalled);
    let decay = (-dt / p.t_therm).exp();
    let temperature = (u + (s.temperature - u) * decay).max(0.0);
    ThermalState {
        temperature,
        tripped: s.tripped || temperature > p.t_threshold,
    }
}
