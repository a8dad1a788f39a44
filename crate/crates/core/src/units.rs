//! Per-unit and time helpers shared across modules.

/// System frequency used to convert cycle-denominated delays.
pub const NOMINAL_HZ: f64 = 60.0;

/// Converts a delay expressed in 60 Hz cycles to seconds.
pub fn cycles(n: f64) -> f64 {
    n / NOMINAL_HZ
}

/// Ratio converting a quantity on a device base (kVA) to the system base (MVA).
pub fn base_ratio(device_kva: f64, system_mva: f64) -> f64 {
    device_kva / (system_mva * 1000.0)
}
