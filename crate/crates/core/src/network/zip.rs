use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Static load split into constant-impedance, constant-current and
/// constant-power fractions of its nominal demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipLoad {
    /// Demand at 1 pu voltage, kVA.
    pub s0: Complex64,
    pub a_z: f64,
    pub a_i: f64,
    pub a_p: f64,
}

impl ZipLoad {
    pub fn violations(a_z: f64, a_i: f64, a_p: f64, context: &str) -> Vec<String> {
        let mut out = Vec::new();
        if a_z < 0.0 || a_i < 0.0 || a_p < 0.0 {
            out.push(format!("{context}: ZIP fractions must be >= 0"));
        }
        let sum = a_z + a_i + a_p;
        if !((sum - 1.0).abs() <= 1e-9) {
            out.push(format!(
                "{context}: ZIP fractions a_z + a_i + a_p must sum to 1 (got {sum})"
            ));
        }
        out
    }
}

/// `S = S0 (a_Z v^2 + a_I v + a_P)`.
pub fn zip_power(load: &ZipLoad, v_mag: f64) -> Complex64 {
    load.s0 * (load.a_z * v_mag * v_mag + load.a_i * v_mag + load.a_p)
}
