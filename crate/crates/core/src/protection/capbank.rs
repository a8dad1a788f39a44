use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapBankStatus {
    #[default]
    On,
    Off,
}

/// Over-voltage band of a capacitor bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapBankParams {
    pub v_max: f64,
    pub v_min: f64,
}

impl Default for CapBankParams {
    fn default() -> Self {
        CapBankParams {
            v_max: 1.10,
            v_min: 1.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CapBankState {
    pub status: CapBankStatus,
}

/// Off at or above `v_max`, back on at or below `v_min`, unchanged in between.
pub fn step_capbank(p: &CapBankParams, s: &CapBankState, v_op: f64) -> CapBankState {
    let status = if v_op >= p.v_max {
        CapBankStatus::Off
    } else if v_op <= p.v_min {
        CapBankStatus::On
    } else {
        s.status
    };
    CapBankState { status }
}
