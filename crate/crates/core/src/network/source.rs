use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NetworkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    /// Head-node voltage is imposed directly.
    Stiff,
    /// Voltage source behind `z_th`; load current feeds back on the head voltage.
    Thevenin,
}

/// Scheduled depression of the source voltage over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sag {
    pub start: f64,
    pub end: f64,
    pub voltage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub mode: SourceMode,
    pub e_th: Complex64,
    pub z_th: Complex64,
    pub sags: Vec<Sag>,
}

impl SourceModel {
    pub fn new(
        mode: SourceMode,
        e_th: Complex64,
        z_th: Complex64,
        mut sags: Vec<Sag>,
    ) -> Result<Self, NetworkError> {
        for s in &sags {
            if !(s.end > s.start) || !(s.voltage >= 0.0) {
                return Err(NetworkError::Source(format!(
                    "sag [{}, {}) to {} pu needs end > start and a non-negative voltage",
                    s.start, s.end, s.voltage
                )));
            }
        }
        if mode == SourceMode::Thevenin && z_th.norm() == 0.0 {
            return Err(NetworkError::Source(
                "a Thevenin source needs a non-zero impedance".into(),
            ));
        }
        sags.sort_by(|a, b| a.start.total_cmp(&b.start));
        if let Some(w) = sags.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(NetworkError::OverlappingSags {
                first: (w[0].start, w[0].end),
                second: (w[1].start, w[1].end),
            });
        }
        Ok(SourceModel {
            mode,
            e_th,
            z_th,
            sags,
        })
    }

    pub fn stiff(e_th: f64) -> Self {
        SourceModel {
            mode: SourceMode::Stiff,
            e_th: Complex64::new(e_th, 0.0),
            z_th: Complex64::new(0.0, 0.0),
            sags: Vec::new(),
        }
    }

    /// End of the last scheduled sag.
    pub fn last_sag_end(&self) -> Option<f64> {
        self.sags.iter().map(|s| s.end).reduce(f64::max)
    }
}

/// Source voltage in effect at `t_now`: the sag magnitude (at the angle of
/// `e_th`) inside a sag interval, `e_th` otherwise.
pub fn apply_sag(source: &SourceModel, t_now: f64) -> Complex64 {
    match source
        .sags
        .iter()
        .find(|s| t_now >= s.start && t_now < s.end)
    {
        Some(sag) => {
            let angle = if source.e_th.norm() > 0.0 {
                source.e_th.arg()
            } else {
                0.0
            };
            Complex64::from_polar(sag.voltage, angle)
        }
        None => source.e_th,
    }
}
