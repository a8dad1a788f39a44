use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::protection::ProtectionKind;

use super::StepOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Trip,
    Reconnect,
    Stall,
    CapbankOff,
    CapbankOn,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::Trip,
        EventKind::Reconnect,
        EventKind::Stall,
        EventKind::CapbankOff,
        EventKind::CapbankOn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Trip => "trip",
            EventKind::Reconnect => "reconnect",
            EventKind::Stall => "stall",
            EventKind::CapbankOff => "capbank_off",
            EventKind::CapbankOn => "capbank_on",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

/// What produced an event. Stall transitions carry the contactor-equivalent
/// label, capacitor bank switching carries `capbank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventCause {
    Protection(ProtectionKind),
    ContactorEquivalent,
    Capbank,
}

impl EventCause {
    pub fn protection(self) -> Option<ProtectionKind> {
        match self {
            EventCause::Protection(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for EventCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventCause::Protection(k) => f.write_str(k.as_str()),
            EventCause::ContactorEquivalent => f.write_str("contactor-equivalent"),
            EventCause::Capbank => f.write_str("capbank"),
        }
    }
}

impl FromStr for EventCause {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contactor-equivalent" => Ok(EventCause::ContactorEquivalent),
            "capbank" => Ok(EventCause::Capbank),
            other => other
                .parse()
                .map(EventCause::Protection)
                .map_err(|_| format!("unknown event cause `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub device: String,
    pub kind: EventKind,
    pub cause: EventCause,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.3} s {} {}:{}",
            self.time, self.device, self.kind, self.cause
        )
    }
}

/// Per-device sample. Current is on the device base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceRecord {
    pub current: f64,
    pub connected: bool,
    pub stalled: bool,
    pub temperature: f64,
}

/// Recorded output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub node_ids: Vec<String>,
    pub device_ids: Vec<String>,
    pub dt: f64,
    pub head_node: usize,
    pub meter_node: Option<usize>,
    pub sag_start: Option<f64>,
    pub sag_end: Option<f64>,
    pub time: Vec<f64>,
    /// `voltages[step][node]`, magnitudes in pu.
    pub voltages: Vec<Vec<f64>>,
    /// `devices[step][device]`.
    pub devices: Vec<Vec<DeviceRecord>>,
    pub events: Vec<Event>,
    /// Complex power mismatch of each recorded step, system base.
    pub power_mismatch: Vec<f64>,
}

impl SimulationTrace {
    pub(super) fn push(&mut self, out: StepOutput, record: bool) {
        self.events.extend(out.events);
        if record {
            self.time.push(out.time);
            self.voltages.push(out.voltages);
            self.devices.push(out.devices);
            self.power_mismatch.push(out.power_mismatch);
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    pub fn device_index(&self, id: &str) -> Option<usize> {
        self.device_ids.iter().position(|d| d == id)
    }

    pub fn node_series(&self, node: usize) -> Vec<f64> {
        self.voltages.iter().map(|row| row[node]).collect()
    }

    pub fn head_voltage(&self) -> Vec<f64> {
        self.node_series(self.head_node)
    }

    pub fn device_series(&self, device: usize) -> Vec<DeviceRecord> {
        self.devices.iter().map(|row| row[device]).collect()
    }

    pub fn events_for<'a>(&'a self, device: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
        self.events.iter().filter(move |e| e.device == device)
    }

    /// Trip events per protection type, P1..P5.
    pub fn trip_counts(&self) -> [usize; 5] {
        let mut out = [0; 5];
        for e in &self.events {
            if let (EventKind::Trip, Some(k)) = (e.kind, e.cause.protection()) {
                out[k.index()] += 1;
            }
        }
        out
    }

    pub fn max_power_mismatch(&self) -> f64 {
        self.power_mismatch.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for k in EventKind::ALL {
            assert_eq!(k.as_str().parse::<EventKind>().unwrap(), k);
        }
        let causes = [
            EventCause::Protection(ProtectionKind::P4),
            EventCause::ContactorEquivalent,
            EventCause::Capbank,
        ];
        for c in causes {
            assert_eq!(c.to_string().parse::<EventCause>().unwrap(), c);
        }
        assert!("P9".parse::<EventCause>().is_err());
    }
}
