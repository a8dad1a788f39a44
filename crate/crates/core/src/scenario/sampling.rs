//! Seeded sampling of per-device protection settings.
//!
//! Every setting is drawn uniformly from a closed range with a ChaCha8 stream
//! seeded from the scenario's 64-bit seed. A draw takes the top 53 bits of one
//! `next_u64` as `u` in `[0, 1)` and maps it to `min + (max - min) * u`.
//! Fixed settings (`min == max`) still consume their draw, so editing one range
//! never reshuffles the others. Devices are visited in scenario order and,
//! within a device, protections in P1..P5 order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::protection::{
    OverloadParams, ProtectionKind, ThermalHeating, ThermalParams, VoltageProtectionParams,
};
use crate::units::cycles;

/// Closed interval; a bare number in JSON means a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RangeRepr", into = "RangeRepr")]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Fixed(f64),
    Span([f64; 2]),
}

impl From<RangeRepr> for ParamRange {
    fn from(r: RangeRepr) -> Self {
        match r {
            RangeRepr::Fixed(x) => ParamRange { min: x, max: x },
            RangeRepr::Span([min, max]) => ParamRange { min, max },
        }
    }
}

impl From<ParamRange> for RangeRepr {
    fn from(r: ParamRange) -> Self {
        if r.min == r.max {
            RangeRepr::Fixed(r.min)
        } else {
            RangeRepr::Span([r.min, r.max])
        }
    }
}

impl ParamRange {
    pub const fn fixed(x: f64) -> Self {
        ParamRange { min: x, max: x }
    }

    pub const fn new(min: f64, max: f64) -> Self {
        ParamRange { min, max }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.min + (self.max - self.min) * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageRanges {
    pub v_trip: ParamRange,
    pub t_trip: ParamRange,
    pub v_reconnect: ParamRange,
    pub t_reconnect: ParamRange,
    pub max_trip_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverloadRanges {
    pub i_trip: ParamRange,
    pub t_trip: ParamRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalRanges {
    pub t_threshold: ParamRange,
    pub t_therm: ParamRange,
    pub r_stall: ParamRange,
}

/// Setting ranges per protection type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtectionRanges {
    #[serde(rename = "P1")]
    pub p1: VoltageRanges,
    #[serde(rename = "P2")]
    pub p2: OverloadRanges,
    #[serde(rename = "P3")]
    pub p3: ThermalRanges,
    #[serde(rename = "P4")]
    pub p4: VoltageRanges,
    #[serde(rename = "P5")]
    pub p5: VoltageRanges,
}

impl Default for ProtectionRanges {
    fn default() -> Self {
        ProtectionRanges {
            p1: VoltageRanges {
                v_trip: ParamRange::new(0.8, 0.9),
                t_trip: ParamRange::new(cycles(20.0), 2.0),
                v_reconnect: ParamRange::fixed(0.95),
                t_reconnect: ParamRange::fixed(0.01),
                max_trip_count: 2,
            },
            p2: OverloadRanges {
                i_trip: ParamRange::fixed(3.0),
                t_trip: ParamRange::fixed(0.04),
            },
            p3: ThermalRanges {
                t_threshold: ParamRange::fixed(0.15),
                t_therm: ParamRange::fixed(10.0),
                r_stall: ParamRange::new(0.054, 0.086),
            },
            p4: VoltageRanges {
                v_trip: ParamRange::new(0.4, 0.6),
                t_trip: ParamRange::new(cycles(1.0), cycles(5.0)),
                v_reconnect: ParamRange::new(0.65, 0.7),
                t_reconnect: ParamRange::new(cycles(2.0), cycles(8.5)),
                max_trip_count: 10,
            },
            p5: VoltageRanges {
                v_trip: ParamRange::new(0.5, 0.6),
                t_trip: ParamRange::new(cycles(13.0), cycles(15.0)),
                v_reconnect: ParamRange::fixed(0.95),
                t_reconnect: ParamRange::fixed(2.0),
                max_trip_count: 10,
            },
        }
    }
}

impl ProtectionRanges {
    pub fn voltage(&self, kind: ProtectionKind) -> Option<&VoltageRanges> {
        match kind {
            ProtectionKind::P1 => Some(&self.p1),
            ProtectionKind::P4 => Some(&self.p4),
            ProtectionKind::P5 => Some(&self.p5),
            _ => None,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: String, r: &ParamRange, lower: f64, strict: bool| {
            if !(r.min <= r.max) || !r.min.is_finite() || !r.max.is_finite() {
                out.push(format!(
                    "protections.ranges.{name}: min {} exceeds max {}",
                    r.min, r.max
                ));
            } else if (strict && !(r.min > lower)) || (!strict && !(r.min >= lower)) {
                let op = if strict { ">" } else { ">=" };
                out.push(format!(
                    "protections.ranges.{name}: values must be {op} {lower}"
                ));
            }
        };
        for (kind, v) in [("P1", &self.p1), ("P4", &self.p4), ("P5", &self.p5)] {
            check(format!("{kind}.v_trip"), &v.v_trip, 0.0, false);
            check(format!("{kind}.t_trip"), &v.t_trip, 0.0, false);
            check(format!("{kind}.v_reconnect"), &v.v_reconnect, 0.0, false);
            check(format!("{kind}.t_reconnect"), &v.t_reconnect, 0.0, false);
        }
        check("P2.i_trip".into(), &self.p2.i_trip, 1.0, true);
        check("P2.t_trip".into(), &self.p2.t_trip, 0.0, false);
        check("P3.t_threshold".into(), &self.p3.t_threshold, 0.0, true);
        check("P3.t_therm".into(), &self.p3.t_therm, 0.0, true);
        check("P3.r_stall".into(), &self.p3.r_stall, 0.0, true);
        for (kind, v) in [("P1", &self.p1), ("P4", &self.p4), ("P5", &self.p5)] {
            if v.v_reconnect.min < v.v_trip.max {
                out.push(format!(
                    "protections.ranges.{kind}: v_reconnect range must lie at or above the v_trip range"
                ));
            }
            if v.max_trip_count < 1 {
                out.push(format!(
                    "protections.ranges.{kind}.max_trip_count must be >= 1"
                ));
            }
        }
        out
    }
}

/// Settings drawn for one device; `None` where the device lacks the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceProtectionParams {
    pub p1: Option<VoltageProtectionParams>,
    pub p2: Option<OverloadParams>,
    pub p3: Option<ThermalParams>,
    pub p4: Option<VoltageProtectionParams>,
    pub p5: Option<VoltageProtectionParams>,
}

impl DeviceProtectionParams {
    pub fn voltage(&self, kind: ProtectionKind) -> Option<&VoltageProtectionParams> {
        match kind {
            ProtectionKind::P1 => self.p1.as_ref(),
            ProtectionKind::P4 => self.p4.as_ref(),
            ProtectionKind::P5 => self.p5.as_ref(),
            _ => None,
        }
    }
}

/// Sampled settings for every device, in device order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionTable {
    pub seed: u64,
    pub devices: Vec<(String, DeviceProtectionParams)>,
}

impl ProtectionTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("protection table serializes")
    }
}

fn draw_voltage(r: &VoltageRanges, rng: &mut ChaCha8Rng) -> VoltageProtectionParams {
    VoltageProtectionParams {
        activated: true,
        work_time: 0.0,
        v_trip: r.v_trip.draw(rng),
        t_trip: r.t_trip.draw(rng),
        v_reconnect: r.v_reconnect.draw(rng),
        t_reconnect: r.t_reconnect.draw(rng),
        max_trip_count: r.max_trip_count,
    }
}

/// Draws settings for every `(device id, protections)` pair.
pub fn sample_protection_params(
    devices: &[(String, Vec<ProtectionKind>)],
    ranges: &ProtectionRanges,
    heating: ThermalHeating,
    rng_seed: u64,
) -> ProtectionTable {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rows = Vec::with_capacity(devices.len());
    for (id, kinds) in devices {
        let mut params = DeviceProtectionParams::default();
        for kind in ProtectionKind::ALL {
            if !kinds.contains(&kind) {
                continue;
            }
            match kind {
                ProtectionKind::P1 => params.p1 = Some(draw_voltage(&ranges.p1, &mut rng)),
                ProtectionKind::P2 => {
                    params.p2 = Some(OverloadParams {
                        i_trip: ranges.p2.i_trip.draw(&mut rng),
                        t_trip: ranges.p2.t_trip.draw(&mut rng),
                    })
                }
                ProtectionKind::P3 => {
                    params.p3 = Some(ThermalParams {
                        t_threshold: ranges.p3.t_threshold.draw(&mut rng),
                        t_therm: ranges.p3.t_therm.draw(&mut rng),
                        r_stall: ranges.p3.r_stall.draw(&mut rng),
                        heating,
                    })
                }
                ProtectionKind::P4 => params.p4 = Some(draw_voltage(&ranges.p4, &mut rng)),
                ProtectionKind::P5 => params.p5 = Some(draw_voltage(&ranges.p5, &mut rng)),
            }
        }
        rows.push((id.clone(), params));
    }
    ProtectionTable {
        seed: rng_seed,
        devices: rows,
    }
}
