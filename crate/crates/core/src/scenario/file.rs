//! On-disk JSON scenario schema. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::motor::{MotorParams, MotorType};
use crate::network::{Sag, SolverOptions, SourceMode, VoltageLevel};
use crate::protection::ThermalHeating;

use super::sampling::ProtectionRanges;
use super::templates::DeviceTemplate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub feeder: FeederSpec,
    pub source: SourceSpec,
    pub buildings: BuildingsSpec,
    #[serde(default)]
    pub protections: ProtectionsSpec,
    pub simulation: SimulationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederSpec {
    pub base_mva: f64,
    #[serde(default)]
    pub voltage_levels: Vec<VoltageLevel>,
    pub nodes: Vec<String>,
    pub source_node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter_node: Option<String>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub transformers: Vec<TransformerSpec>,
    #[serde(default)]
    pub cap_banks: Vec<CapBankSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerSpec {
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
    #[serde(default = "one")]
    pub tap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapBankSpec {
    pub id: String,
    pub node: String,
    pub kvar: f64,
    #[serde(default = "cap_v_max")]
    pub v_max: f64,
    #[serde(default = "cap_v_min")]
    pub v_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub mode: SourceMode,
    #[serde(default = "one")]
    pub e_th: f64,
    #[serde(default)]
    pub angle_deg: f64,
    #[serde(default)]
    pub r_th: f64,
    #[serde(default)]
    pub x_th: f64,
    #[serde(default)]
    pub sags: Vec<Sag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingsSpec {
    /// Installed load the sites are uniformly scaled to, MW.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_mw: Option<f64>,
    #[serde(default)]
    pub zip: ZipSpec,
    /// Per-category overrides of the motor defaults.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub motors: BTreeMap<MotorType, MotorOverride>,
    pub sites: Vec<SiteSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub template: String,
    pub node: String,
    #[serde(default = "one")]
    pub scale: f64,
    /// Inline device list; replaces the built-in template of the same name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub devices: Option<Vec<DeviceTemplate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZipSpec {
    pub a_z: f64,
    pub a_i: f64,
    pub a_p: f64,
    #[serde(default = "zip_pf")]
    pub power_factor: f64,
}

impl Default for ZipSpec {
    fn default() -> Self {
        ZipSpec {
            a_z: 0.4,
            a_i: 0.3,
            a_p: 0.3,
            power_factor: zip_pf(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorOverride {
    pub stator_resistance: Option<f64>,
    pub stator_reactance: Option<f64>,
    pub magnetizing_reactance: Option<f64>,
    pub rotor_resistance: Option<f64>,
    pub rotor_reactance: Option<f64>,
    pub inertia_h: Option<f64>,
    pub load_torque: Option<f64>,
    pub load_torque_exponent: Option<f64>,
    pub stall_voltage: Option<f64>,
    pub stall_delay: Option<f64>,
    pub r_stall: Option<f64>,
    pub x_stall: Option<f64>,
    pub kp: Option<f64>,
    pub kq: Option<f64>,
    pub power_factor: Option<f64>,
}

impl MotorOverride {
    pub fn apply(&self, p: &mut MotorParams) {
        let fields: [(&mut f64, Option<f64>); 15] = [
            (&mut p.stator_resistance, self.stator_resistance),
            (&mut p.stator_reactance, self.stator_reactance),
            (&mut p.magnetizing_reactance, self.magnetizing_reactance),
            (&mut p.rotor_resistance, self.rotor_resistance),
            (&mut p.rotor_reactance, self.rotor_reactance),
            (&mut p.inertia_h, self.inertia_h),
            (&mut p.load_torque, self.load_torque),
            (&mut p.load_torque_exponent, self.load_torque_exponent),
            (&mut p.stall_voltage, self.stall_voltage),
            (&mut p.stall_delay, self.stall_delay),
            (&mut p.r_stall, self.r_stall),
            (&mut p.x_stall, self.x_stall),
            (&mut p.kp, self.kp),
            (&mut p.kq, self.kq),
            (&mut p.power_factor, self.power_factor),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnabledSpec {
    #[serde(rename = "P1", default = "yes")]
    pub p1: bool,
    #[serde(rename = "P2", default = "yes")]
    pub p2: bool,
    #[serde(rename = "P3", default = "yes")]
    pub p3: bool,
    #[serde(rename = "P4", default = "yes")]
    pub p4: bool,
    #[serde(rename = "P5", default = "yes")]
    pub p5: bool,
}

impl Default for EnabledSpec {
    fn default() -> Self {
        EnabledSpec {
            p1: true,
            p2: true,
            p3: true,
            p4: true,
            p5: true,
        }
    }
}

impl EnabledSpec {
    pub fn as_array(&self) -> [bool; 5] {
        [self.p1, self.p2, self.p3, self.p4, self.p5]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectionsSpec {
    #[serde(default)]
    pub enabled: EnabledSpec,
    #[serde(default)]
    pub ranges: ProtectionRanges,
    #[serde(default)]
    pub thermal_heating: ThermalHeating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    /// Protections stay inert until this time.
    #[serde(default = "default_settle")]
    pub settle: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn cap_v_max() -> f64 {
    1.10
}
fn cap_v_min() -> f64 {
    1.05
}
fn zip_pf() -> f64 {
    0.95
}
fn default_dt() -> f64 {
    1e-3
}
fn default_settle() -> f64 {
    0.5
}
fn default_record_every() -> usize {
    1
}
