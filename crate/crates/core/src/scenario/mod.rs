//! Scenario construction: building templates placed on a feeder, seeded
//! protection settings and the JSON scenario file.

pub mod file;
mod sampling;
mod templates;

pub use sampling::{
    sample_protection_params, DeviceProtectionParams, OverloadRanges, ParamRange, ProtectionRanges,
    ProtectionTable, ThermalRanges, VoltageRanges,
};
pub use templates::{
    builtin_template, builtin_templates, composition_summary, scale_to_target, template_summary,
    BuildingSite, BuildingTemplate, CompositionSummary, DeviceTemplate, LoadClass,
};

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::motor::{MotorParams, MotorType};
use crate::network::{
    Branch, CapBank, FeederModel, SolverOptions, SourceMode, SourceModel, Transformer, ZipLoad,
};
use crate::protection::{
    CapBankParams, OverloadParams, ProtectionKind, ThermalHeating, ThermalParams,
    VoltageProtectionParams,
};
use file::ScenarioFile;

/// Contents of the shipped all-protections experiment.
pub const SCENARIO_A_JSON: &str = include_str!("../../../../scenarios/scenario_A.json");
/// Contents of the shipped thermal-only experiment.
pub const SCENARIO_B_JSON: &str = include_str!("../../../../scenarios/scenario_B.json");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("scenario is invalid:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

impl ScenarioError {
    pub fn violations(&self) -> &[String] {
        match self {
            ScenarioError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Static load power factor and ZIP split shared by every building.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipFractions {
    pub a_z: f64,
    pub a_i: f64,
    pub a_p: f64,
    pub power_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionConfig {
    /// Enable flag per protection type, P1..P5.
    pub enabled: [bool; 5],
    pub ranges: ProtectionRanges,
    pub thermal_heating: ThermalHeating,
}

impl ProtectionConfig {
    pub fn is_enabled(&self, kind: ProtectionKind) -> bool {
        self.enabled[kind.index()]
    }
}

/// A validated, immutable simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub feeder: FeederModel,
    pub meter_node: Option<usize>,
    pub source: SourceModel,
    pub buildings: Vec<BuildingSite>,
    pub zip: ZipFractions,
    pub motor_defaults: BTreeMap<MotorType, MotorParams>,
    pub protections: ProtectionConfig,
    pub rng_seed: u64,
    pub duration: f64,
    pub dt: f64,
    pub settle: f64,
    pub record_every: usize,
    pub solver: SolverOptions,
    /// Non-fatal notes gathered while loading (e.g. defaulted seed).
    pub warnings: Vec<String>,
    /// SHA-256 of the scenario file bytes, when loaded from text.
    pub source_hash: Option<String>,
}

/// What a device draws from the network.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceLoad {
    Static(ZipLoad),
    Motor(MotorParams),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProtectionSettings {
    Voltage(VoltageProtectionParams),
    Overload(OverloadParams),
    Thermal(ThermalParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionInstance {
    pub kind: ProtectionKind,
    pub enabled: bool,
    pub settings: ProtectionSettings,
}

/// One simulated device with its attachment node and protections.
#[derive(Debug, Clone, PartialEq)]
pub struct DevicePlan {
    pub id: String,
    pub building: String,
    pub node: usize,
    pub class: LoadClass,
    /// Installed rating after scaling, kW.
    pub rating_kw: f64,
    pub load: DeviceLoad,
    pub protections: Vec<ProtectionInstance>,
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn device_slug(d: &DeviceTemplate) -> String {
    match d.class {
        LoadClass::Static => "static".to_string(),
        _ => slug(&format!("{} {}", d.appliance, d.equipment)),
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json_str(&text)
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut scenario = Scenario::from_file(&file)?;
        let digest = Sha256::digest(text.as_bytes());
        scenario.source_hash = Some(digest.iter().map(|b| format!("{b:02x}")).collect());
        Ok(scenario)
    }

    /// Shipped Scenario A: every protection enabled.
    pub fn shipped_a() -> Self {
        Scenario::from_json_str(SCENARIO_A_JSON).expect("shipped scenario A is valid")
    }

    /// Shipped Scenario B: thermal protection only.
    pub fn shipped_b() -> Self {
        Scenario::from_json_str(SCENARIO_B_JSON).expect("shipped scenario B is valid")
    }

    /// Validates a parsed file, reporting every violation at once.
    pub fn from_file(file: &ScenarioFile) -> Result<Self, ScenarioError> {
        let mut errs: Vec<String> = Vec::new();
        let mut warnings = Vec::new();

        // feeder
        let fs = &file.feeder;
        let node_ix = |id: &str, what: &str, errs: &mut Vec<String>| -> Option<usize> {
            let ix = fs.nodes.iter().position(|n| n == id);
            if ix.is_none() {
                errs.push(format!("{what} references unknown node `{id}`"));
            }
            ix
        };
        let source_node = node_ix(&fs.source_node, "feeder.source_node", &mut errs);
        let meter_node = fs
            .meter_node
            .as_deref()
            .and_then(|m| node_ix(m, "feeder.meter_node", &mut errs));
        let mut branches = Vec::new();
        for (k, b) in fs.branches.iter().enumerate() {
            let what = format!("feeder.branches[{k}]");
            if let (Some(from), Some(to)) = (
                node_ix(&b.from, &what, &mut errs),
                node_ix(&b.to, &what, &mut errs),
            ) {
                branches.push(Branch {
                    from,
                    to,
                    impedance: Complex64::new(b.r, b.x),
                });
            }
        }
        let mut transformers = Vec::new();
        for (k, t) in fs.transformers.iter().enumerate() {
            let what = format!("feeder.transformers[{k}]");
            if let (Some(from), Some(to)) = (
                node_ix(&t.from, &what, &mut errs),
                node_ix(&t.to, &what, &mut errs),
            ) {
                transformers.push(Transformer {
                    from,
                    to,
                    impedance: Complex64::new(t.r, t.x),
                    tap: t.tap,
                });
            }
        }
        let mut cap_banks = Vec::new();
        for (k, c) in fs.cap_banks.iter().enumerate() {
            if let Some(node) = node_ix(&c.node, &format!("feeder.cap_banks[{k}]"), &mut errs) {
                cap_banks.push(CapBank {
                    id: c.id.clone(),
                    node,
                    rated_kvar: c.kvar,
                    params: CapBankParams {
                        v_max: c.v_max,
                        v_min: c.v_min,
                    },
                });
            }
        }
        let feeder = FeederModel {
            base_mva: fs.base_mva,
            voltage_levels: fs.voltage_levels.clone(),
            nodes: fs.nodes.clone(),
            source_node: source_node.unwrap_or(0),
            branches,
            transformers,
            cap_banks,
        };
        if errs.is_empty() {
            errs.extend(
                feeder
                    .violations()
                    .into_iter()
                    .map(|v| format!("feeder: {v}")),
            );
        }

        // source
        let ss = &file.source;
        let e_th = Complex64::from_polar(ss.e_th, ss.angle_deg.to_radians());
        let z_th = Complex64::new(ss.r_th, ss.x_th);
        if !(ss.e_th > 0.0) {
            errs.push(format!("source.e_th must be > 0 (got {})", ss.e_th));
        }
        if ss.r_th < 0.0 {
            errs.push("source.r_th must be >= 0".into());
        }
        let source = match SourceModel::new(ss.mode, e_th, z_th, ss.sags.clone()) {
            Ok(s) => s,
            Err(e) => {
                errs.push(format!("source: {e}"));
                SourceModel {
                    mode: ss.mode,
                    e_th,
                    z_th,
                    sags: Vec::new(),
                }
            }
        };
        if ss.mode == SourceMode::Stiff && z_th.norm() > 0.0 {
            warnings.push("source.r_th/x_th are ignored in stiff mode".to_string());
        }

        // buildings
        let bs = &file.buildings;
        let zip = ZipFractions {
            a_z: bs.zip.a_z,
            a_i: bs.zip.a_i,
            a_p: bs.zip.a_p,
            power_factor: bs.zip.power_factor,
        };
        errs.extend(ZipLoad::violations(
            zip.a_z,
            zip.a_i,
            zip.a_p,
            "buildings.zip",
        ));
        if !(zip.power_factor > 0.0 && zip.power_factor <= 1.0) {
            errs.push("buildings.zip.power_factor must lie in (0, 1]".into());
        }
        let mut motor_defaults = BTreeMap::new();
        for t in MotorType::ALL {
            let mut p = MotorParams::default_for(t);
            if let Some(o) = bs.motors.get(&t) {
                o.apply(&mut p);
            }
            errs.extend(p.violations(&format!("buildings.motors.{}", t.as_str())));
            motor_defaults.insert(t, p);
        }
        let mut buildings = Vec::new();
        let mut names = HashSet::new();
        for (k, s) in bs.sites.iter().enumerate() {
            let what = format!("buildings.sites[{k}]");
            let template = match &s.devices {
                Some(devices) => Some(BuildingTemplate {
                    name: s.template.clone(),
                    devices: devices.clone(),
                }),
                None => builtin_template(&s.template),
            };
            let Some(template) = template else {
                errs.push(format!(
                    "{what}: unknown building template `{}`",
                    s.template
                ));
                continue;
            };
            if fs.nodes.iter().all(|n| *n != s.node) {
                errs.push(format!("{what}: unknown node `{}`", s.node));
            }
            if !(s.scale > 0.0) {
                errs.push(format!("{what}: scale must be > 0 (got {})", s.scale));
            }
            let mut seen = HashSet::new();
            for d in &template.devices {
                if !(d.rating_kw > 0.0) {
                    errs.push(format!(
                        "{what}: device `{} {}` needs a positive rating",
                        d.appliance, d.equipment
                    ));
                }
                if !seen.insert(device_slug(d)) {
                    errs.push(format!(
                        "{what}: duplicate device `{} {}`",
                        d.appliance, d.equipment
                    ));
                }
                if d.class == LoadClass::Static && !d.protections.is_empty() {
                    errs.push(format!("{what}: static loads carry no protections"));
                }
            }
            let base = s.name.clone().unwrap_or_else(|| slug(&template.name));
            let mut name = base.clone();
            let mut n = 2;
            while !names.insert(name.clone()) {
                if s.name.is_some() {
                    errs.push(format!("{what}: duplicate site name `{name}`"));
                    break;
                }
                name = format!("{base}_{n}");
                n += 1;
            }
            buildings.push(BuildingSite {
                name,
                template,
                node: s.node.clone(),
                scale: s.scale,
            });
        }
        if bs.sites.is_empty() {
            errs.push("buildings.sites is empty".into());
        }
        if let Some(target) = bs.target_mw {
            match scale_to_target(&buildings, target) {
                Some((scaled, _)) => buildings = scaled,
                None => errs.push(format!("buildings.target_mw must be > 0 (got {target})")),
            }
        }

        // protections
        let ps = &file.protections;
        errs.extend(ps.ranges.violations());

        // simulation
        let sim = &file.simulation;
        if !(sim.dt > 0.0) {
            errs.push(format!("simulation.dt must be > 0 (got {})", sim.dt));
        }
        if !(sim.duration > sim.dt) {
            errs.push(format!(
                "simulation.duration ({}) must exceed dt ({})",
                sim.duration, sim.dt
            ));
        }
        if !(sim.settle >= 0.0) {
            errs.push("simulation.settle must be >= 0".into());
        }
        if sim.record_every == 0 {
            errs.push("simulation.record_every must be >= 1".into());
        }
        if !(sim.solver.tolerance > 0.0) || sim.solver.max_iterations == 0 {
            errs.push("simulation.solver needs tolerance > 0 and max_iterations >= 1".into());
        }
        if let Some(first) = source.sags.first() {
            if first.start < sim.settle {
                warnings.push(format!(
                    "first sag at {} s begins before the {} s settling hold",
                    first.start, sim.settle
                ));
            }
        }
        let rng_seed = sim.rng_seed.unwrap_or_else(|| {
            warnings.push("simulation.rng_seed missing; defaulting to 0".to_string());
            0
        });

        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs));
        }
        Ok(Scenario {
            name: file.name.clone().unwrap_or_else(|| "scenario".to_string()),
            feeder,
            meter_node,
            source,
            buildings,
            zip,
            motor_defaults,
            protections: ProtectionConfig {
                enabled: ps.enabled.as_array(),
                ranges: ps.ranges,
                thermal_heating: ps.thermal_heating,
            },
            rng_seed,
            duration: sim.duration,
            dt: sim.dt,
            settle: sim.settle,
            record_every: sim.record_every,
            solver: sim.solver,
            warnings,
            source_hash: None,
        })
    }

    /// Re-checks the simulation invariants after CLI overrides.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) {
            errs.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.duration > self.dt) {
            errs.push(format!(
                "duration ({}) must exceed dt ({})",
                self.duration, self.dt
            ));
        }
        if self.buildings.iter().any(|b| !(b.scale > 0.0)) {
            errs.push("building scale factors must be > 0".into());
        }
        errs
    }

    /// Number of fixed steps in a run.
    pub fn step_count(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn head_node(&self) -> usize {
        self.feeder.source_node
    }

    fn device_protection_lists(&self) -> Vec<(String, Vec<ProtectionKind>)> {
        self.buildings
            .iter()
            .flat_map(|b| {
                b.template.devices.iter().map(move |d| {
                    (
                        format!("{}/{}", b.name, device_slug(d)),
                        d.protections.clone(),
                    )
                })
            })
            .collect()
    }

    /// Settings drawn for every device from the scenario's seed.
    pub fn protection_table(&self) -> ProtectionTable {
        sample_protection_params(
            &self.device_protection_lists(),
            &self.protections.ranges,
            self.protections.thermal_heating,
            self.rng_seed,
        )
    }

    /// Expands buildings into devices with sampled protection settings.
    ///
    /// Settings are drawn for every listed protection whether or not its type
    /// is enabled, so scenarios differing only in enable flags share settings.
    pub fn devices(&self) -> Vec<DevicePlan> {
        let table = self.protection_table();
        let mut rows = table.devices.into_iter();
        let mut out = Vec::new();
        for b in &self.buildings {
            let node = self.feeder.node_index(&b.node).expect("validated node");
            for d in &b.template.devices {
                let (id, params) = rows.next().expect("one row per device");
                let rating_kw = d.rating_kw * b.scale;
                let load = match d.class.motor_type() {
                    None => {
                        let pf = self.zip.power_factor;
                        let q = rating_kw * (1.0 / (pf * pf) - 1.0).max(0.0).sqrt();
                        DeviceLoad::Static(ZipLoad {
                            s0: Complex64::new(rating_kw, q),
                            a_z: self.zip.a_z,
                            a_i: self.zip.a_i,
                            a_p: self.zip.a_p,
                        })
                    }
                    Some(t) => {
                        let mut p = self.motor_defaults[&t].clone();
                        p.rated_power_kw = rating_kw;
                        if let Some(p3) = params.p3 {
                            p.r_stall = p3.r_stall;
                        }
                        DeviceLoad::Motor(p)
                    }
                };
                let mut protections = Vec::new();
                for kind in ProtectionKind::ALL {
                    let enabled = self.protections.is_enabled(kind);
                    let settings = match kind {
                        ProtectionKind::P2 => params.p2.map(ProtectionSettings::Overload),
                        ProtectionKind::P3 => params.p3.map(ProtectionSettings::Thermal),
                        _ => params.voltage(kind).map(|v| {
                            ProtectionSettings::Voltage(VoltageProtectionParams {
                                activated: enabled,
                                work_time: self.settle,
                                ..*v
                            })
                        }),
                    };
                    if let Some(settings) = settings {
                        protections.push(ProtectionInstance {
                            kind,
                            enabled,
                            settings,
                        });
                    }
                }
                out.push(DevicePlan {
                    id,
                    building: b.name.clone(),
                    node,
                    class: d.class,
                    rating_kw,
                    load,
                    protections,
                });
            }
        }
        out
    }

    /// Composition of the placed (scaled) buildings.
    pub fn composition(&self) -> CompositionSummary {
        composition_summary(self.buildings.iter().map(|b| (&b.template, b.scale)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "feeder": {
                "base_mva": 10.0,
                "nodes": ["head", "bus"],
                "source_node": "head",
                "branches": [{"from": "head", "to": "bus", "r": 0.01, "x": 0.06}]
            },
            "source": {"mode": "stiff"},
            "buildings": {"sites": [{"template": "Warehouse", "node": "bus"}]},
            "simulation": {"duration": 1.0, "rng_seed": 3}
        })
    }

    fn parse(v: &serde_json::Value) -> Result<Scenario, ScenarioError> {
        Scenario::from_json_str(&v.to_string())
    }

    #[test]
    fn minimal_file_loads_with_defaults() {
        let s = parse(&minimal()).unwrap();
        assert_eq!(s.dt, 1e-3);
        assert_eq!(s.rng_seed, 3);
        assert!(s.warnings.is_empty());
        let devices = s.devices();
        assert_eq!(devices.len(), 3);
        assert_eq!(devices[0].id, "warehouse/gas_heater_fan");
        assert_eq!(devices[2].id, "warehouse/static");
        assert_eq!(devices[0].protections.len(), 2);
    }

    #[test]
    fn missing_seed_defaults_to_zero_with_warning() {
        let mut v = minimal();
        v["simulation"].as_object_mut().unwrap().remove("rng_seed");
        let s = parse(&v).unwrap();
        assert_eq!(s.rng_seed, 0);
        assert!(s.warnings.iter().any(|w| w.contains("rng_seed")));
    }

    #[test]
    fn zip_sum_violation_is_named() {
        let mut v = minimal();
        v["buildings"]["zip"] = serde_json::json!({"a_z": 0.4, "a_i": 0.3, "a_p": 0.2});
        let err = parse(&v).unwrap_err();
        assert!(
            err.violations()
                .iter()
                .any(|m| m.contains("a_z + a_i + a_p")),
            "{err}"
        );
    }

    #[test]
    fn every_violation_is_reported() {
        let mut v = minimal();
        v["buildings"]["zip"] = serde_json::json!({"a_z": 0.5, "a_i": 0.3, "a_p": 0.3});
        v["simulation"]["dt"] = serde_json::json!(-1.0);
        v["buildings"]["sites"][0]["template"] = serde_json::json!("Hospital");
        v["source"]["sags"] = serde_json::json!([
            {"start": 1.0, "end": 1.2, "voltage": 0.3},
            {"start": 1.1, "end": 1.3, "voltage": 0.3}
        ]);
        let err = parse(&v).unwrap_err();
        let msgs = err.violations();
        assert!(msgs.len() >= 4, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("Hospital")));
        assert!(msgs
            .iter()
            .any(|m| m.contains("overlap") && m.contains("[1, 1.2)")));
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = "{\n  \"feeder\": {\"base_mva\": 10, \"nodes\": [\"a\"], \"source_node\": \"a\", \"colour\": 1}\n}";
        match Scenario::from_json_str(text).unwrap_err() {
            ScenarioError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shipped_scenarios_differ_only_in_enable_flags() {
        let a = Scenario::shipped_a();
        let b = Scenario::shipped_b();
        assert_eq!(a.protections.enabled, [true; 5]);
        assert_eq!(b.protections.enabled, [false, false, true, false, false]);
        assert_eq!(a.feeder, b.feeder);
        assert_eq!(a.source, b.source);
        assert_eq!(a.buildings, b.buildings);
        assert_eq!(a.rng_seed, b.rng_seed);
        assert_eq!(a.protection_table(), b.protection_table());
        assert_eq!(a.buildings.len(), 6);
        let sag = a.source.sags[0];
        assert!((sag.end - sag.start - 0.1).abs() < 1e-12);
        assert_eq!(sag.voltage, 0.35);
    }

    #[test]
    fn shipped_composition_matches_templates() {
        let s = Scenario::shipped_a().composition();
        let t = template_summary(&builtin_templates());
        for c in LoadClass::ALL {
            assert!((s.percent(c) - t.percent(c)).abs() < 0.01);
        }
    }

    #[test]
    fn md_stall_resistance_comes_from_p3() {
        let s = Scenario::shipped_a();
        for d in s.devices() {
            if let DeviceLoad::Motor(p) = &d.load {
                if p.motor_type == MotorType::MD {
                    assert!((0.054..=0.086).contains(&p.r_stall), "{}", d.id);
                }
            }
        }
    }

    #[test]
    fn seed_determinism_is_a_function_of_text_and_seed() {
        let a1 = Scenario::from_json_str(SCENARIO_A_JSON).unwrap();
        let a2 = Scenario::from_json_str(SCENARIO_A_JSON).unwrap();
        assert_eq!(
            a1.protection_table().to_json(),
            a2.protection_table().to_json()
        );
        assert_eq!(a1.source_hash, a2.source_hash);
        let mut a3 = a1.clone();
        a3.rng_seed += 1;
        assert_ne!(
            a1.protection_table().to_json(),
            a3.protection_table().to_json()
        );
    }
}
