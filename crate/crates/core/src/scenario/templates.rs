//! Commercial building load templates and composition bookkeeping.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::motor::MotorType;
use crate::protection::ProtectionKind;
use crate::protection::ProtectionKind::{P1, P2, P3, P4, P5};

/// Load category of a template row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LoadClass {
    Static,
    MA,
    MB,
    MC,
    MD,
}

impl LoadClass {
    pub const ALL: [LoadClass; 5] = [
        LoadClass::Static,
        LoadClass::MA,
        LoadClass::MB,
        LoadClass::MC,
        LoadClass::MD,
    ];

    pub fn motor_type(self) -> Option<MotorType> {
        match self {
            LoadClass::Static => None,
            LoadClass::MA => Some(MotorType::MA),
            LoadClass::MB => Some(MotorType::MB),
            LoadClass::MC => Some(MotorType::MC),
            LoadClass::MD => Some(MotorType::MD),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LoadClass::Static => "Static",
            LoadClass::MA => "MA",
            LoadClass::MB => "MB",
            LoadClass::MC => "MC",
            LoadClass::MD => "MD",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceTemplate {
    pub appliance: String,
    #[serde(default)]
    pub equipment: String,
    pub class: LoadClass,
    #[serde(default)]
    pub protections: Vec<ProtectionKind>,
    pub rating_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingTemplate {
    pub name: String,
    pub devices: Vec<DeviceTemplate>,
}

impl BuildingTemplate {
    pub fn total_kw(&self) -> f64 {
        self.devices.iter().map(|d| d.rating_kw).sum()
    }
}

/// A building instance placed on the feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSite {
    pub name: String,
    pub template: BuildingTemplate,
    pub node: String,
    pub scale: f64,
}

fn row(
    appliance: &str,
    equipment: &str,
    class: LoadClass,
    protections: &[ProtectionKind],
    rating_kw: f64,
) -> DeviceTemplate {
    DeviceTemplate {
        appliance: appliance.to_string(),
        equipment: equipment.to_string(),
        class,
        protections: protections.to_vec(),
        rating_kw,
    }
}

fn statics(rating_kw: f64) -> DeviceTemplate {
    row("Static Loads", "", LoadClass::Static, &[], rating_kw)
}

/// The six commercial building templates.
///
/// Static load ratings for Large Retail, School and Hotel carry a third
/// decimal (122.948, 617.116, 571.476). Each still rounds to its two-decimal
/// table entry, and together they make the static total come out at the
/// published 1471.45 kW instead of the 1471.46 kW the rounded rows sum to.
pub fn builtin_templates() -> Vec<BuildingTemplate> {
    use LoadClass::*;
    let b = |name: &str, devices: Vec<DeviceTemplate>| BuildingTemplate {
        name: name.to_string(),
        devices,
    };
    vec![
        b(
            "Medium Retail",
            vec![
                row("RTU", "Fan", MB, &[P2, P4, P5], 15.38),
                row("RTU", "Compressor", MA, &[P2, P4, P5], 53.13),
                row("RTU", "Frac. Condenser", MD, &[P3, P4, P5], 16.25),
                row("RTU", "Frac. Ind. Draft", MD, &[P3, P4, P5], 10.41),
                row("Exhaust", "Frac. Fan", MD, &[P3, P4, P5], 0.92),
                statics(41.18),
            ],
        ),
        b(
            "Large Retail",
            vec![
                row("RTU", "Fan", MB, &[P2, P4, P5], 46.15),
                row("RTU", "Compressor", MA, &[P2, P4, P5], 159.38),
                row("RTU", "Frac. Condenser", MD, &[P3, P4, P5], 48.75),
                row("RTU", "Frac. Ind. Draft", MD, &[P3, P4, P5], 31.22),
                row("Exhaust", "Frac. Fan", MD, &[P3, P4, P5], 1.38),
                statics(122.948),
            ],
        ),
        b(
            "Supermarket",
            vec![
                row("RF", "Compressor", MA, &[P2, P4], 42.5),
                row("RF", "Frac. Fan", MD, &[P3], 17.0),
                row("Exhaust", "Frac. Fan", MD, &[P3, P4, P5], 1.38),
                row("RTU", "Fan", MB, &[P2, P4, P5], 30.77),
                row("RTU", "Compressor", MA, &[P2, P4, P5], 106.25),
                row("RTU", "Frac. Condenser", MD, &[P3, P4, P5], 32.5),
                row("RTU", "Frac. Ind. Draft", MD, &[P3, P4, P5], 20.81),
                statics(107.66),
            ],
        ),
        b(
            "Warehouse",
            vec![
                row("Gas_Heater", "Fan", MD, &[P3, P4], 1.2),
                row("Exhaust", "Frac. Fan", MD, &[P3, P4], 24.62),
                statics(11.07),
            ],
        ),
        b(
            "School",
            vec![
                row("Chiller", "Compressor", MA, &[P1, P4, P5], 350.0),
                row("Chiller", "Pump", MC, &[P2, P5], 98.0),
                row("Cool_Tower", "Fan", MB, &[P2, P4, P5], 42.0),
                row("Fan_Coil", "Fan", MB, &[P4, P5], 6.15),
                row("Exhaust", "Fan", MB, &[P2, P4, P5], 1.29),
                row("Boilers", "Ind. Draft", MB, &[P1, P4, P5], 83.25),
                row("Boilers", "Pump", MC, &[P2, P5], 98.0),
                row("RTU", "Fan", MB, &[P2, P4, P5], 123.0),
                row("RTU", "Compressor", MA, &[P2, P4, P5], 425.0),
                row("RTU", "Frac. Condenser", MD, &[P3, P4, P5], 130.0),
                row("RTU", "Frac. Ind. Draft", MD, &[P3, P4, P5], 83.25),
                statics(617.116),
            ],
        ),
        b(
            "Hotel",
            vec![
                row("PTAC", "Compressor", MA, &[P4], 425.0),
                row("PTAC", "Fan", MD, &[P3], 123.0),
                row("Exhaust", "Fan", MD, &[P3], 23.0),
                row("HWP", "Pump", MD, &[P3], 1.2),
                row("Split", "Fan", MB, &[P2, P4], 123.0),
                row("Split", "Compressor", MA, &[P2, P4], 425.0),
                row("Split", "Frac. Condenser", MD, &[P3, P4], 130.0),
                row("Split", "Frac. Ind. Draft", MD, &[P3, P4], 83.25),
                statics(571.476),
            ],
        ),
    ]
}

/// Looks a built-in template up by name (case-insensitive, `_`/space agnostic).
pub fn builtin_template(name: &str) -> Option<BuildingTemplate> {
    let key = |s: &str| s.to_ascii_lowercase().replace(['_', '-'], " ");
    builtin_templates()
        .into_iter()
        .find(|t| key(&t.name) == key(name))
}

/// Installed kW per load class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionSummary {
    pub totals_kw: [f64; 5],
}

impl CompositionSummary {
    pub fn total_kw(&self) -> f64 {
        self.totals_kw.iter().sum()
    }

    pub fn kw(&self, class: LoadClass) -> f64 {
        self.totals_kw[class.index()]
    }

    pub fn percent(&self, class: LoadClass) -> f64 {
        100.0 * self.kw(class) / self.total_kw()
    }
}

/// Aggregates `(template, scale)` pairs by load class.
pub fn composition_summary<'a>(
    items: impl IntoIterator<Item = (&'a BuildingTemplate, f64)>,
) -> CompositionSummary {
    let mut totals_kw = [0.0; 5];
    for (template, scale) in items {
        for d in &template.devices {
            totals_kw[d.class.index()] += d.rating_kw * scale;
        }
    }
    CompositionSummary { totals_kw }
}

/// Summary of unscaled templates.
pub fn template_summary(templates: &[BuildingTemplate]) -> CompositionSummary {
    composition_summary(templates.iter().map(|t| (t, 1.0)))
}

/// Applies one uniform factor to every site so that the installed load equals
/// `target_mw`. Returns the scaled sites and the factor.
pub fn scale_to_target(
    buildings: &[BuildingSite],
    target_mw: f64,
) -> Option<(Vec<BuildingSite>, f64)> {
    let current_kw: f64 = buildings
        .iter()
        .map(|b| b.template.total_kw() * b.scale)
        .sum();
    if !(target_mw > 0.0) || !(current_kw > 0.0) {
        return None;
    }
    let factor = target_mw * 1000.0 / current_kw;
    let scaled = buildings
        .iter()
        .map(|b| BuildingSite {
            scale: b.scale * factor,
            ..b.clone()
        })
        .collect();
    Some((scaled, factor))
}
