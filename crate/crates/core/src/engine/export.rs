//! CSV trace files and the JSON metadata sidecar.
//!
//! `voltages.csv` is wide (time plus one column per node), `devices.csv` is
//! long (`time,device,current,connected,stalled,temperature`) and
//! `events.csv` lists `time,device,kind,cause`. Times are written with six
//! decimals and values with ten, so identical traces give identical bytes.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

use super::{ComparisonReport, DeviceRecord, Event, SimulationTrace};

pub const VOLTAGES_FILE: &str = "voltages.csv";
pub const DEVICES_FILE: &str = "devices.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub scenario: String,
    pub seed: u64,
    /// SHA-256 of the scenario file, when the run came from one.
    pub scenario_hash: Option<String>,
    pub dt: f64,
    pub duration: f64,
    pub record_every: usize,
    pub version: String,
    pub head_node: String,
    pub meter_node: Option<String>,
    pub sag_start: Option<f64>,
    pub sag_end: Option<f64>,
    pub warnings: Vec<String>,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall-clock stamp; omitted in deterministic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

fn file_name(base: &str, partial: bool) -> String {
    if partial {
        format!("{base}.partial")
    } else {
        base.to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, ExportError> {
    csv::Writer::from_path(path).map_err(|source| ExportError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes the three CSV files and the metadata sidecar into `dir`, creating
/// it if needed. With `partial` every file name gets a `.partial` suffix.
/// Returns the paths written.
pub fn write_trace(
    dir: &Path,
    trace: &SimulationTrace,
    meta: &RunMetadata,
    partial: bool,
) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(|source| ExportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();

    let path = dir.join(file_name(VOLTAGES_FILE, partial));
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source: csv::Error| ExportError::Csv {
            path: path.clone(),
            source,
        }
    };
    let mut w = csv_writer(&path)?;
    let mut header = vec!["time".to_string()];
    header.extend(trace.node_ids.iter().cloned());
    w.write_record(&header).map_err(wrap(&path))?;
    for (t, row) in trace.time.iter().zip(&trace.voltages) {
        let mut rec = vec![format!("{t:.6}")];
        rec.extend(row.iter().map(|v| format!("{v:.10}")));
        w.write_record(&rec).map_err(wrap(&path))?;
    }
    w.flush().map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join(file_name(DEVICES_FILE, partial));
    let mut w = csv_writer(&path)?;
    w.write_record([
        "time",
        "device",
        "current",
        "connected",
        "stalled",
        "temperature",
    ])
    .map_err(wrap(&path))?;
    for (t, row) in trace.time.iter().zip(&trace.devices) {
        let t = format!("{t:.6}");
        for (id, r) in trace.device_ids.iter().zip(row) {
            w.write_record([
                t.as_str(),
                id.as_str(),
                &format!("{:.10}", r.current),
                flag(r.connected),
                flag(r.stalled),
                &format!("{:.10}", r.temperature),
            ])
            .map_err(wrap(&path))?;
        }
    }
    w.flush().map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join(file_name(EVENTS_FILE, partial));
    let mut w = csv_writer(&path)?;
    w.write_record(["time", "device", "kind", "cause"])
        .map_err(wrap(&path))?;
    for e in &trace.events {
        w.write_record([
            format!("{:.6}", e.time),
            e.device.clone(),
            e.kind.to_string(),
            e.cause.to_string(),
        ])
        .map_err(wrap(&path))?;
    }
    w.flush().map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join(file_name(METADATA_FILE, partial));
    let mut text = serde_json::to_string_pretty(meta).map_err(|source| ExportError::Json {
        path: path.clone(),
        source,
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}

fn format_err(path: &Path, message: impl Into<String>) -> ExportError {
    ExportError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_f64(path: &Path, s: &str) -> Result<f64, ExportError> {
    s.trim()
        .parse()
        .map_err(|_| format_err(path, format!("bad number `{s}`")))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, ExportError> {
    csv::Reader::from_path(path).map_err(|source| ExportError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a trace written by [`write_trace`]. Power mismatch is not stored
/// and comes back empty.
pub fn read_trace(dir: &Path) -> Result<(SimulationTrace, RunMetadata), ExportError> {
    let path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&path).map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    let meta: RunMetadata = serde_json::from_str(&text).map_err(|source| ExportError::Json {
        path: path.clone(),
        source,
    })?;

    let path = dir.join(VOLTAGES_FILE);
    let mut r = csv_reader(&path)?;
    let header = r
        .headers()
        .map_err(|source| ExportError::Csv {
            path: path.clone(),
            source,
        })?
        .clone();
    if header.get(0) != Some("time") {
        return Err(format_err(&path, "first column must be `time`"));
    }
    let node_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut time = Vec::new();
    let mut voltages = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|source| ExportError::Csv {
            path: path.clone(),
            source,
        })?;
        time.push(parse_f64(&path, &rec[0])?);
        voltages.push(
            rec.iter()
                .skip(1)
                .map(|s| parse_f64(&path, s))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let head_node = node_ids
        .iter()
        .position(|n| *n == meta.head_node)
        .ok_or_else(|| format_err(&path, format!("head node `{}` missing", meta.head_node)))?;
    let meter_node = meta
        .meter_node
        .as_ref()
        .and_then(|m| node_ids.iter().position(|n| n == m));

    let path = dir.join(DEVICES_FILE);
    let mut r = csv_reader(&path)?;
    let mut device_ids: Vec<String> = Vec::new();
    let mut devices: Vec<Vec<DeviceRecord>> = Vec::new();
    let mut row = 0usize;
    let mut last_time: Option<String> = None;
    for rec in r.records() {
        let rec = rec.map_err(|source| ExportError::Csv {
            path: path.clone(),
            source,
        })?;
        if rec.len() != 6 {
            return Err(format_err(&path, "expected 6 columns"));
        }
        if last_time.as_deref() != Some(&rec[0]) {
            if last_time.is_some() {
                row += 1;
            }
            last_time = Some(rec[0].to_string());
            devices.push(Vec::new());
        }
        if row == 0 {
            device_ids.push(rec[1].to_string());
        }
        devices[row].push(DeviceRecord {
            current: parse_f64(&path, &rec[2])?,
            connected: &rec[3] == "1",
            stalled: &rec[4] == "1",
            temperature: parse_f64(&path, &rec[5])?,
        });
    }
    if !device_ids.is_empty() && devices.len() != time.len() {
        return Err(format_err(
            &path,
            "device rows do not match the voltage time grid",
        ));
    }

    let path = dir.join(EVENTS_FILE);
    let mut r = csv_reader(&path)?;
    let mut events = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|source| ExportError::Csv {
            path: path.clone(),
            source,
        })?;
        if rec.len() != 4 {
            return Err(format_err(&path, "expected 4 columns"));
        }
        events.push(Event {
            time: parse_f64(&path, &rec[0])?,
            device: rec[1].to_string(),
            kind: rec[2].parse().map_err(|m: String| format_err(&path, m))?,
            cause: rec[3].parse().map_err(|m: String| format_err(&path, m))?,
        });
    }

    let trace = SimulationTrace {
        node_ids,
        device_ids,
        dt: meta.dt * meta.record_every as f64,
        head_node,
        meter_node,
        sag_start: meta.sag_start,
        sag_end: meta.sag_end,
        time,
        voltages,
        devices,
        events,
        power_mismatch: Vec::new(),
    };
    Ok((trace, meta))
}

/// `time,head_a,head_b,diff_<node>...`.
pub fn write_comparison_csv(path: &Path, report: &ComparisonReport) -> Result<(), ExportError> {
    let mut w = csv_writer(path)?;
    let err = |source| ExportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut header = vec![
        "time".to_string(),
        "head_a".to_string(),
        "head_b".to_string(),
    ];
    header.extend(report.node_ids.iter().map(|n| format!("diff_{n}")));
    w.write_record(&header).map_err(err)?;
    for k in 0..report.time.len() {
        let mut rec = vec![
            format!("{:.6}", report.time[k]),
            format!("{:.10}", report.head_a[k]),
            format!("{:.10}", report.head_b[k]),
        ];
        rec.extend(report.differences[k].iter().map(|d| format!("{d:.10}")));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}
