//! Batch front end: run scenarios, compare two runs, validate files.
//!
//! Exit codes: 0 on success, 1 for usage, I/O and validation errors, 2 when
//! the simulation aborts.

pub mod svg;

use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use motorprot::engine::{
    compare_runs, read_trace, recovery_time, write_comparison_csv, write_trace, ComparisonReport,
    EventKind, RunMetadata,
};
use motorprot::scenario::DevicePlan;
use motorprot::{load_scenario, run, ProtectionKind, Scenario, SimulationTrace, VERSION};

use svg::{Chart, Series, PALETTE};

#[derive(Debug, Parser)]
#[command(
    name = "motorprot",
    version,
    about = "Feeder simulation with protected motor loads"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write CSV traces.
    Run(RunArgs),
    /// Compare two scenarios or trace directories.
    Compare(CompareArgs),
    /// Parse and validate a scenario file.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Scenario file or trace directory for run A.
    pub a: PathBuf,
    /// Scenario file or trace directory for run B.
    pub b: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
}

/// Settings of one `run` invocation.
pub type RunConfig = RunArgs;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Files produced by a successful run.
#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub events: usize,
    pub steps: usize,
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// Loads a scenario and applies CLI overrides, re-checking the invariants.
pub fn prepare_scenario(
    path: &Path,
    seed: Option<u64>,
    duration: Option<f64>,
    dt: Option<f64>,
) -> Result<Scenario, CliError> {
    let mut s =
        load_scenario(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        s.rng_seed = seed;
        s.warnings.retain(|w| !w.contains("rng_seed"));
    }
    if let Some(d) = duration {
        s.duration = d;
    }
    if let Some(dt) = dt {
        s.dt = dt;
    }
    let errs = s.violations();
    if !errs.is_empty() {
        return Err(CliError::usage(format!(
            "{}: invalid overrides:\n  - {}",
            path.display(),
            errs.join("\n  - ")
        )));
    }
    Ok(s)
}

fn metadata(
    s: &Scenario,
    trace: &SimulationTrace,
    deterministic: bool,
    error: Option<String>,
) -> RunMetadata {
    RunMetadata {
        scenario: s.name.clone(),
        seed: s.rng_seed,
        scenario_hash: s.source_hash.clone(),
        dt: s.dt,
        duration: s.duration,
        record_every: s.record_every,
        version: VERSION.to_string(),
        head_node: s.feeder.nodes[s.head_node()].clone(),
        meter_node: s.meter_node.map(|m| s.feeder.nodes[m].clone()),
        sag_start: trace.sag_start,
        sag_end: trace.sag_end,
        warnings: s.warnings.clone(),
        completed: error.is_none(),
        error,
        timestamp: if deterministic {
            None
        } else {
            Some(timestamp())
        },
    }
}

pub fn cmd_run(cfg: &RunConfig, log: &mut dyn Write) -> Result<RunSummary, CliError> {
    let s = prepare_scenario(&cfg.scenario, cfg.seed, cfg.duration, cfg.dt)?;
    for w in &s.warnings {
        let _ = writeln!(log, "warning: {w}");
    }
    let trace = match run(&s) {
        Ok(t) => t,
        Err(e) => {
            let mut msg = format!("simulation aborted: {}", e.error);
            if let Some(partial) = e.partial {
                let meta = metadata(&s, &partial, cfg.deterministic, Some(e.error.to_string()));
                match write_trace(&cfg.out, &partial, &meta, true) {
                    Ok(_) => msg.push_str(&format!(
                        "\npartial trace written to {} (*.partial)",
                        cfg.out.display()
                    )),
                    Err(w) => msg.push_str(&format!("\ncould not write partial trace: {w}")),
                }
            }
            return Err(CliError::solver(msg));
        }
    };
    let meta = metadata(&s, &trace, cfg.deterministic, None);
    let mut files =
        write_trace(&cfg.out, &trace, &meta, false).map_err(|e| CliError::usage(e.to_string()))?;
    if cfg.plot {
        let stamp = (!cfg.deterministic).then(timestamp);
        let plans = s.devices();
        for (name, text) in run_plots(&s, &plans, &trace, stamp.as_deref()) {
            let path = cfg.out.join(name);
            std::fs::write(&path, text)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            files.push(path);
        }
    }
    let _ = writeln!(
        log,
        "{}: {} steps, {} events, max power mismatch {:.2e} pu -> {}",
        s.name,
        trace.len(),
        trace.events.len(),
        trace.max_power_mismatch(),
        cfg.out.display()
    );
    Ok(RunSummary {
        files,
        events: trace.events.len(),
        steps: trace.len(),
    })
}

fn series(
    name: &str,
    color: &'static str,
    t: &[f64],
    y: impl Iterator<Item = f64>,
    step: bool,
) -> Series {
    Series {
        name: name.to_string(),
        color,
        points: t.iter().copied().zip(y).collect(),
        step,
    }
}

/// Head/meter voltage chart plus panels for the most active devices.
pub fn run_plots(
    s: &Scenario,
    plans: &[DevicePlan],
    trace: &SimulationTrace,
    stamp: Option<&str>,
) -> Vec<(String, String)> {
    let t = &trace.time;
    let mut v = vec![series(
        "head",
        PALETTE[0],
        t,
        trace.head_voltage().into_iter(),
        false,
    )];
    if let Some(m) = trace.meter_node {
        v.push(series(
            &trace.node_ids[m],
            PALETTE[1],
            t,
            trace.node_series(m).into_iter(),
            false,
        ));
    }
    let head = Chart {
        title: format!("{}: feeder voltage", s.name),
        y_label: "|V| (pu)".into(),
        series: v,
        y_range: None,
    };
    let mut out = vec![("head_voltage.svg".to_string(), svg::render(&[head], stamp))];

    let mut ranked: Vec<(usize, usize)> = (0..trace.device_ids.len())
        .map(|d| (trace.events_for(&trace.device_ids[d]).count(), d))
        .filter(|(n, _)| *n > 0)
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut panels = Vec::new();
    for &(_, d) in ranked.iter().take(4) {
        let id = &trace.device_ids[d];
        let recs = trace.device_series(d);
        let node = plans.iter().find(|p| &p.id == id).map(|p| p.node);
        let mut ser = Vec::new();
        if let Some(n) = node {
            ser.push(series(
                "voltage (pu)",
                PALETTE[0],
                t,
                trace.node_series(n).into_iter(),
                false,
            ));
        }
        ser.push(series(
            "current (pu)",
            PALETTE[1],
            t,
            recs.iter().map(|r| r.current),
            false,
        ));
        ser.push(series(
            "connected",
            PALETTE[2],
            t,
            recs.iter().map(|r| r.connected as u8 as f64),
            true,
        ));
        ser.push(series(
            "stalled",
            PALETTE[3],
            t,
            recs.iter().map(|r| r.stalled as u8 as f64),
            true,
        ));
        panels.push(Chart {
            title: id.clone(),
            y_label: "pu / status".into(),
            series: ser,
            y_range: None,
        });
    }
    if !panels.is_empty() {
        out.push(("devices.svg".to_string(), svg::render(&panels, stamp)));
    }
    out
}

fn load_or_run(
    path: &Path,
    duration: Option<f64>,
    dt: Option<f64>,
) -> Result<SimulationTrace, CliError> {
    if path.is_dir() {
        return read_trace(path)
            .map(|(t, _)| t)
            .map_err(|e| CliError::usage(e.to_string()));
    }
    let s = prepare_scenario(path, None, duration, dt)?;
    run(&s).map_err(|e| {
        CliError::solver(format!(
            "{}: simulation aborted: {}",
            path.display(),
            e.error
        ))
    })
}

/// Trip-count table by protection type.
pub fn trip_table(report: &ComparisonReport) -> String {
    let mut out = String::from("protection      A      B\n");
    for k in ProtectionKind::ALL {
        out.push_str(&format!(
            "{:<10} {:>6} {:>6}\n",
            k.as_str(),
            report.trip_counts[0][k.index()],
            report.trip_counts[1][k.index()]
        ));
    }
    out
}

pub fn cmd_compare(args: &CompareArgs, log: &mut dyn Write) -> Result<ComparisonReport, CliError> {
    let (a, b) = std::thread::scope(|scope| {
        let ha = scope.spawn(|| load_or_run(&args.a, args.duration, args.dt));
        let hb = scope.spawn(|| load_or_run(&args.b, args.duration, args.dt));
        (
            ha.join().expect("run A panicked"),
            hb.join().expect("run B panicked"),
        )
    });
    let (a, b) = (a?, b?);
    let report =
        compare_runs(&a, &b).map_err(|e| CliError::usage(format!("cannot compare: {e}")))?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.out.display())))?;
    write_comparison_csv(&args.out.join("comparison.csv"), &report)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let stamp = (!args.deterministic).then(timestamp);
    let t = &report.time;
    let chart = Chart {
        title: "Head-node voltage".into(),
        y_label: "|V| (pu)".into(),
        series: vec![
            series("A", PALETTE[0], t, report.head_a.iter().copied(), false),
            series("B", PALETTE[1], t, report.head_b.iter().copied(), false),
        ],
        y_range: None,
    };
    let path = args.out.join("head_overlay.svg");
    std::fs::write(&path, svg::render(&[chart], stamp.as_deref()))
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;

    let _ = write!(log, "{}", trip_table(&report));
    let fmt_rec = |r: Option<f64>| r.map_or("not recovered".to_string(), |x| format!("{x:.3} s"));
    let _ = writeln!(
        log,
        "recovery to 0.95 pu: A {}, B {}",
        fmt_rec(report.recovery_time[0]),
        fmt_rec(report.recovery_time[1])
    );
    if let (Some(m), Some(end)) = (a.meter_node, report.sag_end) {
        let rec = |t: &SimulationTrace| recovery_time(&t.time, &t.node_series(m), end);
        let _ = writeln!(
            log,
            "recovery at {}: A {}, B {}",
            a.node_ids[m],
            fmt_rec(rec(&a)),
            fmt_rec(rec(&b))
        );
    }
    if let Some(end) = report.sag_end {
        if let Some((min, strict)) = report.head_ordering(end, 2.0) {
            let _ = writeln!(
                log,
                "2 s after the sag: min(A - B) = {min:.5} pu, A > B on {:.1}% of steps, A >= B: {}",
                100.0 * strict,
                if min >= 0.0 { "yes" } else { "no" }
            );
        }
    }
    let _ = writeln!(
        log,
        "max |A - B| over all nodes: {:.6} pu",
        report.max_abs_difference()
    );
    let stalls = [&a, &b].map(|t| {
        t.events
            .iter()
            .filter(|e| e.kind == EventKind::Stall)
            .count()
    });
    let _ = writeln!(log, "stall events: A {}, B {}", stalls[0], stalls[1]);
    Ok(report)
}

/// Returns whether the file is valid; every violation goes to `log`.
pub fn cmd_validate(args: &ValidateArgs, log: &mut dyn Write) -> bool {
    match load_scenario(&args.scenario) {
        Ok(s) => {
            for w in &s.warnings {
                let _ = writeln!(log, "warning: {w}");
            }
            let _ = writeln!(
                log,
                "{}: valid ({} nodes, {} buildings, {} devices, {:.2} kW installed)",
                args.scenario.display(),
                s.feeder.node_count(),
                s.buildings.len(),
                s.devices().len(),
                s.composition().total_kw()
            );
            true
        }
        Err(e) => {
            let _ = writeln!(log, "{}: {e}", args.scenario.display());
            false
        }
    }
}

/// Parses `args` and dispatches; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(cfg) => cmd_run(cfg, stdout).map(|_| ()),
        Command::Compare(args) => cmd_compare(args, stdout).map(|_| ()),
        Command::Validate(args) => {
            if cmd_validate(args, stdout) {
                Ok(())
            } else {
                Err(CliError::usage("validation failed"))
            }
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
