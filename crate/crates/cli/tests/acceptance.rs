//! Acceptance checks. One line per criterion; exits non-zero if any fail.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use motorprot::protection::{
    step_overload_protection, step_thermal_protection, step_voltage_protection, OverloadParams,
    ProtectionState, ThermalHeating, ThermalParams, ThermalState, VoltageProtectionParams,
};
use motorprot::scenario::{builtin_templates, template_summary};
use motorprot::{run, EventCause, EventKind, LoadClass, ProtectionKind, Scenario};
use motorprot_cli::{cmd_run, RunConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(fail.into())
    }
}

// ---------------------------------------------------------------------------
// Literal interpreter of the voltage protection pseudocode. Each instruction
// mirrors one line of the listing; `If` jumps to its target when false.

#[derive(Clone, Copy)]
enum Cond {
    Active,
    VBelowTrip,
    TripTimerOver,
    NotTripped,
    Tripped,
    VAboveRec,
    RecTimerOver,
    CounterAtMax,
}

#[derive(Clone, Copy)]
enum Act {
    AddTripTimer,
    IncCounter,
    SetTrip(bool),
    ZeroTripTimer,
    AddRecTimer,
    ZeroRecTimer,
}

#[derive(Clone, Copy)]
enum Op {
    If(Cond, usize),
    Do(Act),
    Goto(usize),
    End,
}

const PROGRAM: [Op; 22] = [
    Op::If(Cond::Active, 21),       // 12
    Op::If(Cond::VBelowTrip, 10),   // 13
    Op::Do(Act::AddTripTimer),      // 14
    Op::If(Cond::TripTimerOver, 8), // 15
    Op::If(Cond::NotTripped, 6),    // 16
    Op::Do(Act::IncCounter),        // 17
    Op::Do(Act::SetTrip(true)),     // 19
    Op::Goto(11),                   //
    Op::Do(Act::SetTrip(false)),    // 21
    Op::Goto(11),                   //
    Op::Do(Act::ZeroTripTimer),     // 24
    Op::If(Cond::Tripped, 19),      // 26
    Op::If(Cond::VAboveRec, 18),    // 27
    Op::Do(Act::AddRecTimer),       // 28
    Op::If(Cond::RecTimerOver, 17), // 29
    Op::Do(Act::SetTrip(false)),    // 30
    Op::Do(Act::ZeroTripTimer),     // 31
    Op::Goto(19),                   //
    Op::Do(Act::ZeroRecTimer),      // 34
    Op::If(Cond::CounterAtMax, 21), // 37
    Op::Do(Act::SetTrip(true)),     // 38
    Op::End,                        // 40
];

#[derive(Default, Clone, Copy)]
struct Interp {
    time: f64,
    trip_timer: f64,
    rec_timer: f64,
    trip_counter: u32,
    prot_trip: bool,
}

impl Interp {
    fn step(&mut self, p: &VoltageProtectionParams, v: f64, dt: f64) {
        let mut pc = 0;
        loop {
            match PROGRAM[pc] {
                Op::End => break,
                Op::Goto(t) => pc = t,
                Op::Do(a) => {
                    match a {
                        Act::AddTripTimer => self.trip_timer += dt,
                        Act::IncCounter => self.trip_counter += 1,
                        Act::SetTrip(b) => self.prot_trip = b,
                        Act::ZeroTripTimer => self.trip_timer = 0.0,
                        Act::AddRecTimer => self.rec_timer += dt,
                        Act::ZeroRecTimer => self.rec_timer = 0.0,
                    }
                    pc += 1;
                }
                Op::If(c, else_to) => {
                    let holds = match c {
                        Cond::Active => p.activated && self.time >= p.work_time,
                        Cond::VBelowTrip => v < p.v_trip,
                        Cond::TripTimerOver => self.trip_timer > p.t_trip,
                        Cond::NotTripped => !self.prot_trip,
                        Cond::Tripped => self.prot_trip,
                        Cond::VAboveRec => v > p.v_reconnect,
                        Cond::RecTimerOver => self.rec_timer > p.t_reconnect,
                        Cond::CounterAtMax => self.trip_counter >= p.max_trip_count,
                    };
                    pc = if holds { pc + 1 } else { else_to };
                }
            }
        }
        self.time += dt;
    }
}

fn random_params(rng: &mut StdRng) -> VoltageProtectionParams {
    let v_trip = rng.random_range(0.3..0.9);
    // exact multiples of dt put the timer comparisons on their boundary
    let delay = |rng: &mut StdRng| {
        if rng.random_bool(0.3) {
            rng.random_range(0..200) as f64 * 1e-3
        } else {
            rng.random_range(0.0..0.3)
        }
    };
    let t_trip = delay(rng);
    let t_reconnect = delay(rng);
    VoltageProtectionParams {
        activated: rng.random_bool(0.9),
        work_time: if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(0.0..0.5)
        },
        v_trip,
        t_trip,
        v_reconnect: rng.random_range(v_trip..1.0),
        t_reconnect,
        max_trip_count: rng.random_range(1..6),
    }
}

fn random_trace(rng: &mut StdRng, p: &VoltageProtectionParams, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let len = rng.random_range(1..400);
        let v = match rng.random_range(0..10) {
            0 => p.v_trip,
            1 => p.v_reconnect,
            _ => rng.random_range(0.0..1.2),
        };
        out.extend(std::iter::repeat_n(v, len));
    }
    out.truncate(steps);
    out
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let dt = 1e-3;
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut steps, mut trips, mut mismatches) = (0usize, 0usize, Vec::new());
    for n in 0..1000 {
        let p = random_params(&mut rng);
        let trace = random_trace(&mut rng, &p, 3000);
        let mut oracle = Interp::default();
        let mut s = ProtectionState::default();
        for (k, &v) in trace.iter().enumerate() {
            let t = oracle.time;
            s = step_voltage_protection(&p, &s, v, t, dt);
            oracle.step(&p, v, dt);
            steps += 1;
            let mut same = s.prot_trip == oracle.prot_trip
                && s.trip_counter == oracle.trip_counter
                && s.trip_timer == oracle.trip_timer;
            // the reconnection timer only matters while tripped and not latched
            if oracle.prot_trip && oracle.trip_counter < p.max_trip_count {
                same &= s.rec_timer == oracle.rec_timer;
            }
            if !same && mismatches.len() < 3 {
                mismatches.push(format!("trace {n} step {k}"));
            }
        }
        trips += oracle.trip_counter as usize;
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        mismatches.is_empty() && secs < 10.0,
        format!(
            "1000 traces, {steps} steps, {trips} trips, identical state every step ({secs:.2} s)"
        ),
        format!("mismatches at {mismatches:?}, runtime {secs:.2} s"),
    )
}

// ---------------------------------------------------------------------------

const P3: ThermalParams = ThermalParams {
    t_threshold: 0.15,
    t_therm: 10.0,
    r_stall: 0.054,
    heating: ThermalHeating::StallOnly,
};

/// Time at which the temperature first exceeds the threshold.
fn thermal_trip_time(dt: f64) -> Option<f64> {
    let mut s = ThermalState::default();
    for k in 0..(60.0 / dt) as usize {
        s = step_thermal_protection(&P3, &s, 2.0, true, dt);
        if s.tripped {
            return Some((k + 1) as f64 * dt);
        }
    }
    None
}

fn thermal_closed_form() -> f64 {
    -P3.t_therm * (1.0 - P3.t_threshold / (P3.r_stall * 2.0 * 2.0)).ln()
}

fn criterion_2() -> Outcome {
    let dt = 1e-3;
    let expected = thermal_closed_form();
    let got = thermal_trip_time(dt).ok_or("never tripped")?;
    check(
        (got - expected).abs() <= 2.0 * dt && (expected - 11.86).abs() < 5e-3,
        format!("trip at {got:.3} s, closed form {expected:.4} s"),
        format!("trip at {got:.4} s, closed form {expected:.4} s"),
    )
}

fn criterion_3() -> Outcome {
    let dt = 1e-3;
    let p = OverloadParams {
        i_trip: 3.0,
        t_trip: 0.04,
    };
    let mut s = ProtectionState::default();
    let mut trip = None;
    for k in 0..3000 {
        let t = k as f64 * dt;
        let i = if k >= 1222 { 3.4 } else { 1.0 };
        s = step_overload_protection(&p, &s, i, dt);
        if s.prot_trip && trip.is_none() {
            trip = Some(t);
        }
    }
    let t = trip.ok_or("never tripped")?;
    check(
        (t - 1.262).abs() <= dt + 1e-9 && s.prot_trip,
        format!("P2 trip at {t:.3} s and held"),
        format!("P2 trip at {t:.4} s"),
    )
}

fn criterion_4() -> Outcome {
    let sum = template_summary(&builtin_templates());
    let total = sum.total_kw();
    let expected = [
        (LoadClass::Static, 1471.45, 30.00),
        (LoadClass::MA, 1986.26, 40.50),
        (LoadClass::MB, 470.99, 9.60),
        (LoadClass::MC, 196.00, 4.00),
        (LoadClass::MD, 780.14, 15.91),
    ];
    let r2 = |x: f64| format!("{x:.2}");
    let mut bad = Vec::new();
    for (class, kw, pct) in expected {
        let got = sum.kw(class);
        if r2(got) != r2(kw) || r2(100.0 * got / total) != r2(pct) {
            bad.push(format!("{class:?} {got:.3} kW {:.3}%", 100.0 * got / total));
        }
    }
    if r2(total) != "4904.84" {
        bad.push(format!("total {total:.3} kW"));
    }
    check(
        bad.is_empty(),
        format!("all five classes and total {total:.2} kW match"),
        bad.join(", "),
    )
}

fn criterion_5() -> Outcome {
    let mut traces = Vec::new();
    let mut times = Vec::new();
    for s in [Scenario::shipped_a(), Scenario::shipped_b()] {
        let started = Instant::now();
        let trace = run(&s).map_err(|e| format!("{}: {}", s.name, e.error))?;
        times.push(started.elapsed().as_secs_f64());
        traces.push(trace);
    }
    let (a, b) = (&traces[0], &traces[1]);
    let sag_end = a.sag_end.ok_or("scenario has no sag")?;
    let (va, vb) = (a.head_voltage(), b.head_voltage());
    let (mut n, mut strict, mut violations) = (0usize, 0usize, 0usize);
    for k in 0..a.time.len() {
        let t = a.time[k];
        if t >= sag_end - 1e-9 && t < sag_end + 2.0 - 1e-9 {
            n += 1;
            if va[k] > vb[k] {
                strict += 1;
            } else if va[k] < vb[k] {
                violations += 1;
            }
        }
    }
    let frac = strict as f64 / n.max(1) as f64;
    check(
        n > 0 && violations == 0 && frac >= 0.5 && times.iter().all(|&s| s < 60.0),
        format!(
            "A >= B on all {n} steps, strictly on {:.1}%, runtimes {:.2} s / {:.2} s",
            100.0 * frac,
            times[0],
            times[1]
        ),
        format!(
            "{violations} steps with A < B, strict {:.1}%, runtimes {:?}",
            100.0 * frac,
            times
        ),
    )
}

fn single_motor(
    class: &str,
    protections: &[&str],
    sags: serde_json::Value,
    duration: f64,
) -> Scenario {
    let json = serde_json::json!({
        "feeder": {
            "base_mva": 10.0,
            "nodes": ["head", "bus"],
            "source_node": "head",
            "branches": [{"from": "head", "to": "bus", "r": 0.001, "x": 0.005}]
        },
        "source": {"mode": "stiff", "sags": sags},
        "buildings": {"sites": [{
            "name": "bench",
            "template": "single",
            "node": "bus",
            "devices": [{"appliance": "Unit", "equipment": "Motor", "class": class,
                         "protections": protections, "rating_kw": 50.0}]
        }]},
        "protections": {"ranges": {
            "P1": {"v_trip": 0.7, "t_trip": 0.05, "v_reconnect": 0.9, "t_reconnect": 0.1, "max_trip_count": 2},
            "P2": {"i_trip": 3.0, "t_trip": 0.04},
            "P4": {"v_trip": 0.5, "t_trip": 0.03, "v_reconnect": 0.7, "t_reconnect": 0.05, "max_trip_count": 10}
        }},
        "simulation": {"duration": duration, "rng_seed": 7, "settle": 0.1}
    });
    Scenario::from_json_str(&json.to_string()).expect("scenario builds")
}

fn switching(events: &[motorprot::Event]) -> Vec<(EventKind, EventCause)> {
    events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Trip | EventKind::Reconnect))
        .map(|e| (e.kind, e.cause))
        .collect()
}

fn criterion_6() -> Outcome {
    let s = single_motor(
        "MB",
        &["P2", "P4"],
        serde_json::json!([{"start": 0.2, "end": 0.5, "voltage": 0.2}]),
        3.0,
    );
    let trace = run(&s).map_err(|e| e.error.to_string())?;
    let seq = switching(&trace.events);
    let expected = vec![
        (EventKind::Trip, EventCause::Protection(ProtectionKind::P4)),
        (
            EventKind::Reconnect,
            EventCause::Protection(ProtectionKind::P4),
        ),
        (EventKind::Trip, EventCause::Protection(ProtectionKind::P2)),
    ];
    let last_trip = trace
        .events
        .iter()
        .rfind(|e| e.kind == EventKind::Trip)
        .map(|e| e.time);
    let permanent = match last_trip {
        Some(t) => trace
            .time
            .iter()
            .zip(&trace.devices)
            .filter(|(&tk, _)| tk > t + 1e-9)
            .all(|(_, d)| !d[0].connected),
        None => false,
    };
    let times: Vec<String> = trace
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Trip | EventKind::Reconnect))
        .map(|e| format!("{}@{:.3}", e.kind, e.time))
        .collect();
    check(
        seq == expected && permanent,
        format!(
            "[trip:P4, reconnect:P4, trip:P2], final trip held to end ({})",
            times.join(" ")
        ),
        format!("got {seq:?}, permanent {permanent}"),
    )
}

fn criterion_7() -> Outcome {
    let p1 = VoltageProtectionParams {
        activated: true,
        work_time: 0.1,
        v_trip: 0.7,
        t_trip: 0.05,
        v_reconnect: 0.9,
        t_reconnect: 0.1,
        max_trip_count: 2,
    };
    let dt = 1e-3;
    let base = |t: f64| {
        if (0.3..0.5).contains(&t) || (1.5..1.7).contains(&t) {
            0.5
        } else {
            1.0
        }
    };

    // protection level: latch reached, then random traces must never release it
    let mut rng = StdRng::seed_from_u64(99);
    let mut s = ProtectionState::default();
    let mut releases = 0;
    for k in 0..2500 {
        let t = k as f64 * dt;
        let next = step_voltage_protection(&p1, &s, base(t), t, dt);
        if s.prot_trip && !next.prot_trip {
            releases += 1;
        }
        s = next;
    }
    if releases != 1 || !s.prot_trip || s.trip_counter != 2 {
        return Err(format!(
            "relay: {releases} releases, counter {}",
            s.trip_counter
        ));
    }
    let latched = s;
    for _ in 0..200 {
        let mut s = latched;
        let trace = random_trace(&mut rng, &p1, 3000);
        for (k, v) in trace.into_iter().enumerate() {
            s = step_voltage_protection(&p1, &s, v, 2.5 + k as f64 * dt, dt);
            if !s.prot_trip {
                return Err("latched relay released under a random trace".into());
            }
        }
    }

    // engine level: the same two sags followed by random extra sags
    let trip = (EventKind::Trip, EventCause::Protection(ProtectionKind::P1));
    let rec = (
        EventKind::Reconnect,
        EventCause::Protection(ProtectionKind::P1),
    );
    for n in 0..20 {
        let mut sags = vec![
            serde_json::json!({"start": 0.3, "end": 0.5, "voltage": 0.5}),
            serde_json::json!({"start": 1.5, "end": 1.7, "voltage": 0.5}),
        ];
        let mut t = 2.2;
        while n > 0 && t < 5.0 {
            let len = rng.random_range(0.05..0.5);
            sags.push(serde_json::json!({"start": t, "end": t + len, "voltage": rng.random_range(0.0..1.0)}));
            t += len + rng.random_range(0.1..0.8);
        }
        let s = single_motor("MA", &["P1"], serde_json::Value::Array(sags), 6.0);
        let trace = run(&s).map_err(|e| e.error.to_string())?;
        let seq = switching(&trace.events);
        if seq != vec![trip, rec, trip] {
            return Err(format!("run {n}: sequence {seq:?}"));
        }
        if trace.devices.last().is_some_and(|d| d[0].connected) {
            return Err(format!("run {n}: device connected at end"));
        }
    }
    Ok(
        "one reconnect then latched; 200 relay traces and 20 engine runs never reconnect again"
            .into(),
    )
}

fn criterion_8() -> Outcome {
    let s = Scenario::shipped_a();
    let trace = run(&s).map_err(|e| e.error.to_string())?;
    let worst = trace.max_power_mismatch();
    check(
        trace.power_mismatch.len() == s.step_count() && worst < 1e-5,
        format!(
            "{} steps, worst mismatch {worst:.2e} pu",
            trace.power_mismatch.len()
        ),
        format!(
            "worst mismatch {worst:.2e} pu over {} steps",
            trace.power_mismatch.len()
        ),
    )
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let cfg = RunConfig {
            scenario: scenario_path("scenario_A.json"),
            out: dir.path().join(format!("run{k}")),
            seed: Some(42),
            duration: None,
            dt: None,
            plot: false,
            deterministic: false,
        };
        let summary = cmd_run(&cfg, &mut std::io::sink()).map_err(|e| e.message)?;
        let mut files = Vec::new();
        for f in summary
            .files
            .iter()
            .filter(|f| f.extension().is_some_and(|x| x == "csv"))
        {
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            files.push((name, std::fs::read(f).map_err(|e| e.to_string())?));
        }
        files.sort();
        outputs.push(files);
    }
    let bytes: usize = outputs[0].iter().map(|f| f.1.len()).sum();
    check(
        !outputs[0].is_empty() && outputs[0] == outputs[1],
        format!(
            "{} CSV files, {bytes} bytes, byte-identical",
            outputs[0].len()
        ),
        "CSV outputs differ between runs",
    )
}

fn criterion_10() -> Outcome {
    let a = thermal_trip_time(1e-3).ok_or("never tripped at 1 ms")?;
    let b = thermal_trip_time(5e-4).ok_or("never tripped at 0.5 ms")?;
    check(
        (a - b).abs() <= 1e-3 + 1e-9,
        format!("{a:.4} s at 1 ms, {b:.4} s at 0.5 ms"),
        format!("{a:.4} s vs {b:.4} s"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "voltage protection matches pseudocode interpreter",
            criterion_1,
        ),
        ("thermal trip time closed form", criterion_2),
        ("overload trip timing", criterion_3),
        ("load composition table", criterion_4),
        ("scenario A vs B head voltage ordering", criterion_5),
        ("contactor then overload sequence", criterion_6),
        ("max trip count latch", criterion_7),
        ("power balance every step", criterion_8),
        ("deterministic run output", criterion_9),
        ("thermal trip step-size robustness", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
