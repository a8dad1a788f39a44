use super::*;
use crate::protection::ProtectionKind;

fn single_device(
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
            "name": "test",
            "template": "single",
            "node": "bus",
            "devices": [{"appliance": "Unit", "equipment": "Motor", "class": class,
                         "protections": protections, "rating_kw": 50.0}]
        }]},
        "protections": {"ranges": {
            "P2": {"i_trip": 3.0, "t_trip": 0.04},
            "P4": {"v_trip": 0.5, "t_trip": 0.03, "v_reconnect": 0.7, "t_reconnect": 0.05, "max_trip_count": 10}
        }},
        "simulation": {"duration": duration, "rng_seed": 1, "settle": 0.1}
    });
    Scenario::from_json_str(&json.to_string()).unwrap()
}

#[test]
fn equilibrium_run_is_quiet() {
    let s = single_device("MA", &["P2", "P4"], serde_json::json!([]), 0.5);
    let trace = run(&s).unwrap();
    assert!(trace.events.is_empty());
    let v0 = trace.voltages[0].clone();
    for row in &trace.voltages {
        for (a, b) in row.iter().zip(&v0) {
            assert!((a - b).abs() < 1e-9);
        }
    }
    assert!(trace.max_power_mismatch() < 1e-9);
}

#[test]
fn steps_compose_into_run() {
    let s = single_device(
        "MB",
        &["P2", "P4"],
        serde_json::json!([{"start": 0.2, "end": 0.3, "voltage": 0.3}]),
        0.6,
    );
    let engine = Engine::new(&s).unwrap();
    let init = engine.initial_state().unwrap();
    let (trace, fin) = engine.run_from(init.clone(), engine.step_count()).unwrap();
    let mut st = init;
    for _ in 0..engine.step_count() {
        st = engine.step(&st, s.dt).unwrap().0;
    }
    assert_eq!(st, fin);
    assert_eq!(trace.len(), engine.step_count());
}

#[test]
fn wrong_step_size_is_rejected() {
    let s = single_device("MA", &[], serde_json::json!([]), 0.1);
    let engine = Engine::new(&s).unwrap();
    let init = engine.initial_state().unwrap();
    assert!(matches!(
        engine.step(&init, 2e-3),
        Err(EngineError::StepSize { .. })
    ));
}

#[test]
fn contactor_sequence_with_reacceleration_trip() {
    let s = single_device(
        "MB",
        &["P2", "P4"],
        serde_json::json!([{"start": 0.2, "end": 0.5, "voltage": 0.2}]),
        2.0,
    );
    let trace = run(&s).unwrap();
    let seq: Vec<(EventKind, EventCause)> =
        trace.events.iter().map(|e| (e.kind, e.cause)).collect();
    use EventCause::Protection as P;
    assert_eq!(
        seq,
        vec![
            (EventKind::Trip, P(ProtectionKind::P4)),
            (EventKind::Reconnect, P(ProtectionKind::P4)),
            (EventKind::Trip, P(ProtectionKind::P2)),
        ]
    );
    let last = trace.devices.last().unwrap()[0];
    assert!(!last.connected);
}

#[test]
fn reconnect_draws_inrush() {
    let s = single_device(
        "MB",
        &["P4"],
        serde_json::json!([{"start": 0.2, "end": 0.5, "voltage": 0.2}]),
        1.5,
    );
    let trace = run(&s).unwrap();
    let rec = trace
        .events
        .iter()
        .find(|e| e.kind == EventKind::Reconnect)
        .unwrap();
    let k = trace
        .time
        .iter()
        .position(|&t| t > rec.time + 1e-9)
        .unwrap();
    let running = trace.devices[0][0].current;
    assert!(trace.devices[k][0].current > 1.5 * running);
    let end = trace.devices.last().unwrap()[0].current;
    assert!((end - running).abs() < 0.05 * running);
}

#[test]
fn connected_transitions_have_events() {
    let s = single_device(
        "MB",
        &["P2", "P4"],
        serde_json::json!([{"start": 0.2, "end": 0.5, "voltage": 0.2}]),
        2.0,
    );
    let trace = run(&s).unwrap();
    let series = trace.device_series(0);
    for k in 1..series.len() {
        if series[k].connected != series[k - 1].connected {
            let kind = if series[k].connected {
                EventKind::Reconnect
            } else {
                EventKind::Trip
            };
            assert!(trace
                .events
                .iter()
                .any(|e| e.kind == kind && (e.time - trace.time[k - 1]).abs() < 1e-9));
        }
    }
}

#[test]
fn single_phase_motor_stalls_under_sag() {
    let s = single_device(
        "MD",
        &["P3"],
        serde_json::json!([{"start": 0.2, "end": 0.3, "voltage": 0.35}]),
        2.0,
    );
    let trace = run(&s).unwrap();
    let stall = trace
        .events
        .iter()
        .find(|e| e.kind == EventKind::Stall)
        .unwrap();
    assert!((stall.time - 0.232).abs() < 2e-3, "{}", stall.time);
    assert_eq!(stall.cause, EventCause::ContactorEquivalent);
    let trip = trace
        .events
        .iter()
        .find(|e| e.kind == EventKind::Trip)
        .unwrap();
    assert_eq!(trip.cause, EventCause::Protection(ProtectionKind::P3));
    assert!(trip.time > stall.time);
}

#[test]
fn disabled_protections_never_act() {
    let mut s = single_device(
        "MB",
        &["P2", "P4"],
        serde_json::json!([{"start": 0.2, "end": 0.5, "voltage": 0.2}]),
        1.5,
    );
    s.protections.enabled = [false; 5];
    let trace = run(&s).unwrap();
    assert!(trace.events.is_empty());
}
