use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use motorprot::network::{build_admittance, solve_network};
use motorprot::protection::{step_voltage_protection, ProtectionState, VoltageProtectionParams};
use motorprot::run;
use motorprot_bench::{feeder_loads, sag_trace, scenario_a};

fn protection(c: &mut Criterion) {
    let p = VoltageProtectionParams {
        activated: true,
        work_time: 0.0,
        v_trip: 0.6,
        t_trip: 0.05,
        v_reconnect: 0.9,
        t_reconnect: 0.1,
        max_trip_count: 3,
    };
    let trace = sag_trace(10_000);
    c.bench_function("voltage_protection_10k_steps", |b| {
        b.iter(|| {
            let mut s = ProtectionState::default();
            for (k, &v) in trace.iter().enumerate() {
                s = step_voltage_protection(&p, &s, black_box(v), k as f64 * 1e-3, 1e-3);
            }
            s
        })
    });
}

fn network(c: &mut Criterion) {
    let s = scenario_a(1.0);
    let y = build_admittance(&s.feeder, &vec![true; s.feeder.cap_banks.len()]).unwrap();
    let loads = feeder_loads(&s);
    let head = s.head_node();
    c.bench_function("network_solve_cold", |b| {
        b.iter(|| {
            solve_network(&y, &s.source, black_box(&loads), head, 0.0, &s.solver, None).unwrap()
        })
    });
    let warm = solve_network(&y, &s.source, &loads, head, 0.0, &s.solver, None)
        .unwrap()
        .voltages;
    c.bench_function("network_solve_warm", |b| {
        b.iter(|| {
            solve_network(
                &y,
                &s.source,
                black_box(&loads),
                head,
                0.0,
                &s.solver,
                Some(&warm),
            )
            .unwrap()
        })
    });
}

fn engine(c: &mut Criterion) {
    let s = scenario_a(1.5);
    let mut g = c.benchmark_group("engine");
    g.sample_size(10);
    g.bench_function("scenario_a_1.5s", |b| {
        b.iter(|| run(black_box(&s)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, protection, network, engine);
criterion_main!(benches);
