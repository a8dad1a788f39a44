//! Shared fixtures for the benchmarks.

use motorprot::network::{NodeLoads, VoltageDependentLoad};
use motorprot::{Complex64, Scenario};

/// Shipped scenario A cut to `duration` seconds.
pub fn scenario_a(duration: f64) -> Scenario {
    let mut s = Scenario::shipped_a();
    s.duration = duration;
    s
}

/// A voltage trace with a few sags, one sample per millisecond.
pub fn sag_trace(steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| match k % 2000 {
            500..700 => 0.35,
            700..900 => 0.8,
            _ => 1.0,
        })
        .collect()
}

/// ZIP-style loads on every non-head node of the shipped feeder.
pub fn feeder_loads(s: &Scenario) -> NodeLoads {
    let n = s.feeder.nodes.len();
    let head = s.head_node();
    let mut loads = NodeLoads::empty(n);
    loads.v_break = s.solver.low_voltage_break;
    let share = 0.5 / (n - 1) as f64;
    for node in (0..n).filter(|&k| k != head) {
        let sn = Complex64::new(share, 0.3 * share);
        loads.add_shunt(node, (sn * 0.4).conj());
        loads.add_term(node, VoltageDependentLoad::ConstantCurrent { s: sn * 0.3 });
        loads.add_term(node, VoltageDependentLoad::ConstantPower { s: sn * 0.3 });
    }
    loads
}
