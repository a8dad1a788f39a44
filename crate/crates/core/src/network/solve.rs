use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{apply_sag, Admittance, FeederModel, NetworkError, SourceMode, SourceModel};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Convergence threshold on the largest nodal voltage change, pu.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Below this magnitude constant-current and constant-power loads turn
    /// into the constant admittance they present at the break voltage.
    pub low_voltage_break: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 50,
            low_voltage_break: 0.7,
        }
    }
}

/// Voltage-dependent current drawn at a node. Powers are on the system base
/// and refer to 1 pu voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoltageDependentLoad {
    /// `|I|` fixed at its nominal value, in phase with the power factor.
    ConstantCurrent {
        s: Complex64,
    },
    ConstantPower {
        s: Complex64,
    },
    /// `S = p v^kp + j q v^kq`.
    Exponential {
        p: f64,
        q: f64,
        kp: f64,
        kq: f64,
    },
}

impl VoltageDependentLoad {
    /// Current drawn at voltage `v` (load convention).
    pub fn current(&self, v: Complex64) -> Complex64 {
        let vm = v.norm();
        if vm == 0.0 {
            return ZERO;
        }
        match *self {
            VoltageDependentLoad::ConstantCurrent { s } => s.conj() * v / vm,
            VoltageDependentLoad::ConstantPower { s } => (s / v).conj(),
            VoltageDependentLoad::Exponential { p, q, kp, kq } => {
                (Complex64::new(p * vm.powf(kp), q * vm.powf(kq)) / v).conj()
            }
        }
    }

    /// Like [`current`](Self::current), with constant-current and
    /// constant-power terms held at constant admittance below `v_break`.
    pub fn current_with_break(&self, v: Complex64, v_break: f64) -> Complex64 {
        let vm = v.norm();
        match self {
            VoltageDependentLoad::Exponential { .. } => self.current(v),
            _ if vm < v_break => self.current(v * (v_break / vm)) * (vm / v_break),
            _ => self.current(v),
        }
    }
}

/// Loads seen by the network in one solve: a constant shunt admittance per
/// node plus voltage-dependent current terms.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLoads {
    pub shunt: Vec<Complex64>,
    pub terms: Vec<(usize, VoltageDependentLoad)>,
    /// Low-voltage break applied to every term; 0 disables it.
    pub v_break: f64,
}

impl NodeLoads {
    pub fn empty(n: usize) -> Self {
        NodeLoads {
            shunt: vec![ZERO; n],
            terms: Vec::new(),
            v_break: 0.0,
        }
    }

    pub fn add_shunt(&mut self, node: usize, y: Complex64) {
        self.shunt[node] += y;
    }

    pub fn add_term(&mut self, node: usize, load: VoltageDependentLoad) {
        self.terms.push((node, load));
    }

    fn nonlinear_injections(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = ZERO);
        for (node, load) in &self.terms {
            out[*node] += load.current_with_break(v[*node], self.v_break);
        }
    }

    /// Total current drawn at every node for the given voltages.
    pub fn node_currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        self.nonlinear_injections(v, &mut out);
        for (i, y) in self.shunt.iter().enumerate() {
            out[i] += y * v[i];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub voltages: Vec<Complex64>,
    /// Effective source voltage used for this solve.
    pub source_voltage: Complex64,
    /// Current delivered into the feeder at the head node.
    pub source_current: Complex64,
    pub iterations: usize,
    /// Largest voltage change in the final iteration.
    pub mismatch: f64,
}

impl NetworkSolution {
    /// Complex power delivered into the feeder at the head node.
    pub fn source_power(&self, head: usize) -> Complex64 {
        self.voltages[head] * self.source_current.conj()
    }
}

/// Fixed-point nodal solve.
///
/// Constant admittances (network, capacitor banks, load shunts and, for a
/// Thevenin source, the Norton admittance of the source) are factorised once;
/// the voltage-dependent injections are re-evaluated every iteration until
/// the largest voltage change drops below the tolerance.
pub fn solve_network(
    y: &Admittance,
    source: &SourceModel,
    loads: &NodeLoads,
    feeder_head: usize,
    t_now: f64,
    opts: &SolverOptions,
    initial: Option<&[Complex64]>,
) -> Result<NetworkSolution, NetworkError> {
    let n = y.dim();
    let h = feeder_head;
    let v_src = apply_sag(source, t_now);
    let mut a = y.0.clone();
    for (i, s) in loads.shunt.iter().enumerate() {
        a[(i, i)] += s;
    }

    let mut v: Vec<Complex64> = match initial {
        Some(init) if init.len() == n => init.to_vec(),
        _ => vec![v_src; n],
    };
    let mut inj = vec![ZERO; n];

    // Unknowns: all nodes (Thevenin) or every node but the head (stiff).
    let unknowns: Vec<usize> = match source.mode {
        SourceMode::Thevenin => (0..n).collect(),
        SourceMode::Stiff => (0..n).filter(|&i| i != h).collect(),
    };
    let m = unknowns.len();
    let mut reduced = DMatrix::from_fn(m, m, |r, c| a[(unknowns[r], unknowns[c])]);
    let y_th = match source.mode {
        SourceMode::Thevenin => {
            let y_th = source.z_th.inv();
            reduced[(h, h)] += y_th;
            y_th
        }
        SourceMode::Stiff => {
            v[h] = v_src;
            ZERO
        }
    };
    let lu = reduced.lu();

    let mut delta = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        loads.nonlinear_injections(&v, &mut inj);
        let rhs = DVector::from_fn(m, |r, _| {
            let k = unknowns[r];
            let mut b = -inj[k];
            match source.mode {
                SourceMode::Thevenin if k == h => b += v_src * y_th,
                SourceMode::Stiff => b -= a[(k, h)] * v_src,
                _ => {}
            }
            b
        });
        let sol = lu.solve(&rhs).ok_or(NetworkError::Singular)?;
        delta = 0.0;
        for (r, &k) in unknowns.iter().enumerate() {
            let next = sol[r];
            if !(next.re.is_finite() && next.im.is_finite()) {
                return Err(NetworkError::Singular);
            }
            delta = delta.max((next - v[k]).norm());
            v[k] = next;
        }
        if delta < opts.tolerance {
            let source_current = match source.mode {
                SourceMode::Thevenin => (v_src - v[h]) * y_th,
                SourceMode::Stiff => {
                    loads.nonlinear_injections(&v, &mut inj);
                    (0..n).map(|j| a[(h, j)] * v[j]).sum::<Complex64>() + inj[h]
                }
            };
            return Ok(NetworkSolution {
                voltages: v,
                source_voltage: v_src,
                source_current,
                iterations: it,
                mismatch: delta,
            });
        }
    }
    Err(NetworkError::NonConvergence {
        iterations: opts.max_iterations,
        mismatch: delta,
        last: v,
    })
}

/// Complex power accounting of a solved step, system base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBalance {
    pub source: Complex64,
    /// Device consumption plus capacitor bank injections (negative Q).
    pub loads: Complex64,
    pub losses: Complex64,
}

impl PowerBalance {
    pub fn mismatch(&self) -> f64 {
        (self.source - self.loads - self.losses).norm()
    }
}

pub fn power_balance(
    feeder: &FeederModel,
    capbank_on: &[bool],
    loads: &NodeLoads,
    solution: &NetworkSolution,
) -> PowerBalance {
    let v = &solution.voltages;
    let drawn = loads.node_currents(v);
    let mut consumed: Complex64 = v.iter().zip(&drawn).map(|(vk, ik)| vk * ik.conj()).sum();
    for (k, cap) in feeder.cap_banks.iter().enumerate() {
        if capbank_on[k] {
            let vk = v[cap.node];
            consumed += vk * (feeder.capbank_admittance(k) * vk).conj();
        }
    }
    let mut losses = ZERO;
    for b in &feeder.branches {
        let i = (v[b.from] - v[b.to]) / b.impedance;
        losses += b.impedance * i.norm_sqr();
    }
    for t in &feeder.transformers {
        let i = (v[t.from] / t.tap - v[t.to]) / t.impedance;
        losses += t.impedance * i.norm_sqr();
    }
    PowerBalance {
        source: solution.source_power(feeder.source_node),
        loads: consumed,
        losses,
    }
}
