//! Fixed-step simulation loop.
//!
//! Each step runs in a fixed order:
//!
//! 1. effective source voltage from the sag schedule,
//! 2. network solve with device loads frozen at the prior device states,
//! 3. protection stepping on the fresh voltages and currents,
//! 4. connection updates through the OR gate and capacitor bank switching,
//! 5. motor integration over `dt` with the terminal voltage held,
//! 6. recording.
//!
//! A recorded row holds the quantities measured at its time stamp together
//! with the connection, stall and thermal state the step started from.
//! Events logged at `t` therefore show up in the row at `t + dt`.

mod compare;
mod export;
mod trace;

pub use compare::{compare_runs, recovery_time, CompareError, ComparisonReport};
pub use export::{read_trace, write_comparison_csv, write_trace, ExportError, RunMetadata};
pub use trace::{DeviceRecord, Event, EventCause, EventKind, SimulationTrace};

use num_complex::Complex64;
use thiserror::Error;

use crate::motor::{
    equivalent_impedance, nominal_input_power, single_phase_current, single_phase_running_power,
    steady_state_slip, step_motor, three_phase_current, MotorParams, MotorState,
};
use crate::network::{
    build_admittance, power_balance, solve_network, Admittance, FeederModel, NetworkError,
    NodeLoads, SolverOptions, SourceModel, VoltageDependentLoad, ZipLoad,
};
use crate::protection::{
    combine_trips, step_capbank, step_overload_protection, step_thermal_protection,
    step_voltage_protection, CapBankState, CapBankStatus, ProtectionState, ThermalState,
};
use crate::scenario::{DeviceLoad, ProtectionInstance, ProtectionSettings, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("scenario rejected: {}", .0.join("; "))]
    Scenario(Vec<String>),
    #[error("step size {got} differs from the scenario dt {expected}")]
    StepSize { expected: f64, got: f64 },
    #[error("device `{device}` has no pre-fault operating point")]
    NoEquilibrium { device: String },
    #[error("pre-fault initialisation did not settle")]
    Initialisation,
    #[error("network solve failed at t = {time:.6} s: {source}")]
    Network {
        time: f64,
        #[source]
        source: NetworkError,
    },
    #[error("non-finite state in `{device}` at t = {time:.6} s")]
    NonFinite { device: String, time: f64 },
}

/// A failed run: the error plus whatever was recorded before it.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunError {
    pub error: EngineError,
    pub partial: Option<Box<SimulationTrace>>,
}

#[derive(Debug, Clone)]
enum LoadModel {
    Static(ZipLoad),
    /// `ratio` converts device-base admittance and current to the system base.
    Motor {
        params: MotorParams,
        ratio: f64,
    },
}

#[derive(Debug, Clone)]
struct DeviceModel {
    id: String,
    node: usize,
    load: LoadModel,
    protections: Vec<ProtectionInstance>,
}

/// Protection memory of one device, aligned with its protection list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtState {
    Timer(ProtectionState),
    Thermal(ThermalState),
}

impl ProtState {
    pub fn tripped(&self) -> bool {
        match self {
            ProtState::Timer(s) => s.prot_trip,
            ProtState::Thermal(s) => s.tripped,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub connected: bool,
    /// `None` for static loads.
    pub motor: Option<MotorState>,
    pub protections: Vec<ProtState>,
}

impl DeviceState {
    pub fn stalled(&self) -> bool {
        self.motor.is_some_and(|m| m.stalled)
    }

    pub fn temperature(&self) -> f64 {
        self.protections
            .iter()
            .find_map(|p| match p {
                ProtState::Thermal(s) => Some(s.temperature),
                _ => None,
            })
            .unwrap_or(0.0)
    }
}

/// Complete simulation state at the start of step `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub devices: Vec<DeviceState>,
    pub capbanks: Vec<CapBankState>,
    /// Last solved node voltages; warm start for the next solve.
    pub voltages: Vec<Complex64>,
}

/// Quantities measured during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub time: f64,
    pub voltages: Vec<f64>,
    pub devices: Vec<DeviceRecord>,
    pub events: Vec<Event>,
    pub power_mismatch: f64,
    pub iterations: usize,
}

/// A scenario compiled into device models and a factorisable network.
#[derive(Debug, Clone)]
pub struct Engine {
    feeder: FeederModel,
    admittance: Admittance,
    source: SourceModel,
    solver: SolverOptions,
    devices: Vec<DeviceModel>,
    dt: f64,
    steps: usize,
    record_every: usize,
    meter_node: Option<usize>,
}

impl Engine {
    pub fn new(scenario: &Scenario) -> Result<Self, EngineError> {
        let errs = scenario.violations();
        if !errs.is_empty() {
            return Err(EngineError::Scenario(errs));
        }
        let feeder = scenario.feeder.clone();
        let base_kva = feeder.base_mva * 1000.0;
        let mut devices = Vec::new();
        for plan in scenario.devices() {
            let load = match plan.load {
                DeviceLoad::Static(zip) => LoadModel::Static(ZipLoad {
                    s0: zip.s0 / base_kva,
                    ..zip
                }),
                DeviceLoad::Motor(params) => {
                    let p_nom = nominal_input_power(&params)
                        .filter(|p| *p > 0.0)
                        .ok_or_else(|| EngineError::NoEquilibrium {
                            device: plan.id.clone(),
                        })?;
                    let ratio = params.rated_power_kw / p_nom / base_kva;
                    LoadModel::Motor { params, ratio }
                }
            };
            devices.push(DeviceModel {
                id: plan.id,
                node: plan.node,
                load,
                protections: plan.protections,
            });
        }
        let admittance = build_admittance(&feeder, &vec![false; feeder.cap_banks.len()])
            .map_err(|source| EngineError::Network { time: 0.0, source })?;
        Ok(Engine {
            feeder,
            admittance,
            source: scenario.source.clone(),
            solver: scenario.solver,
            devices,
            dt: scenario.dt,
            steps: scenario.step_count(),
            record_every: scenario.record_every,
            meter_node: scenario.meter_node,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    pub fn device_ids(&self) -> Vec<String> {
        self.devices.iter().map(|d| d.id.clone()).collect()
    }

    pub fn device_index(&self, id: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.id == id)
    }

    pub fn feeder(&self) -> &FeederModel {
        &self.feeder
    }

    fn node_loads(&self, devices: &[DeviceState], capbanks: &[CapBankState]) -> NodeLoads {
        let mut loads = NodeLoads::empty(self.feeder.node_count());
        loads.v_break = self.solver.low_voltage_break;
        for (k, (cap, st)) in self.feeder.cap_banks.iter().zip(capbanks).enumerate() {
            if st.status == CapBankStatus::On {
                loads.add_shunt(cap.node, self.feeder.capbank_admittance(k));
            }
        }
        for (model, st) in self.devices.iter().zip(devices) {
            if !st.connected {
                continue;
            }
            let node = model.node;
            match &model.load {
                LoadModel::Static(zip) => {
                    loads.add_shunt(node, (zip.s0 * zip.a_z).conj());
                    if zip.a_i != 0.0 {
                        loads.add_term(
                            node,
                            VoltageDependentLoad::ConstantCurrent {
                                s: zip.s0 * zip.a_i,
                            },
                        );
                    }
                    if zip.a_p != 0.0 {
                        loads.add_term(
                            node,
                            VoltageDependentLoad::ConstantPower {
                                s: zip.s0 * zip.a_p,
                            },
                        );
                    }
                }
                LoadModel::Motor { params, ratio } => {
                    let m = st.motor.expect("motor device carries motor state");
                    if params.motor_type.is_three_phase() {
                        loads.add_shunt(node, *ratio / equivalent_impedance(params, m.slip));
                    } else if m.stalled {
                        loads.add_shunt(node, *ratio / params.stall_impedance());
                    } else {
                        let s = single_phase_running_power(params, 1.0);
                        loads.add_term(
                            node,
                            VoltageDependentLoad::Exponential {
                                p: ratio * s.re,
                                q: ratio * s.im,
                                kp: params.kp,
                                kq: params.kq,
                            },
                        );
                    }
                }
            }
        }
        loads
    }

    fn solve(
        &self,
        devices: &[DeviceState],
        capbanks: &[CapBankState],
        t: f64,
        warm: Option<&[Complex64]>,
    ) -> Result<(NodeLoads, crate::network::NetworkSolution), EngineError> {
        let loads = self.node_loads(devices, capbanks);
        let sol = solve_network(
            &self.admittance,
            &self.source,
            &loads,
            self.feeder.source_node,
            t,
            &self.solver,
            warm,
        )
        .map_err(|source| EngineError::Network { time: t, source })?;
        Ok((loads, sol))
    }

    /// Pre-fault equilibrium: motors at their steady-state slip for the
    /// solved terminal voltage, capacitor banks settled, protections reset.
    pub fn initial_state(&self) -> Result<SimState, EngineError> {
        let mut devices: Vec<DeviceState> = self
            .devices
            .iter()
            .map(|d| DeviceState {
                connected: true,
                motor: match &d.load {
                    LoadModel::Static(_) => None,
                    LoadModel::Motor { params, .. } => {
                        let slip = if params.motor_type.is_three_phase() {
                            steady_state_slip(params, params.rated_voltage).unwrap_or(0.05)
                        } else {
                            0.0
                        };
                        Some(MotorState::running(slip))
                    }
                },
                protections: d
                    .protections
                    .iter()
                    .map(|p| match p.settings {
                        ProtectionSettings::Thermal(_) => {
                            ProtState::Thermal(ThermalState::default())
                        }
                        _ => ProtState::Timer(ProtectionState::default()),
                    })
                    .collect(),
            })
            .collect();
        let mut capbanks = vec![CapBankState::default(); self.feeder.cap_banks.len()];
        let mut warm: Option<Vec<Complex64>> = None;
        for _ in 0..200 {
            let (_, sol) = self.solve(&devices, &capbanks, 0.0, warm.as_deref())?;
            let mut change = 0.0f64;
            for (model, st) in self.devices.iter().zip(devices.iter_mut()) {
                let LoadModel::Motor { params, .. } = &model.load else {
                    continue;
                };
                if !params.motor_type.is_three_phase() {
                    continue;
                }
                let v = sol.voltages[model.node].norm();
                let slip =
                    steady_state_slip(params, v).ok_or_else(|| EngineError::NoEquilibrium {
                        device: model.id.clone(),
                    })?;
                let m = st.motor.as_mut().expect("motor state");
                change = change.max((slip - m.slip).abs());
                m.slip = slip;
            }
            let mut switched = false;
            for (k, cap) in self.feeder.cap_banks.iter().enumerate() {
                let next = step_capbank(&cap.params, &capbanks[k], sol.voltages[cap.node].norm());
                switched |= next != capbanks[k];
                capbanks[k] = next;
            }
            if change < 1e-12 && !switched {
                let (_, sol) = self.solve(&devices, &capbanks, 0.0, Some(&sol.voltages))?;
                for (model, st) in self.devices.iter().zip(devices.iter_mut()) {
                    if let (Some(m), LoadModel::Motor { params, .. }) =
                        (st.motor.as_mut(), &model.load)
                    {
                        let v = sol.voltages[model.node];
                        m.terminal_voltage = v;
                        m.drawn_current = if params.motor_type.is_three_phase() {
                            three_phase_current(params, m.slip, v)
                        } else {
                            single_phase_current(params, false, v)
                        };
                    }
                }
                return Ok(SimState {
                    step: 0,
                    devices,
                    capbanks,
                    voltages: sol.voltages,
                });
            }
            warm = Some(sol.voltages);
        }
        Err(EngineError::Initialisation)
    }

    /// Advances the state by one step of length `dt`, which must equal the
    /// scenario step.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<(SimState, StepOutput), EngineError> {
        if (dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(EngineError::StepSize {
                expected: self.dt,
                got: dt,
            });
        }
        let t = state.step as f64 * self.dt;
        let (loads, sol) = self.solve(&state.devices, &state.capbanks, t, Some(&state.voltages))?;
        let balance = power_balance(
            &self.feeder,
            &vec![false; self.feeder.cap_banks.len()],
            &loads,
            &sol,
        );
        let v = &sol.voltages;

        let mut events = Vec::new();
        let mut next_devices = Vec::with_capacity(self.devices.len());
        let mut records = Vec::with_capacity(self.devices.len());
        for (model, st) in self.devices.iter().zip(&state.devices) {
            let vt = v[model.node];
            let vm = vt.norm();
            let current = if !st.connected {
                0.0
            } else {
                match &model.load {
                    LoadModel::Static(zip) => {
                        static_current(zip, vt, self.solver.low_voltage_break)
                    }
                    LoadModel::Motor { params, .. } => {
                        let m = st.motor.expect("motor state");
                        if params.motor_type.is_three_phase() {
                            three_phase_current(params, m.slip, vt).norm()
                        } else {
                            single_phase_current(params, m.stalled, vt).norm()
                        }
                    }
                }
            };
            let stalled = st.stalled();
            records.push(DeviceRecord {
                current,
                connected: st.connected,
                stalled,
                temperature: st.temperature(),
            });

            let mut prots = st.protections.clone();
            for (inst, ps) in model.protections.iter().zip(prots.iter_mut()) {
                *ps = match (&inst.settings, *ps) {
                    (ProtectionSettings::Voltage(p), ProtState::Timer(s)) => {
                        ProtState::Timer(step_voltage_protection(p, &s, vm, t, dt))
                    }
                    (ProtectionSettings::Overload(p), ProtState::Timer(s)) if inst.enabled => {
                        ProtState::Timer(step_overload_protection(p, &s, current, dt))
                    }
                    (ProtectionSettings::Thermal(p), ProtState::Thermal(s)) if inst.enabled => {
                        ProtState::Thermal(step_thermal_protection(p, &s, current, stalled, dt))
                    }
                    (_, unchanged) => unchanged,
                };
            }
            let signals: Vec<bool> = model
                .protections
                .iter()
                .zip(&prots)
                .map(|(inst, ps)| inst.enabled && ps.tripped())
                .collect();
            let connected = !combine_trips(&signals);
            let before = |k: usize| model.protections[k].enabled && st.protections[k].tripped();
            if st.connected && !connected {
                let k = (0..signals.len())
                    .find(|&k| signals[k] && !before(k))
                    .or_else(|| signals.iter().position(|&s| s));
                let cause = EventCause::Protection(
                    model.protections[k.expect("a tripped protection")].kind,
                );
                events.push(Event {
                    time: t,
                    device: model.id.clone(),
                    kind: EventKind::Trip,
                    cause,
                });
            } else if !st.connected && connected {
                let k = (0..signals.len())
                    .find(|&k| before(k) && !signals[k])
                    .unwrap_or(0);
                let cause = model
                    .protections
                    .get(k)
                    .map(|p| EventCause::Protection(p.kind))
                    .unwrap_or(EventCause::ContactorEquivalent);
                events.push(Event {
                    time: t,
                    device: model.id.clone(),
                    kind: EventKind::Reconnect,
                    cause,
                });
            }

            let motor = match (&model.load, st.motor) {
                (LoadModel::Motor { params, .. }, Some(m)) => {
                    let mut m = MotorState {
                        connected: st.connected,
                        ..m
                    };
                    let mut next = step_motor(params, &m, vt, dt);
                    if next.stalled && !m.stalled {
                        events.push(Event {
                            time: t,
                            device: model.id.clone(),
                            kind: EventKind::Stall,
                            cause: EventCause::ContactorEquivalent,
                        });
                    }
                    next.connected = connected;
                    if !connected {
                        next.stalled = false;
                        next.elapsed_under_stall_voltage = 0.0;
                    }
                    m = next;
                    if !(m.slip.is_finite()
                        && m.drawn_current.re.is_finite()
                        && m.drawn_current.im.is_finite())
                    {
                        return Err(EngineError::NonFinite {
                            device: model.id.clone(),
                            time: t,
                        });
                    }
                    Some(m)
                }
                _ => None,
            };
            let next = DeviceState {
                connected,
                motor,
                protections: prots,
            };
            if !(next.temperature().is_finite() && current.is_finite()) {
                return Err(EngineError::NonFinite {
                    device: model.id.clone(),
                    time: t,
                });
            }
            next_devices.push(next);
        }

        let mut capbanks = state.capbanks.clone();
        for (k, cap) in self.feeder.cap_banks.iter().enumerate() {
            let next = step_capbank(&cap.params, &capbanks[k], v[cap.node].norm());
            if next.status != capbanks[k].status {
                let kind = match next.status {
                    CapBankStatus::Off => EventKind::CapbankOff,
                    CapBankStatus::On => EventKind::CapbankOn,
                };
                events.push(Event {
                    time: t,
                    device: cap.id.clone(),
                    kind,
                    cause: EventCause::Capbank,
                });
            }
            capbanks[k] = next;
        }

        if let Some(k) = v
            .iter()
            .position(|x| !(x.re.is_finite() && x.im.is_finite()))
        {
            return Err(EngineError::NonFinite {
                device: self.feeder.nodes[k].clone(),
                time: t,
            });
        }
        let output = StepOutput {
            time: t,
            voltages: v.iter().map(|x| x.norm()).collect(),
            devices: records,
            events,
            power_mismatch: balance.mismatch(),
            iterations: sol.iterations,
        };
        let next = SimState {
            step: state.step + 1,
            devices: next_devices,
            capbanks,
            voltages: sol.voltages,
        };
        Ok((next, output))
    }

    fn empty_trace(&self) -> SimulationTrace {
        SimulationTrace {
            node_ids: self.feeder.nodes.clone(),
            device_ids: self.device_ids(),
            dt: self.dt,
            head_node: self.feeder.source_node,
            meter_node: self.meter_node,
            sag_start: self.source.sags.first().map(|s| s.start),
            sag_end: self.source.last_sag_end(),
            time: Vec::new(),
            voltages: Vec::new(),
            devices: Vec::new(),
            events: Vec::new(),
            power_mismatch: Vec::new(),
        }
    }

    /// Runs `steps` steps from `state`, returning the trace and final state.
    pub fn run_from(
        &self,
        state: SimState,
        steps: usize,
    ) -> Result<(SimulationTrace, SimState), RunError> {
        let mut trace = self.empty_trace();
        let mut state = state;
        for _ in 0..steps {
            match self.step(&state, self.dt) {
                Ok((next, out)) => {
                    let record = state.step.is_multiple_of(self.record_every);
                    trace.push(out, record);
                    state = next;
                }
                Err(error) => {
                    return Err(RunError {
                        error,
                        partial: Some(Box::new(trace)),
                    })
                }
            }
        }
        Ok((trace, state))
    }

    pub fn run(&self) -> Result<SimulationTrace, RunError> {
        let init = self.initial_state().map_err(|error| RunError {
            error,
            partial: None,
        })?;
        self.run_from(init, self.steps).map(|(trace, _)| trace)
    }
}

/// Static load current on its own base (1 pu at nominal voltage).
fn static_current(zip: &ZipLoad, v: Complex64, v_break: f64) -> f64 {
    let i = (zip.s0 * zip.a_z).conj() * v
        + VoltageDependentLoad::ConstantCurrent {
            s: zip.s0 * zip.a_i,
        }
        .current_with_break(v, v_break)
        + VoltageDependentLoad::ConstantPower {
            s: zip.s0 * zip.a_p,
        }
        .current_with_break(v, v_break);
    i.norm() / zip.s0.norm()
}

/// Runs a validated scenario from its pre-fault equilibrium.
pub fn run(scenario: &Scenario) -> Result<SimulationTrace, RunError> {
    Engine::new(scenario)
        .map_err(|error| RunError {
            error,
            partial: None,
        })?
        .run()
}

#[cfg(test)]
mod tests;
