//! The three node state machines: simulator, controller and wheel emulator.
//!
//! Each node is advanced one lockstep tick at a time with the messages that
//! reached it since its previous tick, and returns what it publishes. The MIL
//! runner routes those messages in memory; node processes route them over the
//! bus. Both paths call the same code in the same order.
//!
//! Within tick `k` (time `t_k = k·Δ`) the phases run wheel → simulator →
//! controller:
//!
//! * wheel node: advance the devices over `[t_{k−1}, t_k]` under the last
//!   command, apply due device faults, publish `RW_STATE(t_k)`;
//! * simulator: propagate truth over `[t_{k−1}, t_k]`, run sensors and the
//!   filter, publish `EST_STATE(t_k)` on control ticks;
//! * controller (control ticks only): consume `EST_STATE(t_k)` and
//!   `RW_STATE(t_k)`, publish `RW_CMD` and `HEALTH_TLM`.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rwhil_bus::{EstState, HealthTlm, PayloadError, Role, RwCmd, RwState, Topic, WireMode};
use rwhil_core::att::{attitude_error, quat_from_mrp, Mrp};
use rwhil_core::control::{
    adaptation_step, allocate, compute_aux_control, induce_command_fault, torque_to_current_cmd, torque_to_velocity_cmd, wheel_torque_command,
    IclHistory, IclRecord, IclSample,
};
use rwhil_core::dynamics::{guidance, rk4_step, BodyState, GuidanceSample, WheelInputs};
use rwhil_core::mekf::{estimated_outputs, mekf_predict, mekf_update, EkfState};
use rwhil_core::sensors::{SensorKind, SensorSuite};
use rwhil_core::wheel::{
    deadband_offset_compensation, wheel_measure, wheel_step, AccelEstimator, AccelMethod, CommandMode, FaultSchedule, WheelCommand, WheelState,
};
use rwhil_core::{Quaternion, Vec3};
use thiserror::Error;

use crate::config::{AccelSource, FaultInjection, Scenario};

/// Slack when comparing times built from different integer grids (s).
const TIME_EPS: f64 = 1e-9;

/// RNG stream ids, so every node draws from its own sequence.
const SIM_STREAM: u64 = 1;
const WHEEL_STREAM_BASE: u64 = 16;

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("t = {t} s: {msg}")]
    Runtime { t: f64, msg: String },
    #[error("malformed {topic} payload: {source}")]
    Payload { topic: Topic, source: PayloadError },
}

fn runtime(t: f64, msg: impl Into<String>) -> NodeError {
    NodeError::Runtime { t, msg: msg.into() }
}

/// A decoded data message.
#[derive(Debug, Clone, PartialEq)]
pub enum Msg {
    Est(EstState),
    Cmd(RwCmd),
    State(RwState),
    Health(HealthTlm),
}

impl Msg {
    pub fn topic(&self) -> Topic {
        match self {
            Msg::Est(_) => Topic::EstState,
            Msg::Cmd(_) => Topic::RwCmd,
            Msg::State(_) => Topic::RwState,
            Msg::Health(_) => Topic::HealthTlm,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, PayloadError> {
        match self {
            Msg::Est(m) => m.encode(),
            Msg::Cmd(m) => m.encode(),
            Msg::State(m) => m.encode(),
            Msg::Health(m) => m.encode(),
        }
    }

    /// `None` for control topics, which are not data messages.
    pub fn decode(topic: Topic, payload: &[u8]) -> Option<Result<Msg, NodeError>> {
        let wrap = |source| NodeError::Payload { topic, source };
        Some(match topic {
            Topic::EstState => EstState::decode(payload).map(Msg::Est).map_err(wrap),
            Topic::RwCmd => RwCmd::decode(payload).map(Msg::Cmd).map_err(wrap),
            Topic::RwState => RwState::decode(payload).map(Msg::State).map_err(wrap),
            Topic::HealthTlm => HealthTlm::decode(payload).map(Msg::Health).map_err(wrap),
            _ => return None,
        })
    }
}

/// Rows a node contributes to the run log, keyed by tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeLog {
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

fn indexed(name: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{name}_{i}"))
}

fn vec3_cols(name: &str) -> Vec<String> {
    indexed(name, 3).collect()
}

/// Topics the broker forwards to each node role.
pub fn role_subscriptions(role: Role) -> &'static [Topic] {
    match role {
        Role::Sim => &[Topic::RwCmd, Topic::RwState],
        Role::Ctl => &[Topic::EstState, Topic::RwState],
        Role::Rw => &[Topic::RwCmd],
        Role::Observer => &[Topic::EstState, Topic::RwCmd, Topic::RwState, Topic::HealthTlm],
    }
}

pub trait Node {
    fn role(&self) -> Role;
    fn subscriptions(&self) -> &'static [Topic] {
        role_subscriptions(self.role())
    }
    /// Wall-clock duration of every compute step that is timed (s).
    fn exec_times(&self) -> &[f64] {
        &[]
    }
    /// Runs tick `k` and returns the messages to publish, in order.
    fn tick(&mut self, k: u64, inbox: Vec<Msg>) -> Result<Vec<Msg>, NodeError>;
    fn log(&self) -> &NodeLog;
    /// Log rows appended since the last call (for streaming to disk).
    fn take_new_rows(&mut self) -> &[(u64, Vec<f64>)];
}

/// Tracks which rows were already handed out by `take_new_rows`.
#[derive(Debug, Default)]
struct Cursor(usize);

impl Cursor {
    fn advance<'a>(&mut self, log: &'a NodeLog) -> &'a [(u64, Vec<f64>)] {
        let start = self.0;
        self.0 = log.rows.len();
        &log.rows[start..]
    }
}

pub fn make_node(role: Role, s: &Scenario) -> Option<Box<dyn Node + Send>> {
    match role {
        Role::Sim => Some(Box::new(SimNode::new(s))),
        Role::Ctl => Some(Box::new(CtlNode::new(s))),
        Role::Rw => Some(Box::new(RwNode::new(s))),
        Role::Observer => None,
    }
}

/// Lockstep phase order within one tick.
pub const PHASES: [Role; 3] = [Role::Rw, Role::Sim, Role::Ctl];

/// Whether `role` acts on tick `k`.
pub fn acts_on(role: Role, k: u64, s: &Scenario) -> bool {
    role != Role::Ctl || s.timing.is_control_tick(k)
}

fn wire_mode(m: CommandMode) -> WireMode {
    match m {
        CommandMode::Current => WireMode::Current,
        CommandMode::Velocity => WireMode::Velocity,
    }
}

fn core_mode(m: WireMode) -> CommandMode {
    match m {
        WireMode::Current => CommandMode::Current,
        WireMode::Velocity => CommandMode::Velocity,
    }
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

// ---------------------------------------------------------------------------

/// Virtual reaction-wheel array.
pub struct RwNode {
    s: Scenario,
    wheels: Vec<WheelState>,
    rngs: Vec<ChaCha8Rng>,
    faults: FaultSchedule,
    cmd: Option<RwCmd>,
    log: NodeLog,
    cursor: Cursor,
}

impl RwNode {
    pub fn new(s: &Scenario) -> Self {
        let n = s.wheel_count();
        let rngs = (0..n)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(s.config.seed);
                r.set_stream(WHEEL_STREAM_BASE + i as u64);
                r
            })
            .collect();
        let header =
            std::iter::empty().chain(indexed("rw_speed_meas", n)).chain(indexed("rw_current_meas", n)).chain(indexed("rw_speed_true", n)).collect();
        Self {
            wheels: s.initial_wheel_speeds.iter().map(|w| WheelState::spinning(*w)).collect(),
            rngs,
            faults: s.device_faults(),
            cmd: None,
            log: NodeLog { header, rows: Vec::new() },
            cursor: Cursor::default(),
            s: s.clone(),
        }
    }

    pub fn wheels(&self) -> &[WheelState] {
        &self.wheels
    }
}

impl Node for RwNode {
    fn role(&self) -> Role {
        Role::Rw
    }

    fn tick(&mut self, k: u64, inbox: Vec<Msg>) -> Result<Vec<Msg>, NodeError> {
        let tm = self.s.timing;
        let t = tm.time(k);
        let n = self.wheels.len();
        for m in inbox {
            if let Msg::Cmd(c) = m {
                if c.value.len() != n {
                    return Err(runtime(t, format!("RW_CMD carries {} wheels, expected {n}", c.value.len())));
                }
                self.cmd = Some(c);
            }
        }
        if k > 0 {
            let (mode, values) = match &self.cmd {
                Some(c) => (core_mode(c.mode), c.value.clone()),
                None => (CommandMode::Current, vec![0.0; n]),
            };
            for (i, w) in self.wheels.iter_mut().enumerate() {
                let c = WheelCommand { mode, value: values[i], wheel: i, t: tm.time(k - 1) };
                *w = wheel_step(w, &c, &self.s.wheel, tm.tick);
            }
        }
        self.faults.apply_due(t, &mut self.wheels);
        let tel: Vec<_> = self.wheels.iter().zip(self.rngs.iter_mut()).map(|(w, r)| wheel_measure(w, &self.s.wheel, r)).collect();
        let state = RwState { t, speed: tel.iter().map(|x| x.speed).collect(), current: tel.iter().map(|x| x.current).collect() };
        if tm.is_control_tick(k) {
            let row = state.speed.iter().chain(&state.current).copied().chain(self.wheels.iter().map(|w| w.speed)).collect();
            self.log.rows.push((k, row));
        }
        Ok(vec![Msg::State(state)])
    }

    fn log(&self) -> &NodeLog {
        &self.log
    }

    fn take_new_rows(&mut self) -> &[(u64, Vec<f64>)] {
        self.cursor.advance(&self.log)
    }
}

// ---------------------------------------------------------------------------

/// Spacecraft truth, sensors and attitude filter.
pub struct SimNode {
    s: Scenario,
    truth: BodyState,
    sensors: SensorSuite,
    rng: ChaCha8Rng,
    ekf: EkfState,
    gyro: Option<(f64, Vec3)>,
    /// Body torque each wheel applies, held over the current tick.
    torque: DVector<f64>,
    health: DVector<f64>,
    accel: Vec<AccelEstimator>,
    /// Wheel acceleration reconstructed from telemetry (rad/s²).
    accel_est: DVector<f64>,
    device_faults: FaultSchedule,
    log: NodeLog,
    cursor: Cursor,
}

impl SimNode {
    pub fn new(s: &Scenario) -> Self {
        let n = s.wheel_count();
        let sigma0 = Mrp(s.initial_attitude);
        let mut rng = ChaCha8Rng::seed_from_u64(s.config.seed);
        rng.set_stream(SIM_STREAM);
        let q0 = Quaternion::from_rotation_vector(&Vec3::from(s.config.ekf.initial_error)).compose(&quat_from_mrp(&sigma0));
        let method = match s.config.sim.eom_wheel_accel {
            AccelSource::CurrentBased => AccelMethod::CurrentBased,
            _ => AccelMethod::DiffLowpass,
        };
        let header = ["t", "k"]
            .into_iter()
            .map(String::from)
            .chain(["sigma", "omega", "sigma_hat", "omega_hat", "sigma_d", "omega_d", "sigma_e", "omega_err"].iter().flat_map(|c| vec3_cols(c)))
            .chain(indexed("sim_wheel_speed", n))
            .collect();
        Self {
            truth: BodyState { t: 0.0, sigma: sigma0, omega: s.initial_rate, wheel_speeds: s.initial_wheel_speeds.clone() },
            sensors: SensorSuite::new(s.sensors.clone()),
            rng,
            ekf: EkfState::new(q0, Vec3::zeros(), s.config.ekf.initial_attitude_std, s.config.ekf.initial_bias_std),
            gyro: None,
            torque: DVector::zeros(n),
            health: DVector::from_element(n, 1.0),
            accel: vec![AccelEstimator::new(method); n],
            accel_est: DVector::zeros(n),
            device_faults: s.device_faults(),
            log: NodeLog { header, rows: Vec::new() },
            cursor: Cursor::default(),
            s: s.clone(),
        }
    }

    pub fn truth(&self) -> &BodyState {
        &self.truth
    }

    pub fn ekf(&self) -> &EkfState {
        &self.ekf
    }

    /// Samples sensors at the current truth time and folds them into the filter.
    fn sense(&mut self) {
        let t = self.truth.t;
        let samples = self.sensors.sample_sensors(&self.truth, t, &mut self.rng);
        for smp in samples.iter().filter(|x| x.kind == SensorKind::Gyro) {
            if let Some((t0, w0)) = self.gyro {
                if t > t0 {
                    self.ekf = mekf_predict(&self.ekf, &w0, t - t0, &self.s.ekf);
                }
            }
            self.gyro = Some((t, smp.value));
        }
        for smp in samples.iter().filter(|x| x.kind != SensorKind::Gyro) {
            if let Some((t0, w0)) = self.gyro {
                if t > t0 + TIME_EPS {
                    self.ekf = mekf_predict(&self.ekf, &w0, t - t0, &self.s.ekf);
                    self.gyro = Some((t, w0));
                }
            }
            self.ekf = mekf_update(&self.ekf, smp, &self.s.ekf).0;
        }
    }

    fn estimate(&self) -> (Mrp, Vec3) {
        let w = self.gyro.map_or(Vec3::zeros(), |(_, w)| w);
        estimated_outputs(&self.ekf, &w)
    }
}

impl Node for SimNode {
    fn role(&self) -> Role {
        Role::Sim
    }

    fn tick(&mut self, k: u64, inbox: Vec<Msg>) -> Result<Vec<Msg>, NodeError> {
        let tm = self.s.timing;
        let t = tm.time(k);
        let n = self.s.wheel_count();
        let wp = self.s.wheel.clone();
        let wp = &wp;
        let source = self.s.config.sim.eom_wheel_accel;
        let mut telemetry = None;
        for m in inbox {
            match m {
                Msg::Cmd(c) if source == AccelSource::Commanded => {
                    if c.torque.len() != n {
                        return Err(runtime(t, "RW_CMD wheel count mismatch"));
                    }
                    self.torque = DVector::from_iterator(n, c.torque.iter().map(|x| -x.clamp(-wp.max_torque, wp.max_torque)));
                }
                Msg::State(st) => telemetry = Some(st),
                _ => {}
            }
        }
        if source != AccelSource::Commanded {
            self.torque = -wp.inertia * &self.accel_est;
        }
        if k > 0 {
            let status = self.device_faults.status_at(tm.time(k - 1), n);
            self.health = match self.s.config.faults.injection {
                FaultInjection::Device if source == AccelSource::Commanded => DVector::from_iterator(n, status.iter().map(|x| x.effective())),
                _ => DVector::from_element(n, 1.0),
            };
            let inputs = WheelInputs { torque: self.torque.clone(), health: self.health.clone() };
            let base = (k - 1) * tm.steps_per_tick as u64;
            for j in 1..=tm.steps_per_tick as u64 {
                let mut next = rk4_step(&self.truth, &inputs, tm.step, &self.s.spacecraft)
                    .map_err(|e| runtime(self.truth.t, format!("dynamics diverged at tick {k}: {e}")))?;
                next.t = (base + j) as f64 * tm.step;
                self.truth = next;
                self.sense();
            }
            self.truth.t = t;
        } else {
            self.sense();
        }
        if let Some(st) = telemetry {
            if st.speed.len() != n {
                return Err(runtime(t, "RW_STATE wheel count mismatch"));
            }
            if source != AccelSource::Commanded {
                for (i, est) in self.accel.iter_mut().enumerate() {
                    let tel = rwhil_core::wheel::WheelTelemetry { speed: st.speed[i], current: st.current[i] };
                    self.accel_est[i] = est.update(st.t, &tel, wp).unwrap_or(0.0);
                }
                self.truth.wheel_speeds = DVector::from_column_slice(&st.speed).map(|x| x.clamp(-wp.max_speed, wp.max_speed));
            }
        }
        if !tm.is_control_tick(k) {
            return Ok(Vec::new());
        }
        let g: GuidanceSample = guidance(t, &self.s.config.guidance, &self.s.config.orbit);
        let (sigma_hat, omega_hat) = self.estimate();
        let err = attitude_error(&self.truth.sigma, &g.sigma_d, &self.truth.omega, &g.omega_d);
        let mut row = vec![t, k as f64];
        for v in [self.truth.sigma.0, self.truth.omega, sigma_hat.0, omega_hat, g.sigma_d.0, g.omega_d, err.sigma_e.0, err.omega_err] {
            row.extend(v.iter());
        }
        row.extend(self.truth.wheel_speeds.iter());
        self.log.rows.push((k, row));
        Ok(vec![Msg::Est(EstState {
            t,
            sigma_hat: arr(&sigma_hat.0),
            omega_hat: arr(&omega_hat),
            sigma_d: arr(&g.sigma_d.0),
            omega_d: arr(&g.omega_d),
            omega_dot_d: arr(&g.omega_dot_d),
        })])
    }

    fn log(&self) -> &NodeLog {
        &self.log
    }

    fn take_new_rows(&mut self) -> &[(u64, Vec<f64>)] {
        self.cursor.advance(&self.log)
    }
}

// ---------------------------------------------------------------------------

/// Adaptive controller with health estimation.
pub struct CtlNode {
    s: Scenario,
    theta: DVector<f64>,
    history: IclHistory,
    samples: VecDeque<IclSample>,
    last_u: Option<DVector<f64>>,
    speed_cmd: Vec<f64>,
    wheel_speeds: Option<(f64, DVector<f64>)>,
    est: Option<EstState>,
    next_record: f64,
    command_faults: FaultSchedule,
    exec: Vec<f64>,
    log: NodeLog,
    cursor: Cursor,
}

impl CtlNode {
    pub fn new(s: &Scenario) -> Self {
        let n = s.wheel_count();
        let header = std::iter::empty()
            .chain(indexed("u", n))
            .chain(indexed("cmd", n))
            .chain(indexed("theta", n))
            .chain(std::iter::once("lambda".to_string()))
            .collect();
        Self {
            theta: DVector::from_element(n, s.gains.theta_max),
            history: IclHistory::new(n, &s.icl),
            samples: VecDeque::new(),
            last_u: None,
            speed_cmd: s.initial_wheel_speeds.iter().copied().collect(),
            wheel_speeds: None,
            est: None,
            next_record: s.icl.window,
            command_faults: s.command_faults(),
            exec: Vec::new(),
            log: NodeLog { header, rows: Vec::new() },
            cursor: Cursor::default(),
            s: s.clone(),
        }
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn history(&self) -> &IclHistory {
        &self.history
    }
}

/// Drops samples older than the window and, when a record is due and the
/// buffer spans the window, integrates everything but the newest sample.
fn record_due(samples: &mut VecDeque<IclSample>, next_record: &mut f64, s: &Scenario, t: f64) -> Option<IclRecord> {
    let window = s.icl.window;
    while samples.front().is_some_and(|x| x.t < t - window - TIME_EPS) {
        samples.pop_front();
    }
    let spans = samples.front().is_some_and(|x| x.t <= t - window + TIME_EPS);
    if t + TIME_EPS < *next_record || !spans {
        return None;
    }
    while *next_record <= t + TIME_EPS {
        *next_record += s.icl.record_interval;
    }
    let body: Vec<IclSample> = samples.iter().take(samples.len() - 1).cloned().collect();
    IclRecord::from_window(&body, &s.spacecraft)
}

impl Node for CtlNode {
    fn role(&self) -> Role {
        Role::Ctl
    }

    fn exec_times(&self) -> &[f64] {
        &self.exec
    }

    fn tick(&mut self, k: u64, inbox: Vec<Msg>) -> Result<Vec<Msg>, NodeError> {
        let tm = self.s.timing;
        let t = tm.time(k);
        let n = self.s.wheel_count();
        for m in inbox {
            match m {
                Msg::Est(e) => self.est = Some(e),
                Msg::State(st) if st.speed.len() == n => self.wheel_speeds = Some((st.t, DVector::from_column_slice(&st.speed))),
                Msg::State(_) => return Err(runtime(t, "RW_STATE wheel count mismatch")),
                _ => {}
            }
        }
        let est = match &self.est {
            Some(e) if (e.t - t).abs() < TIME_EPS => e.clone(),
            _ => return Err(runtime(t, "no state estimate for this control tick")),
        };
        let speeds = match &self.wheel_speeds {
            Some((_, w)) => w.clone(),
            None => return Err(runtime(t, "no wheel telemetry yet")),
        };
        let started = Instant::now();
        let p = &self.s.spacecraft;
        let wp = &self.s.wheel;
        let gains = &self.s.gains;
        let sigma = Mrp(Vec3::from(est.sigma_hat));
        let omega = Vec3::from(est.omega_hat);
        let g = GuidanceSample { sigma_d: Mrp(Vec3::from(est.sigma_d)), omega_d: Vec3::from(est.omega_d), omega_dot_d: Vec3::from(est.omega_dot_d) };
        let aux = compute_aux_control(&sigma, &omega, &g, &speeds, p, gains);
        let u = allocate(&aux.u_d, &self.theta, &p.spin_axes).map_err(|e| runtime(t, e.to_string()))?.map(|x| x.clamp(-wp.max_torque, wp.max_torque));

        if let Some(prev) = self.last_u.take() {
            self.samples.push_back(IclSample { t, omega, wheel_speeds: speeds.clone(), u: prev });
        }
        self.samples.push_back(IclSample { t, omega, wheel_speeds: speeds, u: u.clone() });
        if let Some(rec) = record_due(&mut self.samples, &mut self.next_record, &self.s, t) {
            self.history.consider(rec);
        }
        self.last_u = Some(u.clone());
        self.theta = adaptation_step(&self.theta, &aux.r, &aux.b, p, &u, &self.history, gains, tm.control);

        let u_f = induce_command_fault(&u, &self.command_faults, t);
        let torque: Vec<f64> = u_f.iter().map(|x| wheel_torque_command(*x)).collect();
        let mode = self.s.config.command.mode;
        let value: Vec<f64> = match mode {
            CommandMode::Current => torque
                .iter()
                .map(|tau| {
                    let i = torque_to_current_cmd(*tau, wp);
                    if self.s.config.command.deadband_compensation {
                        deadband_offset_compensation(i, wp).clamp(-wp.max_current, wp.max_current)
                    } else {
                        i
                    }
                })
                .collect(),
            CommandMode::Velocity => {
                torque.iter().zip(self.speed_cmd.iter_mut()).map(|(tau, integ)| torque_to_velocity_cmd(*tau, integ, wp, tm.control)).collect()
            }
        };
        let fault_mask =
            self.command_faults.status_at(t, n).iter().enumerate().filter(|(_, st)| st.effective() != 1.0).fold(0u32, |m, (i, _)| m | (1 << i));
        self.exec.push(started.elapsed().as_secs_f64());

        let lambda = self.history.lambda();
        let row = u.iter().chain(&value).chain(self.theta.iter()).copied().chain(std::iter::once(lambda)).collect();
        self.log.rows.push((k, row));
        Ok(vec![
            Msg::Cmd(RwCmd { t, mode: wire_mode(mode), value, torque, fault_mask }),
            Msg::Health(HealthTlm { t, theta: self.theta.iter().copied().collect(), lambda }),
        ])
    }

    fn log(&self) -> &NodeLog {
        &self.log
    }

    fn take_new_rows(&mut self) -> &[(u64, Vec<f64>)] {
        self.cursor.advance(&self.log)
    }
}
