//! Virtual reaction-wheel device: brushless motor and driver with current and
//! velocity command modes, current deadband, saturation, an internal PI speed
//! loop, filtered and noisy telemetry, and scheduled fault injection.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults;

#[derive(Debug, Error, PartialEq)]
pub enum WheelError {
    #[error("wheel parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("deadband torque {0} N·m is not below the torque limit")]
    DeadbandAboveLimit(f64),
    #[error("fault event references wheel {0} but the array has {1} wheels")]
    UnknownWheel(usize, usize),
    #[error("fault scale {0} outside [0, 1]")]
    BadScale(f64),
    #[error("fault events for wheel {0} are not time-ordered")]
    Unsorted(usize),
    #[error("need at least two speed samples to differentiate")]
    InsufficientHistory,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WheelParams {
    /// N·m/A
    pub torque_constant: f64,
    /// kg·m²
    pub inertia: f64,
    /// N·m
    pub max_torque: f64,
    /// rad/s
    pub max_speed: f64,
    /// A
    pub deadband_current: f64,
    /// Driver current limit (A).
    pub max_current: f64,
    pub velocity_kp: f64,
    pub velocity_ki: f64,
    /// Viscous friction (N·m·s).
    pub friction: f64,
    pub telemetry_cutoff_hz: f64,
    pub speed_noise_high: f64,
    pub speed_noise_low: f64,
    pub noisy_speed_threshold: f64,
    pub current_noise: f64,
    pub accel_cutoff_hz: f64,
    /// Internal driver update step (s).
    pub internal_step: f64,
}

impl Default for WheelParams {
    fn default() -> Self {
        Self {
            torque_constant: defaults::TORQUE_CONSTANT,
            inertia: defaults::WHEEL_INERTIA,
            max_torque: defaults::MAX_WHEEL_TORQUE,
            max_speed: defaults::MAX_WHEEL_SPEED,
            deadband_current: defaults::DEADBAND_CURRENT,
            max_current: defaults::MAX_CURRENT,
            velocity_kp: defaults::VELOCITY_KP,
            velocity_ki: defaults::VELOCITY_KI,
            friction: defaults::WHEEL_FRICTION,
            telemetry_cutoff_hz: defaults::TELEMETRY_CUTOFF_HZ,
            speed_noise_high: defaults::SPEED_NOISE_HIGH,
            speed_noise_low: defaults::SPEED_NOISE_LOW,
            noisy_speed_threshold: defaults::NOISY_SPEED_THRESHOLD,
            current_noise: defaults::CURRENT_NOISE,
            accel_cutoff_hz: defaults::ACCEL_FILTER_CUTOFF_HZ,
            internal_step: defaults::WHEEL_INTERNAL_STEP,
        }
    }
}

impl WheelParams {
    pub fn validate(&self) -> Result<(), WheelError> {
        let positive = [
            ("torque_constant", self.torque_constant),
            ("inertia", self.inertia),
            ("max_torque", self.max_torque),
            ("max_speed", self.max_speed),
            ("deadband_current", self.deadband_current),
            ("max_current", self.max_current),
            ("velocity_kp", self.velocity_kp),
            ("velocity_ki", self.velocity_ki),
            ("telemetry_cutoff_hz", self.telemetry_cutoff_hz),
            ("noisy_speed_threshold", self.noisy_speed_threshold),
            ("accel_cutoff_hz", self.accel_cutoff_hz),
            ("internal_step", self.internal_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(WheelError::NonPositive(name));
            }
        }
        for (name, v) in [
            ("friction", self.friction),
            ("speed_noise_high", self.speed_noise_high),
            ("speed_noise_low", self.speed_noise_low),
            ("current_noise", self.current_noise),
        ] {
            if !(v >= 0.0) {
                return Err(WheelError::NonPositive(name));
            }
        }
        let dead_torque = self.deadband_current * self.torque_constant;
        if dead_torque >= self.max_torque {
            return Err(WheelError::DeadbandAboveLimit(dead_torque));
        }
        Ok(())
    }

    /// Telemetry and noise switched off.
    pub fn noiseless(mut self) -> Self {
        self.speed_noise_high = 0.0;
        self.speed_noise_low = 0.0;
        self.current_noise = 0.0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandMode {
    Current,
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelCommand {
    pub mode: CommandMode,
    /// A or rad/s depending on `mode`.
    pub value: f64,
    pub wheel: usize,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WheelState {
    pub speed: f64,
    /// Velocity-loop integral of speed error (rad).
    pub integrator: f64,
    /// Torque produced by the motor before health scaling (N·m).
    pub motor_torque: f64,
    pub health: f64,
    pub connected: bool,
    /// Driver low-pass state on the reported speed.
    pub filtered_speed: f64,
}

impl WheelState {
    pub fn spinning(speed: f64) -> Self {
        Self { speed, integrator: 0.0, motor_torque: 0.0, health: 1.0, connected: true, filtered_speed: speed }
    }
}

/// Motor torque for a current command. Nothing comes out inside the deadband.
pub fn torque_from_current(current: f64, p: &WheelParams) -> f64 {
    if current.abs() <= p.deadband_current {
        0.0
    } else {
        (p.torque_constant * current).clamp(-p.max_torque, p.max_torque)
    }
}

/// Pushes a command out of the deadband: `I + sign(I)·I_deadband`, with `sign(0) = 0`.
pub fn deadband_offset_compensation(current: f64, p: &WheelParams) -> f64 {
    if current == 0.0 {
        0.0
    } else {
        current + current.signum() * p.deadband_current
    }
}

/// PI speed loop with conditional integration (integrator frozen while the
/// output is saturated in the direction of the error).
pub fn velocity_loop(speed_cmd: f64, w: &mut WheelState, p: &WheelParams, dt: f64) -> f64 {
    let err = speed_cmd - w.speed;
    let unsat = p.velocity_kp * err + p.velocity_ki * w.integrator;
    let saturated = unsat.abs() >= p.max_torque && unsat.signum() == err.signum();
    if !saturated {
        w.integrator += err * dt;
    }
    (p.velocity_kp * err + p.velocity_ki * w.integrator).clamp(-p.max_torque, p.max_torque)
}

/// Advances one wheel by `dt`, substepping at the driver's internal rate.
pub fn wheel_step(w: &WheelState, c: &WheelCommand, p: &WheelParams, dt: f64) -> WheelState {
    debug_assert!(dt > 0.0);
    let mut next = w.clone();
    let n = (dt / p.internal_step).round().max(1.0) as usize;
    let h = dt / n as f64;
    let a = 1.0 - (-2.0 * std::f64::consts::PI * p.telemetry_cutoff_hz * h).exp();
    for _ in 0..n {
        next.motor_torque = match c.mode {
            CommandMode::Current => torque_from_current(c.value, p),
            CommandMode::Velocity => velocity_loop(c.value, &mut next, p, h),
        };
        let effective = if next.connected { next.motor_torque * next.health } else { 0.0 };
        let accel = (effective - p.friction * next.speed) / p.inertia;
        next.speed = (next.speed + accel * h).clamp(-p.max_speed, p.max_speed);
        next.filtered_speed += a * (next.speed - next.filtered_speed);
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelTelemetry {
    /// rad/s
    pub speed: f64,
    /// A
    pub current: f64,
}

/// Driver telemetry: low-passed speed plus speed-dependent tach noise, and a
/// current reading that is zero inside the deadband.
pub fn wheel_measure<R: Rng + ?Sized>(w: &WheelState, p: &WheelParams, rng: &mut R) -> WheelTelemetry {
    let sd = if w.speed.abs() < p.noisy_speed_threshold { p.speed_noise_low } else { p.speed_noise_high };
    let speed = w.filtered_speed + gaussian(rng, sd);
    let ideal = if w.connected { w.motor_torque / p.torque_constant } else { 0.0 };
    let current = if ideal.abs() < p.deadband_current { 0.0 } else { ideal + gaussian(rng, p.current_noise) };
    WheelTelemetry { speed, current }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    sd * z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelMethod {
    CurrentBased,
    DiffLowpass,
}

/// Wheel angular acceleration reconstructed from telemetry.
#[derive(Debug, Clone)]
pub struct AccelEstimator {
    method: AccelMethod,
    last: Option<(f64, f64)>,
    filtered: f64,
}

impl AccelEstimator {
    pub fn new(method: AccelMethod) -> Self {
        Self { method, last: None, filtered: 0.0 }
    }

    /// Group delay of the differentiating filter, `1/(2π·f_c)`.
    pub fn group_delay(p: &WheelParams) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * p.accel_cutoff_hz)
    }

    pub fn update(&mut self, t: f64, tel: &WheelTelemetry, p: &WheelParams) -> Result<f64, WheelError> {
        match self.method {
            AccelMethod::CurrentBased => Ok(p.torque_constant * tel.current / p.inertia),
            AccelMethod::DiffLowpass => {
                let prev = self.last.replace((t, tel.speed));
                let (t0, w0) = prev.ok_or(WheelError::InsufficientHistory)?;
                let dt = t - t0;
                if dt <= 0.0 {
                    return Ok(self.filtered);
                }
                let raw = (tel.speed - w0) / dt;
                let a = 1.0 - (-2.0 * std::f64::consts::PI * p.accel_cutoff_hz * dt).exp();
                self.filtered += a * (raw - self.filtered);
                Ok(self.filtered)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaultKind {
    Scale { factor: f64 },
    Disconnect,
    Reconnect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub time: f64,
    pub wheel: usize,
    #[serde(flatten)]
    pub kind: FaultKind,
}

/// Health and connection of one wheel as seen by a fault schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultStatus {
    pub scale: f64,
    pub connected: bool,
}

impl FaultStatus {
    pub const NOMINAL: FaultStatus = FaultStatus { scale: 1.0, connected: true };

    pub fn effective(&self) -> f64 {
        if self.connected {
            self.scale
        } else {
            0.0
        }
    }
}

/// Validated fault events, ordered by time, with a cursor so each event is
/// applied exactly once.
#[derive(Debug, Clone, Default)]
pub struct FaultSchedule {
    events: Vec<FaultEvent>,
    next: usize,
}

impl FaultSchedule {
    pub fn new(events: Vec<FaultEvent>, wheels: usize) -> Result<Self, WheelError> {
        let mut last = vec![f64::NEG_INFINITY; wheels];
        for e in &events {
            if e.wheel >= wheels {
                return Err(WheelError::UnknownWheel(e.wheel, wheels));
            }
            if let FaultKind::Scale { factor } = e.kind {
                if !(0.0..=1.0).contains(&factor) {
                    return Err(WheelError::BadScale(factor));
                }
            }
            if e.time < last[e.wheel] {
                return Err(WheelError::Unsorted(e.wheel));
            }
            last[e.wheel] = e.time;
        }
        let mut events = events;
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { events, next: 0 })
    }

    pub fn events(&self) -> &[FaultEvent] {
        &self.events
    }

    /// Per-wheel status after all events with `time ≤ t`.
    pub fn status_at(&self, t: f64, wheels: usize) -> Vec<FaultStatus> {
        let mut st = vec![FaultStatus::NOMINAL; wheels];
        for e in self.events.iter().take_while(|e| e.time <= t) {
            apply(&mut st[e.wheel], &e.kind);
        }
        st
    }

    /// Applies every not-yet-applied event with `time ≤ t` to the wheel array.
    /// Returns the number of events applied; calling again for the same `t` is a no-op.
    pub fn apply_due(&mut self, t: f64, wheels: &mut [WheelState]) -> usize {
        let start = self.next;
        while let Some(e) = self.events.get(self.next).filter(|e| e.time <= t) {
            let w = &mut wheels[e.wheel];
            let mut st = FaultStatus { scale: w.health, connected: w.connected };
            apply(&mut st, &e.kind);
            w.health = st.scale;
            w.connected = st.connected;
            self.next += 1;
        }
        self.next - start
    }
}

fn apply(st: &mut FaultStatus, kind: &FaultKind) {
    match *kind {
        FaultKind::Scale { factor } => st.scale = factor,
        FaultKind::Disconnect => st.connected = false,
        FaultKind::Reconnect => st.connected = true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frictionless() -> WheelParams {
        WheelParams { friction: 0.0, ..WheelParams::default() }
    }

    fn cmd(mode: CommandMode, value: f64) -> WheelCommand {
        WheelCommand { mode, value, wheel: 0, t: 0.0 }
    }

    #[test]
    fn current_deadband_and_gain() {
        let p = WheelParams::default();
        assert_eq!(torque_from_current(0.2, &p), 0.0);
        assert_eq!(torque_from_current(-0.3, &p), 0.0);
        assert_eq!(torque_from_current(0.0, &p), 0.0);
        assert_relative_eq!(torque_from_current(0.5, &p), 0.025, epsilon = 1e-15);
        assert_eq!(torque_from_current(5.0, &p), p.max_torque);
        assert_eq!(torque_from_current(-5.0, &p), -p.max_torque);
    }

    #[test]
    fn compensation_offsets_by_deadband() {
        let p = WheelParams::default();
        assert_relative_eq!(deadband_offset_compensation(0.01, &p), 0.31, epsilon = 1e-15);
        assert_relative_eq!(deadband_offset_compensation(-0.01, &p), -0.31, epsilon = 1e-15);
        assert_eq!(deadband_offset_compensation(0.0, &p), 0.0);
    }

    #[test]
    fn velocity_loop_at_setpoint_is_silent() {
        let p = WheelParams::default();
        let mut w = WheelState::spinning(42.0);
        assert_eq!(velocity_loop(42.0, &mut w, &p, 1e-3), 0.0);
    }

    #[test]
    fn velocity_step_settles() {
        let p = WheelParams::default();
        let mut w = WheelState::spinning(0.0);
        let c = cmd(CommandMode::Velocity, 50.0);
        let dt = 0.01;
        let mut t = 0.0;
        let mut last_outside = 0.0;
        while t < 6.0 {
            w = wheel_step(&w, &c, &p, dt);
            t += dt;
            if (w.speed - 50.0).abs() > 0.02 * 50.0 {
                last_outside = t;
            }
        }
        assert!(last_outside < 2.0, "settled at {last_outside}");
        assert!((w.speed - 50.0).abs() < 0.01, "steady-state {}", w.speed);
    }

    #[test]
    fn dead_wheel_only_decays() {
        let p = WheelParams::default();
        let mut w = WheelState::spinning(100.0);
        w.health = 0.0;
        let c = cmd(CommandMode::Current, 1.0);
        let next = wheel_step(&w, &c, &p, 1.0);
        let n = (1.0 / p.internal_step) as i32;
        let expect = 100.0 * (1.0 - p.friction * p.internal_step / p.inertia).powi(n);
        assert_relative_eq!(next.speed, expect, epsilon = 1e-9);
    }

    #[test]
    fn health_scales_acceleration() {
        let p = frictionless();
        let c = cmd(CommandMode::Current, 0.8);
        let full = wheel_step(&WheelState::spinning(0.0), &c, &p, 0.1).speed;
        let mut half = WheelState::spinning(0.0);
        half.health = 0.5;
        let half = wheel_step(&half, &c, &p, 0.1).speed;
        assert_relative_eq!(half, 0.5 * full, epsilon = 1e-12);
    }

    #[test]
    fn constant_torque_is_linear_ramp() {
        let p = frictionless();
        let mut w = WheelState::spinning(10.0);
        w.health = 0.7;
        let c = cmd(CommandMode::Current, 0.6);
        let tau = torque_from_current(0.6, &p);
        let mut t = 0.0;
        for _ in 0..50 {
            w = wheel_step(&w, &c, &p, 0.02);
            t += 0.02;
            assert_relative_eq!(w.speed, 10.0 + tau * 0.7 / p.inertia * t, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn disconnect_zeroes_torque() {
        let p = frictionless();
        let mut w = WheelState::spinning(5.0);
        w.connected = false;
        let next = wheel_step(&w, &cmd(CommandMode::Current, 0.9), &p, 0.1);
        assert_eq!(next.speed, 5.0);
    }

    #[test]
    fn speed_is_clamped() {
        let p = frictionless();
        let mut w = WheelState::spinning(p.max_speed - 0.1);
        w = wheel_step(&w, &cmd(CommandMode::Current, 1.0), &p, 1.0);
        assert_eq!(w.speed, p.max_speed);
    }

    fn std_of(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    }

    #[test]
    fn tach_noise_levels() {
        let p = WheelParams { speed_noise_high: 0.5, speed_noise_low: 5.0, ..WheelParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let hi: Vec<f64> = (0..10_000).map(|_| wheel_measure(&WheelState::spinning(200.0), &p, &mut rng).speed).collect();
        let s = std_of(&hi);
        assert!((0.45..=0.55).contains(&s), "{s}");
        let lo: Vec<f64> = (0..10_000).map(|_| wheel_measure(&WheelState::spinning(0.0), &p, &mut rng).speed).collect();
        let s = std_of(&lo);
        assert!((4.5..=5.5).contains(&s), "{s}");
    }

    #[test]
    fn noiseless_telemetry_is_filtered_speed() {
        let p = WheelParams::default().noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = WheelState::spinning(100.0);
        w.filtered_speed = 97.0;
        assert_eq!(wheel_measure(&w, &p, &mut rng).speed, 97.0);
    }

    #[test]
    fn current_telemetry_dead_zone() {
        let p = WheelParams::default().noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = WheelState::spinning(100.0);
        w.motor_torque = 0.01; // 0.2 A
        assert_eq!(wheel_measure(&w, &p, &mut rng).current, 0.0);
        w.motor_torque = 0.03;
        assert_relative_eq!(wheel_measure(&w, &p, &mut rng).current, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn diff_accel_needs_history_and_is_zero_for_constant_speed() {
        let p = WheelParams::default();
        let mut est = AccelEstimator::new(AccelMethod::DiffLowpass);
        let tel = WheelTelemetry { speed: 100.0, current: 0.0 };
        assert_eq!(est.update(0.0, &tel, &p), Err(WheelError::InsufficientHistory));
        for k in 1..100 {
            assert_eq!(est.update(k as f64 * 0.05, &tel, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn diff_accel_lags_a_step() {
        let p = WheelParams::default();
        let mut est = AccelEstimator::new(AccelMethod::DiffLowpass);
        let dt = 0.05;
        // true acceleration steps from 0 to 10 rad/s² at t = 1 s
        let speed = |t: f64| if t < 1.0 { 0.0 } else { 10.0 * (t - 1.0) };
        let mut crossed = None;
        for k in 0..200 {
            let t = k as f64 * dt;
            if let Ok(a) = est.update(t, &WheelTelemetry { speed: speed(t), current: 0.0 }, &p) {
                if crossed.is_none() && a >= 10.0 * (1.0 - (-1.0f64).exp()) {
                    crossed = Some(t);
                }
            }
        }
        let delay = crossed.unwrap() - 1.0;
        let tau = AccelEstimator::group_delay(&p);
        assert!(delay > 0.5 * tau && delay < tau + 2.0 * dt, "delay {delay} vs τ {tau}");
    }

    #[test]
    fn current_accel_misses_deadband_motion() {
        let p = WheelParams::default();
        let mut est = AccelEstimator::new(AccelMethod::CurrentBased);
        let mut w = WheelState::spinning(100.0);
        w = wheel_step(&w, &cmd(CommandMode::Velocity, 101.0), &p, 0.05);
        let true_accel = (w.motor_torque - p.friction * w.speed) / p.inertia;
        assert!(true_accel.abs() > 1e-3);
        let tel = wheel_measure(&w, &p.clone().noiseless(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(est.update(0.05, &tel, &p).unwrap(), 0.0);
    }

    #[test]
    fn fault_schedule_semantics() {
        let mut wheels = vec![WheelState::spinning(0.0); 4];
        let mut empty = FaultSchedule::new(vec![], 4).unwrap();
        assert_eq!(empty.apply_due(100.0, &mut wheels), 0);
        assert!(wheels.iter().all(|w| w.health == 1.0 && w.connected));

        let mut s = FaultSchedule::new(vec![FaultEvent { time: 0.0, wheel: 2, kind: FaultKind::Scale { factor: 0.5 } }], 4).unwrap();
        assert_eq!(s.apply_due(0.0, &mut wheels), 1);
        assert_eq!(s.apply_due(0.0, &mut wheels), 0);
        assert_eq!(wheels[2].health, 0.5);
        assert_eq!(s.status_at(3999.0, 4)[2].effective(), 0.5);

        let mut s = FaultSchedule::new(
            vec![FaultEvent { time: 1.0, wheel: 1, kind: FaultKind::Disconnect }, FaultEvent { time: 2.0, wheel: 1, kind: FaultKind::Reconnect }],
            4,
        )
        .unwrap();
        let p = frictionless();
        let c = cmd(CommandMode::Current, 0.8);
        s.apply_due(1.5, &mut wheels);
        assert!(!wheels[1].connected);
        assert_eq!(wheel_step(&wheels[1], &c, &p, 0.1).speed, wheels[1].speed);
        s.apply_due(2.0, &mut wheels);
        assert!(wheels[1].connected);
        assert!(wheel_step(&wheels[1], &c, &p, 0.1).speed > wheels[1].speed);
    }

    #[test]
    fn fault_schedule_validation() {
        let ev = |t, w, k| FaultEvent { time: t, wheel: w, kind: k };
        assert_eq!(FaultSchedule::new(vec![ev(0.0, 4, FaultKind::Disconnect)], 4).unwrap_err(), WheelError::UnknownWheel(4, 4));
        assert_eq!(FaultSchedule::new(vec![ev(0.0, 0, FaultKind::Scale { factor: 1.5 })], 4).unwrap_err(), WheelError::BadScale(1.5));
        assert_eq!(
            FaultSchedule::new(vec![ev(5.0, 0, FaultKind::Disconnect), ev(1.0, 0, FaultKind::Reconnect)], 4).unwrap_err(),
            WheelError::Unsorted(0)
        );
    }

    #[test]
    fn params_validation() {
        assert!(WheelParams::default().validate().is_ok());
        let p = WheelParams { deadband_current: 2.0, ..WheelParams::default() };
        assert!(matches!(p.validate(), Err(WheelError::DeadbandAboveLimit(_))));
        let p = WheelParams { inertia: 0.0, ..WheelParams::default() };
        assert_eq!(p.validate(), Err(WheelError::NonPositive("inertia")));
    }
}
