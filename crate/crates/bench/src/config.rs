//! Scenario file: one TOML document that fully determines a run.
//!
//! Every section is optional and falls back to the HIL defaults. Unknown keys
//! are rejected. Wheel numbers in `[[faults.events]]` are 1-based.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3xX};
use rwhil_core::control::{ControlError, ControlGains, IclConfig};
use rwhil_core::defaults;
use rwhil_core::dynamics::{default_spin_axes, DynamicsError, GuidanceTimeline, OrbitModel, SpacecraftParams};
use rwhil_core::mekf::EkfParams;
use rwhil_core::sensors::{SensorError, SensorSuiteParams};
use rwhil_core::wheel::{CommandMode, FaultEvent, FaultKind, FaultSchedule, WheelError, WheelParams};
use rwhil_core::{Mat3, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Spin axes within this distance of unit length are normalized on load
/// (four-decimal 0.5774 for 1/√3 is common); anything further off is rejected.
const AXIS_NORMALIZE_TOLERANCE: f64 = 1e-3;
/// Relative slack when checking that one period is an integer multiple of another.
const RATIO_TOLERANCE: f64 = 1e-9;

const NS_PER_S: f64 = 1e9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("spacecraft: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("wheels: {0}")]
    Wheel(#[from] WheelError),
    #[error("sensors: {0}")]
    Sensor(#[from] SensorError),
    #[error("gains: {0}")]
    Control(#[from] ControlError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Mil,
    #[serde(alias = "dist")]
    Distributed,
}

/// Where the simulator's equations of motion take wheel acceleration from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelSource {
    /// Torque the controller commanded (after fault scaling and saturation).
    Commanded,
    /// Low-passed numerical derivative of wheel speed telemetry.
    Differentiated,
    /// Current telemetry times torque constant.
    CurrentBased,
}

/// How a scheduled fault reaches the wheels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultInjection {
    /// The controller's outgoing effort is scaled before conversion; the devices stay nominal.
    Command,
    /// The emulated device itself loses effectiveness.
    Device,
}

/// A gain given either as a scalar (times identity) or as a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl GainSpec {
    fn to_matrix(&self, n: usize, name: &str) -> Result<DMatrix<f64>, ConfigError> {
        match self {
            GainSpec::Scalar(x) => Ok(DMatrix::identity(n, n) * *x),
            GainSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return invalid(format!("gains.{name} must be a scalar or a {n}×{n} matrix"));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpacecraftSection {
    /// kg·m², row-major.
    pub inertia: [[f64; 3]; 3],
    /// kg
    pub mass: f64,
    /// One body-frame spin axis per wheel.
    pub spin_axes: Vec<[f64; 3]>,
}

impl Default for SpacecraftSection {
    fn default() -> Self {
        let d = defaults::INERTIA_DIAG;
        let g = default_spin_axes();
        Self {
            inertia: [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]],
            mass: defaults::MASS,
            spin_axes: g.column_iter().map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandSection {
    pub mode: CommandMode,
    /// Add `sign(I)·I_deadband` to every current command.
    pub deadband_compensation: bool,
}

impl Default for CommandSection {
    fn default() -> Self {
        Self { mode: CommandMode::Velocity, deadband_compensation: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// RK4 step (s).
    pub integration_step: f64,
    /// Controller period (s).
    pub control_period: f64,
    /// Wheel telemetry period; also the lockstep tick (s).
    pub telemetry_period: f64,
    pub eom_wheel_accel: AccelSource,
    /// Master switch for sensor and telemetry noise.
    pub noise: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            integration_step: defaults::INTEGRATION_STEP,
            control_period: defaults::CONTROL_PERIOD,
            telemetry_period: defaults::TELEMETRY_PERIOD,
            eom_wheel_accel: AccelSource::Commanded,
            noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// MRP
    pub attitude: [f64; 3],
    /// rad/s
    pub body_rate: [f64; 3],
    /// rad/s
    pub wheel_speeds: Vec<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { attitude: defaults::INITIAL_ATTITUDE, body_rate: defaults::INITIAL_BODY_RATE, wheel_speeds: defaults::INITIAL_WHEEL_SPEEDS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsSection {
    pub alpha: GainSpec,
    pub beta: f64,
    pub k: GainSpec,
    pub gamma: GainSpec,
    pub k_icl: GainSpec,
    pub lambda_bar: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for GainsSection {
    fn default() -> Self {
        Self {
            alpha: GainSpec::Scalar(defaults::GAIN_ALPHA),
            beta: defaults::GAIN_BETA,
            k: GainSpec::Scalar(defaults::GAIN_K),
            gamma: GainSpec::Scalar(defaults::GAIN_GAMMA),
            k_icl: GainSpec::Scalar(defaults::GAIN_K_ICL),
            lambda_bar: defaults::LAMBDA_BAR,
            theta_min: defaults::THETA_MIN,
            theta_max: defaults::THETA_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EkfSection {
    /// Squared Mahalanobis gate on vector innovations.
    pub gate: f64,
    /// rad
    pub initial_attitude_std: f64,
    /// rad/s
    pub initial_bias_std: f64,
    /// Rotation vector from truth to the filter's initial attitude (rad).
    pub initial_error: [f64; 3],
}

impl Default for EkfSection {
    fn default() -> Self {
        Self {
            gate: defaults::EKF_GATE,
            initial_attitude_std: defaults::EKF_INITIAL_ATTITUDE_STD,
            initial_bias_std: defaults::EKF_INITIAL_BIAS_STD,
            initial_error: defaults::EKF_INITIAL_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultSection {
    pub injection: FaultInjection,
    pub events: Vec<FaultEvent>,
}

impl Default for FaultSection {
    fn default() -> Self {
        Self { injection: FaultInjection::Command, events: Vec::new() }
    }
}

/// Pass/fail checks evaluated after the run; any failure gives exit code 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expectations {
    /// `[min, max]` per wheel for the final health estimate.
    pub theta_final: Option<Vec<[f64; 2]>>,
    /// λ must reach λ̄ before this time (s).
    pub lambda_crossing_before: Option<f64>,
    /// Bound on ‖σ_e‖ over the last `hold_window` seconds of each hold phase.
    pub attitude_error_max: Option<f64>,
    /// Bound on ‖ω̃‖ (rad/s) at the end of each hold phase.
    pub rate_error_max: Option<f64>,
    /// s
    pub hold_window: f64,
    /// Bound on the mean controller step time (ms).
    pub controller_step_mean_ms: Option<f64>,
}

impl Default for Expectations {
    fn default() -> Self {
        Self {
            theta_final: None,
            lambda_crossing_before: None,
            attitude_error_max: None,
            rate_error_max: None,
            hold_window: defaults::HOLD_CHECK_WINDOW,
            controller_step_mean_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub mode: RunMode,
    pub seed: u64,
    pub spacecraft: SpacecraftSection,
    pub wheels: WheelParams,
    pub command: CommandSection,
    pub sim: SimSection,
    pub initial: InitialSection,
    pub gains: GainsSection,
    pub icl: IclConfig,
    pub sensors: SensorSuiteParams,
    pub ekf: EkfSection,
    pub guidance: GuidanceTimeline,
    pub orbit: OrbitModel,
    pub faults: FaultSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectations>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: "unnamed".into(),
            mode: RunMode::Mil,
            seed: 1,
            spacecraft: SpacecraftSection::default(),
            wheels: WheelParams::default(),
            command: CommandSection::default(),
            sim: SimSection::default(),
            initial: InitialSection::default(),
            gains: GainsSection::default(),
            icl: IclConfig::default(),
            sensors: SensorSuiteParams::default(),
            ekf: EkfSection::default(),
            guidance: GuidanceTimeline::default(),
            orbit: OrbitModel::default(),
            faults: FaultSection::default(),
            expect: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }
}

/// Lockstep clock derived from the three configured periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub step: f64,
    pub tick: f64,
    pub control: f64,
    pub steps_per_tick: usize,
    pub ticks_per_control: u64,
    /// Index of the last tick; the run covers ticks `0..=last_tick`.
    pub last_tick: u64,
    pub tick_ns: u64,
}

impl Timing {
    pub fn time(&self, k: u64) -> f64 {
        k as f64 * self.tick
    }

    pub fn timestamp_ns(&self, k: u64) -> u64 {
        k * self.tick_ns
    }

    pub fn is_control_tick(&self, k: u64) -> bool {
        k.is_multiple_of(self.ticks_per_control)
    }
}

fn ratio(big: f64, small: f64, what: &str) -> Result<u64, ConfigError> {
    let r = big / small;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > RATIO_TOLERANCE * r {
        return invalid(format!("{what} must be an integer multiple ({big} / {small} = {r})"));
    }
    Ok(n as u64)
}

/// Validated, ready-to-run form of a [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub spacecraft: SpacecraftParams,
    /// Device parameters with the noise switch applied.
    pub wheel: WheelParams,
    /// Sensor parameters with the noise switch applied.
    pub sensors: SensorSuiteParams,
    /// Filter tuning (independent of the noise switch).
    pub ekf: EkfParams,
    pub gains: ControlGains,
    pub icl: IclConfig,
    pub faults: FaultSchedule,
    pub timing: Timing,
    pub initial_attitude: Vec3,
    pub initial_rate: Vec3,
    pub initial_wheel_speeds: DVector<f64>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self, ConfigError> {
        let c = &config;
        if c.schema_version != SCHEMA_VERSION {
            return invalid(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", c.schema_version));
        }
        let n = c.spacecraft.spin_axes.len();
        let mut axes = Matrix3xX::zeros(n);
        for (i, a) in c.spacecraft.spin_axes.iter().enumerate() {
            let v = Vec3::from(*a);
            let norm = v.norm();
            if (norm - 1.0).abs() > AXIS_NORMALIZE_TOLERANCE {
                return invalid(format!("spacecraft.spin_axes[{i}] has norm {norm}; spin axes must be unit vectors"));
            }
            axes.set_column(i, &(v / norm));
        }
        let inertia = Mat3::from_fn(|i, j| c.spacecraft.inertia[i][j]);
        c.wheels.validate()?;
        if !(c.spacecraft.mass > 0.0) {
            return invalid("spacecraft.mass must be positive");
        }
        let spacecraft = SpacecraftParams::new(inertia, c.spacecraft.mass, axes, c.wheels.inertia, c.wheels.max_speed)?;

        c.sensors.validate()?;
        let ekf_tuning = EkfParams::from_sensors(&c.sensors, c.ekf.gate);
        if !(c.ekf.gate > 0.0 && c.ekf.initial_attitude_std > 0.0 && c.ekf.initial_bias_std > 0.0) {
            return invalid("ekf gate and initial standard deviations must be positive");
        }
        if !(ekf_tuning.vector_std > 0.0) {
            return invalid("sensors.vector_noise must be positive (it also tunes the filter; use sim.noise = false for clean sensors)");
        }

        let g = &c.gains;
        let gains = ControlGains {
            alpha: to_mat3(&g.alpha.to_matrix(3, "alpha")?),
            beta: g.beta,
            k: to_mat3(&g.k.to_matrix(3, "k")?),
            gamma: g.gamma.to_matrix(n, "gamma")?,
            k_icl: g.k_icl.to_matrix(n, "k_icl")?,
            lambda_bar: g.lambda_bar,
            theta_min: g.theta_min,
            theta_max: g.theta_max,
        };
        gains.validate(n)?;

        let s = &c.sim;
        for (name, v) in [
            ("sim.integration_step", s.integration_step),
            ("sim.control_period", s.control_period),
            ("sim.telemetry_period", s.telemetry_period),
            ("guidance.duration", c.guidance.duration),
            ("guidance.switch_period", c.guidance.switch_period),
            ("orbit.rate", c.orbit.rate),
            ("icl.window", c.icl.window),
            ("icl.record_interval", c.icl.record_interval),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if c.icl.capacity == 0 {
            return invalid("icl.capacity must be at least 1");
        }
        if !(c.icl.admission_gain >= 0.0) {
            return invalid("icl.admission_gain must be non-negative");
        }
        if Vec3::from(c.orbit.normal).norm() == 0.0 {
            return invalid("orbit.normal must be non-zero");
        }
        let steps_per_tick = ratio(s.telemetry_period, s.integration_step, "sim.telemetry_period / sim.integration_step")?;
        let ticks_per_control = ratio(s.control_period, s.telemetry_period, "sim.control_period / sim.telemetry_period")?;
        let controls = ratio(c.guidance.duration, s.control_period, "guidance.duration / sim.control_period")?;
        let timing = Timing {
            step: s.integration_step,
            tick: s.telemetry_period,
            control: s.control_period,
            steps_per_tick: steps_per_tick as usize,
            ticks_per_control,
            last_tick: controls * ticks_per_control,
            tick_ns: (s.telemetry_period * NS_PER_S).round() as u64,
        };

        if c.initial.wheel_speeds.len() != n {
            return invalid(format!("initial.wheel_speeds has {} entries for {n} wheels", c.initial.wheel_speeds.len()));
        }
        if c.initial.wheel_speeds.iter().any(|w| w.abs() > c.wheels.max_speed) {
            return invalid("initial.wheel_speeds exceed wheels.max_speed");
        }
        if c.command.deadband_compensation && c.command.mode != CommandMode::Current {
            return invalid("command.deadband_compensation only applies to command.mode = \"current\"");
        }

        let mut events = Vec::with_capacity(c.faults.events.len());
        for e in &c.faults.events {
            if e.wheel == 0 || e.wheel > n {
                return invalid(format!("faults.events: wheel {} is not in 1..={n}", e.wheel));
            }
            if !(e.time >= 0.0) {
                return invalid("faults.events: time must be non-negative");
            }
            events.push(FaultEvent { wheel: e.wheel - 1, ..*e });
        }
        let faults = FaultSchedule::new(events, n)?;

        if let Some(x) = &c.expect {
            if let Some(t) = &x.theta_final {
                if t.len() != n || t.iter().any(|r| !(r[0] <= r[1])) {
                    return invalid(format!("expect.theta_final needs {n} [min, max] pairs"));
                }
            }
            if !(x.hold_window > 0.0) {
                return invalid("expect.hold_window must be positive");
            }
        }

        let (wheel, sensors) =
            if s.noise { (c.wheels.clone(), c.sensors.clone()) } else { (c.wheels.clone().noiseless(), c.sensors.clone().noiseless()) };
        Ok(Self {
            spacecraft,
            wheel,
            sensors,
            ekf: ekf_tuning,
            gains,
            icl: c.icl,
            faults,
            timing,
            initial_attitude: Vec3::from(c.initial.attitude),
            initial_rate: Vec3::from(c.initial.body_rate),
            initial_wheel_speeds: DVector::from_column_slice(&c.initial.wheel_speeds),
            config,
        })
    }

    pub fn wheel_count(&self) -> usize {
        self.spacecraft.wheel_count()
    }

    /// Events addressed to the devices (empty under command injection).
    pub fn device_faults(&self) -> FaultSchedule {
        match self.config.faults.injection {
            FaultInjection::Device => self.faults.clone(),
            FaultInjection::Command => FaultSchedule::default(),
        }
    }

    /// Events applied to outgoing commands (empty under device injection).
    pub fn command_faults(&self) -> FaultSchedule {
        match self.config.faults.injection {
            FaultInjection::Command => self.faults.clone(),
            FaultInjection::Device => FaultSchedule::default(),
        }
    }

    /// True wheel health and connection over time, whatever the injection path.
    pub fn fault_free(&self) -> bool {
        self.faults.events().iter().all(|e| matches!(e.kind, FaultKind::Scale { factor } if factor == 1.0))
    }
}

fn to_mat3(m: &DMatrix<f64>) -> Mat3 {
    Mat3::from_fn(|i, j| m[(i, j)])
}
