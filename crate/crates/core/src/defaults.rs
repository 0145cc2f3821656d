//! Named default table. Every physical constant used by the algorithms is either
//! read from a scenario file or comes from here.

/// Body inertia diagonal, HIL configuration (kg·m²).
pub const INERTIA_DIAG: [f64; 3] = [0.30, 0.42, 0.42];
/// Spacecraft mass (kg). Carried for configuration fidelity only.
pub const MASS: f64 = 20.0;
/// Pyramid wheel array; every entry is ±1/√3 (often written ±0.5774).
pub const SPIN_AXIS_SIGNS: [[f64; 4]; 3] = [[1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0], [1.0, 1.0, 1.0, 1.0]];
/// Flywheel spin-axis inertia (kg·m²).
pub const WHEEL_INERTIA: f64 = 1.0e-3;
/// Max wheel torque (N·m).
pub const MAX_WHEEL_TORQUE: f64 = 50e-3;
/// Max wheel speed (rad/s).
pub const MAX_WHEEL_SPEED: f64 = 366.0;
/// Initial wheel spin-up (rad/s).
pub const INITIAL_WHEEL_SPEEDS: [f64; 4] = [100.0, -100.0, -100.0, 100.0];

/// Motor torque constant (N·m/A).
pub const TORQUE_CONSTANT: f64 = 0.05;
/// Driver current deadband (A).
pub const DEADBAND_CURRENT: f64 = 0.3;
/// Driver current limit (A).
pub const MAX_CURRENT: f64 = 1.0;
/// Velocity loop proportional gain (N·m per rad/s).
pub const VELOCITY_KP: f64 = 0.01;
/// Velocity loop integral gain (N·m per rad).
pub const VELOCITY_KI: f64 = 0.05;
/// Viscous friction (N·m·s).
pub const WHEEL_FRICTION: f64 = 1e-6;
/// Driver telemetry low-pass cutoff (Hz).
pub const TELEMETRY_CUTOFF_HZ: f64 = 5.0;
/// Tachometer noise above the low-speed threshold (rad/s).
pub const SPEED_NOISE_HIGH: f64 = 0.05;
/// Tachometer noise below the low-speed threshold (rad/s).
pub const SPEED_NOISE_LOW: f64 = 3.0;
/// Low-speed threshold (rad/s).
pub const NOISY_SPEED_THRESHOLD: f64 = 30.0;
/// Current sensor noise (A).
pub const CURRENT_NOISE: f64 = 0.01;
/// Cutoff of the low-pass on differentiated wheel speed (Hz).
pub const ACCEL_FILTER_CUTOFF_HZ: f64 = 1.0;
/// Driver internal update step (s).
pub const WHEEL_INTERNAL_STEP: f64 = 1e-3;

/// Sensor rates (Hz).
pub const GYRO_RATE_HZ: f64 = 10.0;
pub const MAG_RATE_HZ: f64 = 2.0;
pub const SUN_RATE_HZ: f64 = 2.0;
/// Gyro angle random walk (rad/s^½).
pub const GYRO_ARW: f64 = 3e-5;
/// Gyro bias random walk (rad/s^{3/2}).
pub const GYRO_BIAS_RW: f64 = 1e-6;
/// True initial gyro bias (rad/s).
pub const GYRO_BIAS_INITIAL: [f64; 3] = [2e-4, -1e-4, 1.5e-4];
/// Mean angular error of vector-sensor samples (rad).
pub const VECTOR_NOISE: f64 = 0.003;
/// Inertial reference directions for the magnetometer and sun sensor (normalized on use).
pub const MAG_REFERENCE: [f64; 3] = [0.3, -0.5, 0.8];
pub const SUN_REFERENCE: [f64; 3] = [1.0, 0.2, -0.1];
/// Minimum angle between the two reference directions (rad).
pub const MIN_REFERENCE_SEPARATION: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Initial filter attitude 1σ (rad) and bias 1σ (rad/s).
pub const EKF_INITIAL_ATTITUDE_STD: f64 = 0.05;
pub const EKF_INITIAL_BIAS_STD: f64 = 1e-3;
/// Squared Mahalanobis gate on vector innovations.
pub const EKF_GATE: f64 = 50.0;
/// Attitude error injected into the filter's initial estimate (rad).
pub const EKF_INITIAL_ERROR: [f64; 3] = [0.01, -0.01, 0.005];

/// Orbit rate (rad/s), ≈95 min circular LEO.
pub const ORBIT_RATE: f64 = 0.0011;
pub const ORBIT_INITIAL_PHASE: f64 = 0.0;
/// Orbit inclination used to build the default orbit normal (rad).
pub const ORBIT_INCLINATION: f64 = 51.6 * std::f64::consts::PI / 180.0;

/// Controller gains, HIL column.
pub const GAIN_ALPHA: f64 = 3e-2;
pub const GAIN_BETA: f64 = 5e-3;
pub const GAIN_K: f64 = 1e-2;
pub const GAIN_GAMMA: f64 = 100.0;
pub const GAIN_K_ICL: f64 = 1.0;
pub const LAMBDA_BAR: f64 = 1e-7;
pub const THETA_MIN: f64 = 0.05;
pub const THETA_MAX: f64 = 1.0;
/// History stack capacity.
pub const ICL_CAPACITY: usize = 20;
/// Integration window (s).
pub const ICL_WINDOW: f64 = 10.0;
/// Spacing between candidate records (s).
pub const ICL_RECORD_INTERVAL: f64 = 1.0;
/// Fractional λ gain required to admit a record.
pub const ICL_ADMISSION_GAIN: f64 = 0.01;

/// Control period (s).
pub const CONTROL_PERIOD: f64 = 0.1;
/// Wheel telemetry period (s).
pub const TELEMETRY_PERIOD: f64 = 0.05;
/// Dynamics integration step (s).
pub const INTEGRATION_STEP: f64 = 0.01;

/// Scenario timeline (s).
pub const SCENARIO_DURATION: f64 = 4000.0;
pub const SWITCH_PERIOD: f64 = 720.0;
pub const NADIR_HOLD_AFTER: f64 = 2000.0;
/// Initial attitude (MRP) and body rate (rad/s).
pub const INITIAL_ATTITUDE: [f64; 3] = [0.25, -0.2, 0.3];
pub const INITIAL_BODY_RATE: [f64; 3] = [0.0, 0.0, 0.0];
/// Trailing part of each hold phase over which tracking is checked (s).
pub const HOLD_CHECK_WINDOW: f64 = 200.0;
