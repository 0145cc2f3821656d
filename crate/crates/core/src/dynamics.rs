//! Rigid spacecraft with an N-wheel array: equations of motion, the fixed-step
//! RK4 propagator, the scenario guidance timeline and a circular reference orbit.

use nalgebra::{Cholesky, DVector, Matrix3xX};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::att::{mrp_rate, mrp_shadow, Mat3, Mrp, Vec3};
use crate::defaults;

const SYMMETRY_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-9;
/// Guards against landing exactly on a phase edge.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("inertia matrix is not symmetric positive definite")]
    InertiaNotSpd,
    #[error("spin axis {0} is not unit norm (|s| = {1})")]
    SpinAxisNotUnit(usize, f64),
    #[error("at least 3 wheels are required, got {0}")]
    TooFewWheels(usize),
    #[error("parameter `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("non-finite state at t = {0} s")]
    NonFinite(f64),
}

#[derive(Debug, Clone)]
pub struct SpacecraftParams {
    pub inertia: Mat3,
    inertia_inv: Mat3,
    pub mass: f64,
    /// 3×N matrix of unit spin axes (body frame).
    pub spin_axes: Matrix3xX<f64>,
    pub wheel_inertia: f64,
    pub max_wheel_speed: f64,
}

impl SpacecraftParams {
    pub fn new(inertia: Mat3, mass: f64, spin_axes: Matrix3xX<f64>, wheel_inertia: f64, max_wheel_speed: f64) -> Result<Self, DynamicsError> {
        if (inertia - inertia.transpose()).abs().max() > SYMMETRY_TOL * inertia.abs().max() {
            return Err(DynamicsError::InertiaNotSpd);
        }
        let chol = Cholesky::new(inertia).ok_or(DynamicsError::InertiaNotSpd)?;
        if spin_axes.ncols() < 3 {
            return Err(DynamicsError::TooFewWheels(spin_axes.ncols()));
        }
        for (i, c) in spin_axes.column_iter().enumerate() {
            let n = c.norm();
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(DynamicsError::SpinAxisNotUnit(i, n));
            }
        }
        if !(wheel_inertia > 0.0) {
            return Err(DynamicsError::NonPositive("wheel_inertia"));
        }
        if !(max_wheel_speed > 0.0) {
            return Err(DynamicsError::NonPositive("max_wheel_speed"));
        }
        Ok(Self { inertia, inertia_inv: chol.inverse(), mass, spin_axes, wheel_inertia, max_wheel_speed })
    }

    pub fn inertia_inv(&self) -> &Mat3 {
        &self.inertia_inv
    }

    pub fn wheel_count(&self) -> usize {
        self.spin_axes.ncols()
    }

    /// Body-frame angular momentum `Jω + J_RW·G·Ω`.
    pub fn body_momentum(&self, omega: &Vec3, wheel_speeds: &DVector<f64>) -> Vec3 {
        self.inertia * omega + self.wheel_inertia * (&self.spin_axes * wheel_speeds)
    }
}

/// The four-wheel pyramid with exact `1/√3` entries.
pub fn default_spin_axes() -> Matrix3xX<f64> {
    let k = 1.0 / 3f64.sqrt();
    let s = defaults::SPIN_AXIS_SIGNS;
    Matrix3xX::from_fn(4, |r, c| k * s[r][c])
}

impl Default for SpacecraftParams {
    fn default() -> Self {
        let d = defaults::INERTIA_DIAG;
        Self::new(
            Mat3::from_diagonal(&Vec3::new(d[0], d[1], d[2])),
            defaults::MASS,
            default_spin_axes(),
            defaults::WHEEL_INERTIA,
            defaults::MAX_WHEEL_SPEED,
        )
        .expect("default spacecraft parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyState {
    pub t: f64,
    pub sigma: Mrp,
    pub omega: Vec3,
    pub wheel_speeds: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub sigma_dot: Vec3,
    pub omega_dot: Vec3,
    pub wheel_accel: DVector<f64>,
}

/// Inputs held constant over one integration step.
#[derive(Debug, Clone)]
pub struct WheelInputs {
    /// Torque each wheel applies to the body, `u = −J_RW·Ω̇` (N·m).
    pub torque: DVector<f64>,
    /// True health factors `Φ`, each in `[0, 1]`.
    pub health: DVector<f64>,
}

impl WheelInputs {
    pub fn healthy(torque: DVector<f64>) -> Self {
        let n = torque.len();
        Self { torque, health: DVector::from_element(n, 1.0) }
    }
}

/// `Jω̇ = −ω×(Jω + J_RW·G·Ω) + G·Φ·u`, `σ̇ = ¼B(σ)ω`, `Ω̇ = −Φu/J_RW`.
pub fn eom_derivative(s: &BodyState, inputs: &WheelInputs, p: &SpacecraftParams) -> StateDerivative {
    let applied = inputs.torque.component_mul(&inputs.health);
    let h = p.body_momentum(&s.omega, &s.wheel_speeds);
    let omega_dot = p.inertia_inv() * (-s.omega.cross(&h) + &p.spin_axes * &applied);
    StateDerivative { sigma_dot: mrp_rate(&s.sigma, &s.omega), omega_dot, wheel_accel: -applied / p.wheel_inertia }
}

fn offset(s: &BodyState, d: &StateDerivative, h: f64) -> BodyState {
    BodyState {
        t: s.t + h,
        sigma: Mrp(s.sigma.0 + h * d.sigma_dot),
        omega: s.omega + h * d.omega_dot,
        wheel_speeds: &s.wheel_speeds + h * &d.wheel_accel,
    }
}

/// One classical RK4 step with zero-order-hold inputs, followed by shadow-set
/// switching and wheel-speed clamping.
pub fn rk4_step(s: &BodyState, inputs: &WheelInputs, h: f64, p: &SpacecraftParams) -> Result<BodyState, DynamicsError> {
    debug_assert!(h > 0.0);
    let k1 = eom_derivative(s, inputs, p);
    let k2 = eom_derivative(&offset(s, &k1, 0.5 * h), inputs, p);
    let k3 = eom_derivative(&offset(s, &k2, 0.5 * h), inputs, p);
    let k4 = eom_derivative(&offset(s, &k3, h), inputs, p);
    let w = h / 6.0;
    let sigma = s.sigma.0 + w * (k1.sigma_dot + 2.0 * k2.sigma_dot + 2.0 * k3.sigma_dot + k4.sigma_dot);
    let omega = s.omega + w * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot);
    let wheel_accel = k1.wheel_accel + 2.0 * k2.wheel_accel + 2.0 * k3.wheel_accel + k4.wheel_accel;
    let lim = p.max_wheel_speed;
    let wheel_speeds = (&s.wheel_speeds + w * wheel_accel).map(|x| x.clamp(-lim, lim));
    let next = BodyState { t: s.t + h, sigma: mrp_shadow(Mrp(sigma)), omega, wheel_speeds };
    let finite = next.sigma.0.iter().chain(next.omega.iter()).chain(next.wheel_speeds.iter()).all(|x| x.is_finite());
    if !finite {
        return Err(DynamicsError::NonFinite(next.t));
    }
    Ok(next)
}

/// Inertial angular momentum `R(σ)ᵀ(Jω + J_RW·G·Ω)`.
pub fn total_angular_momentum(s: &BodyState, p: &SpacecraftParams) -> Vec3 {
    s.sigma.dcm().transpose() * p.body_momentum(&s.omega, &s.wheel_speeds)
}

pub fn kinetic_energy(s: &BodyState, p: &SpacecraftParams) -> f64 {
    0.5 * s.omega.dot(&(p.inertia * s.omega))
}

/// Circular reference orbit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitModel {
    /// Orbital rate `n` (rad/s).
    pub rate: f64,
    /// Argument of latitude at t = 0 (rad).
    pub initial_phase: f64,
    /// Orbit normal, inertial frame (normalized on use).
    pub normal: [f64; 3],
}

impl Default for OrbitModel {
    fn default() -> Self {
        let i = defaults::ORBIT_INCLINATION;
        Self { rate: defaults::ORBIT_RATE, initial_phase: defaults::ORBIT_INITIAL_PHASE, normal: [0.0, -i.sin(), i.cos()] }
    }
}

impl OrbitModel {
    pub fn normal_unit(&self) -> Vec3 {
        Vec3::from(self.normal).normalize()
    }

    /// In-plane basis `(p̂, q̂)` with `p̂` along the ascending node when defined.
    fn plane_basis(&self) -> (Vec3, Vec3) {
        let h = self.normal_unit();
        let node = Vec3::z().cross(&h);
        let p = if node.norm() > UNIT_TOL { node.normalize() } else { Vec3::x() };
        (p, h.cross(&p))
    }

    /// Unit position vector (inertial) at time `t`.
    pub fn position_unit(&self, t: f64) -> Vec3 {
        let (p, q) = self.plane_basis();
        let u = self.initial_phase + self.rate * t;
        u.cos() * p + u.sin() * q
    }

    /// Nadir-pointing frame `[DN]`: x along velocity, y along −orbit normal, z toward nadir.
    pub fn nadir_dcm(&self, t: f64) -> Mat3 {
        let h = self.normal_unit();
        let r = self.position_unit(t);
        let z = -r;
        let y = -h;
        let x = y.cross(&z);
        Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
    }

    /// Rate of the nadir frame relative to inertial, in nadir-frame components.
    pub fn nadir_rate(&self) -> Vec3 {
        Vec3::new(0.0, -self.rate, 0.0)
    }
}

/// Alternating identity / nadir-pointing schedule.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceTimeline {
    pub duration: f64,
    pub switch_period: f64,
    pub nadir_hold_after: f64,
}

impl Default for GuidanceTimeline {
    fn default() -> Self {
        Self { duration: defaults::SCENARIO_DURATION, switch_period: defaults::SWITCH_PERIOD, nadir_hold_after: defaults::NADIR_HOLD_AFTER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Inertial,
    Nadir,
}

impl GuidanceTimeline {
    pub fn target(&self, t: f64) -> Target {
        if t >= self.nadir_hold_after {
            return Target::Nadir;
        }
        if ((t / self.switch_period).floor() as i64) % 2 == 0 {
            Target::Inertial
        } else {
            Target::Nadir
        }
    }

    /// Hold phases as `[start, end)` intervals covering `[0, duration]`.
    pub fn phases(&self) -> Vec<(f64, f64, Target)> {
        let mut edges = vec![0.0];
        let mut t = self.switch_period;
        while t < self.nadir_hold_after.min(self.duration) {
            edges.push(t);
            t += self.switch_period;
        }
        if self.nadir_hold_after < self.duration && self.target(self.nadir_hold_after - EDGE_EPS) != Target::Nadir {
            edges.push(self.nadir_hold_after);
        }
        edges.push(self.duration);
        edges.windows(2).map(|w| (w[0], w[1], self.target(w[0]))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceSample {
    pub sigma_d: Mrp,
    /// Desired rate, desired-frame components (rad/s).
    pub omega_d: Vec3,
    pub omega_dot_d: Vec3,
}

pub fn guidance(t: f64, timeline: &GuidanceTimeline, orbit: &OrbitModel) -> GuidanceSample {
    match timeline.target(t) {
        Target::Inertial => GuidanceSample { sigma_d: Mrp::zero(), omega_d: Vec3::zeros(), omega_dot_d: Vec3::zeros() },
        Target::Nadir => GuidanceSample { sigma_d: Mrp::from_dcm(&orbit.nadir_dcm(t)), omega_d: orbit.nadir_rate(), omega_dot_d: Vec3::zeros() },
    }
}
