//! Adaptive attitude controller with reaction-wheel health estimation.
//!
//! The pieces, in the order a control tick uses them:
//!
//! * [`compute_aux_control`]: the auxiliary body torque `u_d` built on the
//!   modified error `r = σ̇_e + α·σ_e`;
//! * [`allocate`]: `u = (G·diag(θ̂))†·u_d`;
//! * [`IclHistory`]: stored integrals of the rotational dynamics over a sliding
//!   window, admitted only when they raise the excitation level `λ`;
//! * [`adaptation_step`]: forward-Euler step of the projected health update;
//! * command conversion to driver current or speed, and the artificial
//!   command-scaling fault used to degrade a wheel.
//!
//! Sign convention: `u_i` is the torque wheel `i` exerts on the body. The
//! driver sees the reaction, `τ_cmd,i = −u_i` (see [`wheel_torque_command`]).

use nalgebra::{Cholesky, DMatrix, DVector, Matrix3xX, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::att::{attitude_error, mrp_kinematics_matrix, mrp_kinematics_matrix_inverse, mrp_kinematics_matrix_rate, skew, Mat3, Mrp, Vec3};
use crate::defaults;
use crate::dynamics::{GuidanceSample, SpacecraftParams};
use crate::wheel::{FaultSchedule, WheelParams};

/// Smallest eigenvalue of `G·Θ̂²·Gᵀ` relative to its largest before allocation is refused.
const ALLOCATION_RCOND: f64 = 1e-12;

/// Relative asymmetry tolerated in gain matrices.
const SYMMETRY_TOL: f64 = 1e-12;

/// Relative size of `λ` below which the Gram sum counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("G·diag(θ̂) is rank deficient; cannot allocate")]
    AllocationFailure,
    #[error("gain `{0}` must be symmetric positive definite")]
    NotSpd(&'static str),
    #[error("gain `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("projection bounds must satisfy 0 ≤ θ_min < θ_max ≤ 1, got [{0}, {1}]")]
    BadBounds(f64, f64),
    #[error("gain `{0}` has dimension {1}, expected {2}")]
    Dimension(&'static str, usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlGains {
    pub alpha: Mat3,
    pub beta: f64,
    pub k: Mat3,
    pub gamma: DMatrix<f64>,
    pub k_icl: DMatrix<f64>,
    pub lambda_bar: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl ControlGains {
    pub fn hil_defaults(wheels: usize) -> Self {
        Self {
            alpha: Mat3::identity() * defaults::GAIN_ALPHA,
            beta: defaults::GAIN_BETA,
            k: Mat3::identity() * defaults::GAIN_K,
            gamma: DMatrix::identity(wheels, wheels) * defaults::GAIN_GAMMA,
            k_icl: DMatrix::identity(wheels, wheels) * defaults::GAIN_K_ICL,
            lambda_bar: defaults::LAMBDA_BAR,
            theta_min: defaults::THETA_MIN,
            theta_max: defaults::THETA_MAX,
        }
    }

    pub fn validate(&self, wheels: usize) -> Result<(), ControlError> {
        fn spd(m: &DMatrix<f64>, name: &'static str) -> Result<(), ControlError> {
            let sym = (m - m.transpose()).abs().max() <= SYMMETRY_TOL * m.abs().max();
            if !sym || Cholesky::new(m.clone()).is_none() {
                return Err(ControlError::NotSpd(name));
            }
            Ok(())
        }
        spd(&DMatrix::from_iterator(3, 3, self.alpha.iter().copied()), "alpha")?;
        spd(&DMatrix::from_iterator(3, 3, self.k.iter().copied()), "k")?;
        for (name, m) in [("gamma", &self.gamma), ("k_icl", &self.k_icl)] {
            if m.nrows() != wheels || m.ncols() != wheels {
                return Err(ControlError::Dimension(name, m.nrows(), wheels));
            }
            spd(m, name)?;
        }
        if !(self.beta > 0.0) {
            return Err(ControlError::NonPositive("beta"));
        }
        if !(self.lambda_bar > 0.0) {
            return Err(ControlError::NonPositive("lambda_bar"));
        }
        if !(0.0 <= self.theta_min && self.theta_min < self.theta_max && self.theta_max <= 1.0) {
            return Err(ControlError::BadBounds(self.theta_min, self.theta_max));
        }
        Ok(())
    }
}

/// Auxiliary control and the error quantities the adaptation reuses.
#[derive(Debug, Clone)]
pub struct AuxControl {
    pub u_d: Vec3,
    pub sigma_e: Mrp,
    pub omega_err: Vec3,
    pub r: Vec3,
    /// `B(σ_e)`
    pub b: Mat3,
}

/// `u_d = ω×(Jω + J_RW·G·Ω) + J·R̃·ω̇_d − J·[ω̃×]·R̃·ω_d
///        + 4J·B⁻¹·[−¼Ḃω̃ − α·σ̇_e − K·r − β·σ_e]`
pub fn compute_aux_control(
    sigma: &Mrp,
    omega: &Vec3,
    guidance: &GuidanceSample,
    wheel_speeds: &DVector<f64>,
    p: &SpacecraftParams,
    g: &ControlGains,
) -> AuxControl {
    let err = attitude_error(sigma, &guidance.sigma_d, omega, &guidance.omega_d);
    let (se, we, rt) = (err.sigma_e, err.omega_err, err.r_tilde);
    let b = mrp_kinematics_matrix(&se);
    let se_dot = 0.25 * b * we;
    let b_dot = mrp_kinematics_matrix_rate(&se, &se_dot);
    let r = se_dot + g.alpha * se.0;
    let j = p.inertia;
    let inner = -0.25 * b_dot * we - g.alpha * se_dot - g.k * r - g.beta * se.0;
    let u_d = omega.cross(&p.body_momentum(omega, wheel_speeds)) + j * rt * guidance.omega_dot_d - j * skew(&we) * rt * guidance.omega_d
        + 4.0 * j * mrp_kinematics_matrix_inverse(&se) * inner;
    AuxControl { u_d, sigma_e: se, omega_err: we, r, b }
}

/// Minimum-norm wheel torques with `G·diag(θ̂)·u = u_d`.
pub fn allocate(u_d: &Vec3, theta: &DVector<f64>, g: &Matrix3xX<f64>) -> Result<DVector<f64>, ControlError> {
    let m = g * DMatrix::from_diagonal(theta);
    let mmt: Mat3 = &m * m.transpose();
    let eig = SymmetricEigen::new(mmt).eigenvalues;
    if !(eig.min() > ALLOCATION_RCOND * eig.max().max(0.0)) {
        return Err(ControlError::AllocationFailure);
    }
    let chol = Cholesky::new(mmt).ok_or(ControlError::AllocationFailure)?;
    Ok(m.transpose() * chol.solve(u_d))
}

/// One input/output record for the integral regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct IclSample {
    pub t: f64,
    pub omega: Vec3,
    pub wheel_speeds: DVector<f64>,
    /// Wheel torque on the body (controller's allocation, before any fault scaling).
    pub u: DVector<f64>,
}

/// Integrals over `[t_i − Δt, t_i]` of the rotational dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct IclRecord {
    pub t: f64,
    /// `𝒰_i = ∫ ω×(Jω + J_RW·G·Ω) dτ`
    pub u_int: Vec3,
    /// `𝒴_i = ∫ G·diag(u) dτ` (3×N)
    pub y_int: Matrix3xX<f64>,
    /// `Jω(t_i) − Jω(t_i − Δt)`
    pub momentum_delta: Vec3,
}

impl IclRecord {
    /// Trapezoidal quadrature over consecutive samples. Repeated timestamps are
    /// allowed and contribute nothing, which lets a caller describe a
    /// zero-order-hold input by listing the value on both sides of each jump.
    pub fn from_window(samples: &[IclSample], p: &SpacecraftParams) -> Option<IclRecord> {
        let (first, last) = (samples.first()?, samples.last()?);
        if samples.len() < 2 || last.t <= first.t {
            return None;
        }
        let n = p.wheel_count();
        let gyro = |s: &IclSample| s.omega.cross(&p.body_momentum(&s.omega, &s.wheel_speeds));
        let mut u_int = Vec3::zeros();
        let mut u_sum = DVector::zeros(n);
        for w in samples.windows(2) {
            let h = w[1].t - w[0].t;
            if h == 0.0 {
                continue;
            }
            u_int += 0.5 * h * (gyro(&w[0]) + gyro(&w[1]));
            u_sum += 0.5 * h * (&w[0].u + &w[1].u);
        }
        let y_int = &p.spin_axes * DMatrix::from_diagonal(&u_sum);
        Some(IclRecord {
            t: last.t,
            u_int,
            y_int: Matrix3xX::from_iterator(n, y_int.iter().copied()),
            momentum_delta: p.inertia * (last.omega - first.omega),
        })
    }

    /// `Jω(t) − Jω(t−Δt) + 𝒰 − 𝒴·θ`
    pub fn residual(&self, theta: &DVector<f64>) -> Vec3 {
        self.momentum_delta + self.u_int - &self.y_int * theta
    }

    fn gram(&self) -> DMatrix<f64> {
        let y = DMatrix::from_iterator(3, self.y_int.ncols(), self.y_int.iter().copied());
        y.transpose() * y
    }

    fn target(&self) -> DVector<f64> {
        let y = DMatrix::from_iterator(3, self.y_int.ncols(), self.y_int.iter().copied());
        y.transpose() * DVector::from_column_slice((self.momentum_delta + self.u_int).as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IclConfig {
    /// Stack capacity `N_s`.
    pub capacity: usize,
    /// Window length `Δt` (s).
    pub window: f64,
    /// Spacing between candidate records (s).
    pub record_interval: f64,
    /// A record is admitted when it raises `λ` by at least this fraction.
    pub admission_gain: f64,
}

impl Default for IclConfig {
    fn default() -> Self {
        Self {
            capacity: defaults::ICL_CAPACITY,
            window: defaults::ICL_WINDOW,
            record_interval: defaults::ICL_RECORD_INTERVAL,
            admission_gain: defaults::ICL_ADMISSION_GAIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Added,
    Replaced(usize),
    Rejected,
}

/// Bounded stack of integral records with the excitation level
/// `λ = λ_min(Σ 𝒴ᵢᵀ𝒴ᵢ)`.
#[derive(Debug, Clone)]
pub struct IclHistory {
    records: Vec<IclRecord>,
    capacity: usize,
    admission_gain: f64,
    gram: DMatrix<f64>,
    target: DVector<f64>,
    lambda: f64,
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min().max(0.0)
}

impl IclHistory {
    pub fn new(wheels: usize, cfg: &IclConfig) -> Self {
        Self {
            records: Vec::with_capacity(cfg.capacity),
            capacity: cfg.capacity,
            admission_gain: cfg.admission_gain,
            gram: DMatrix::zeros(wheels, wheels),
            target: DVector::zeros(wheels),
            lambda: 0.0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn records(&self) -> &[IclRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `Σ 𝒴ᵢᵀ(Jω(tᵢ) − Jω(tᵢ−Δt) + 𝒰ᵢ − 𝒴ᵢθ)`
    pub fn icl_sum(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.target - &self.gram * theta
    }

    /// Gram sum is still rank deficient.
    fn unexcited(&self) -> bool {
        let scale = self.gram.trace().max(f64::MIN_POSITIVE);
        self.lambda <= RANK_TOL * scale
    }

    /// Admission rule. While the Gram sum is rank deficient (`λ = 0`) any
    /// record with a non-zero regressor fills a free slot; afterwards a record
    /// must raise `λ` by at least `admission_gain`, either in a free slot or by
    /// replacing the stored record whose removal helps most.
    pub fn consider(&mut self, rec: IclRecord) -> Admission {
        if rec.y_int.iter().all(|x| *x == 0.0) {
            return Admission::Rejected;
        }
        let rg = rec.gram();
        let threshold = self.lambda * (1.0 + self.admission_gain);
        if self.records.len() < self.capacity {
            let cand = &self.gram + &rg;
            let lam = min_eig(&cand);
            if self.unexcited() || (lam >= threshold && lam > self.lambda) {
                self.target += rec.target();
                self.gram = cand;
                self.lambda = lam.max(self.lambda);
                self.records.push(rec);
                return Admission::Added;
            }
            return Admission::Rejected;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, old) in self.records.iter().enumerate() {
            let lam = min_eig(&(&self.gram - old.gram() + &rg));
            if best.is_none_or(|(_, b)| lam > b) {
                best = Some((i, lam));
            }
        }
        match best {
            Some((i, lam)) if lam >= threshold && lam > self.lambda => {
                self.records[i] = rec;
                self.rebuild();
                self.lambda = self.lambda.max(lam.min(min_eig(&self.gram)));
                Admission::Replaced(i)
            }
            _ => Admission::Rejected,
        }
    }

    fn rebuild(&mut self) {
        let n = self.gram.nrows();
        self.gram = DMatrix::zeros(n, n);
        self.target = DVector::zeros(n);
        for r in &self.records {
            self.gram += r.gram();
            self.target += r.target();
        }
    }
}

/// Forward-Euler step of the projected health update
/// `θ̂̇ = proj{¼Γ·Yᵀ·J⁻ᵀ·Bᵀ·r + Γ·K₁·Σ𝒴ᵢᵀ(…−𝒴ᵢθ̂)}` with `Y = G·diag(u)`.
/// The integral term is active only once `λ ≥ λ̄`.
#[allow(clippy::too_many_arguments)]
pub fn adaptation_step(
    theta: &DVector<f64>,
    r: &Vec3,
    b: &Mat3,
    p: &SpacecraftParams,
    u: &DVector<f64>,
    history: &IclHistory,
    g: &ControlGains,
    dt: f64,
) -> DVector<f64> {
    debug_assert!(dt > 0.0);
    let y = &p.spin_axes * DMatrix::from_diagonal(u);
    let drive: Vec3 = p.inertia_inv().transpose() * b.transpose() * r;
    let mut rate = 0.25 * &g.gamma * (y.transpose() * drive);
    if history.lambda() >= g.lambda_bar {
        rate += &g.gamma * &g.k_icl * history.icl_sum(theta);
    }
    project(theta, &rate, g, dt)
}

/// Clamp to `[θ_min, θ_max]`, dropping derivative components that push outward at a bound.
fn project(theta: &DVector<f64>, rate: &DVector<f64>, g: &ControlGains, dt: f64) -> DVector<f64> {
    DVector::from_iterator(
        theta.len(),
        theta.iter().zip(rate.iter()).map(|(&th, &d)| {
            let d = if (th >= g.theta_max && d > 0.0) || (th <= g.theta_min && d < 0.0) { 0.0 } else { d };
            (th + d * dt).clamp(g.theta_min, g.theta_max)
        }),
    )
}

/// Wheel-frame motor torque for a body torque `u_i`: `τ_cmd = −u_i`.
pub fn wheel_torque_command(u: f64) -> f64 {
    -u
}

/// Driver current for a wheel-frame torque: `I = τ_cmd / K_t`, clamped to the current limit.
pub fn torque_to_current_cmd(tau_cmd: f64, p: &WheelParams) -> f64 {
    (tau_cmd / p.torque_constant).clamp(-p.max_current, p.max_current)
}

/// Speed command from a wheel-frame torque: `Ω_cmd += sat(τ)/J_RW·dt`, saturated at `Ω_max`.
pub fn torque_to_velocity_cmd(tau_cmd: f64, integrator: &mut f64, p: &WheelParams, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    let accel = tau_cmd.clamp(-p.max_torque, p.max_torque) / p.inertia;
    *integrator = (*integrator + accel * dt).clamp(-p.max_speed, p.max_speed);
    *integrator
}

/// Scales each wheel's commanded effort by its scheduled factor at `t`.
/// The controller never reads these factors.
pub fn induce_command_fault(u: &DVector<f64>, schedule: &FaultSchedule, t: f64) -> DVector<f64> {
    let st = schedule.status_at(t, u.len());
    DVector::from_iterator(u.len(), u.iter().zip(st.iter()).map(|(x, s)| x * s.effective()))
}
