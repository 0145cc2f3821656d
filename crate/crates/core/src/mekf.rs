//! Multiplicative quaternion EKF with a six-element error state
//! (small-angle attitude error, gyro bias).

use nalgebra::{Matrix3x6, Matrix6, Matrix6x3, SMatrix, Vector6};

use crate::att::{mrp_from_quat, mrp_shadow, skew, Mat3, Mrp, Quaternion, Vec3};
use crate::defaults;
use crate::sensors::{SensorKind, SensorSample, SensorSuiteParams};

/// Below this rate the transition matrix uses its Taylor limit.
const SMALL_RATE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EkfParams {
    /// rad/s^½
    pub gyro_arw: f64,
    /// rad/s^{3/2}
    pub gyro_bias_rw: f64,
    /// Per-axis measurement std of a unit-vector sample (rad).
    pub vector_std: f64,
    pub mag_reference: Vec3,
    pub sun_reference: Vec3,
    /// Squared Mahalanobis distance above which a vector update is rejected.
    pub gate: f64,
}

impl EkfParams {
    pub fn from_sensors(s: &SensorSuiteParams, gate: f64) -> Self {
        Self {
            gyro_arw: s.gyro_arw,
            gyro_bias_rw: s.gyro_bias_rw,
            vector_std: s.vector_axis_std(),
            mag_reference: s.mag_ref(),
            sun_reference: s.sun_ref(),
            gate,
        }
    }
}

impl Default for EkfParams {
    fn default() -> Self {
        Self::from_sensors(&SensorSuiteParams::default(), defaults::EKF_GATE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub q: Quaternion,
    pub bias: Vec3,
    pub cov: Matrix6<f64>,
}

impl EkfState {
    pub fn new(q: Quaternion, bias: Vec3, attitude_std: f64, bias_std: f64) -> Self {
        let mut cov = Matrix6::zeros();
        for i in 0..3 {
            cov[(i, i)] = attitude_std * attitude_std;
            cov[(i + 3, i + 3)] = bias_std * bias_std;
        }
        Self { q, bias, cov }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    Applied {
        correction: f64,
    },
    /// Innovation failed the gate; state untouched.
    Rejected {
        distance2: f64,
    },
    /// Gyro samples are consumed by `mekf_predict`, not here.
    Ignored,
}

fn symmetrize(p: &Matrix6<f64>) -> Matrix6<f64> {
    0.5 * (p + p.transpose())
}

/// Propagates the estimate over `dt` with the bias-corrected gyro rate held constant.
pub fn mekf_predict(ekf: &EkfState, gyro: &Vec3, dt: f64, p: &EkfParams) -> EkfState {
    debug_assert!(dt > 0.0);
    let w = gyro - ekf.bias;
    let wn = w.norm();
    let q = Quaternion::from_rotation_vector(&(w * dt)).compose(&ekf.q);

    let wx = skew(&w);
    let wx2 = wx * wx;
    let i3 = Mat3::identity();
    let (phi11, phi12) = if wn < SMALL_RATE {
        (i3 - wx * dt, -i3 * dt + 0.5 * wx * dt * dt)
    } else {
        let (s, c) = (wn * dt).sin_cos();
        (i3 - wx * (s / wn) + wx2 * ((1.0 - c) / (wn * wn)), wx * ((1.0 - c) / (wn * wn)) - i3 * dt - wx2 * ((wn * dt - s) / (wn * wn * wn)))
    };
    let mut phi = Matrix6::identity();
    phi.fixed_view_mut::<3, 3>(0, 0).copy_from(&phi11);
    phi.fixed_view_mut::<3, 3>(0, 3).copy_from(&phi12);

    let sv2 = p.gyro_arw * p.gyro_arw;
    let su2 = p.gyro_bias_rw * p.gyro_bias_rw;
    let mut qd = Matrix6::zeros();
    qd.fixed_view_mut::<3, 3>(0, 0).copy_from(&(i3 * (sv2 * dt + su2 * dt.powi(3) / 3.0)));
    qd.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-i3 * (0.5 * su2 * dt * dt)));
    qd.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-i3 * (0.5 * su2 * dt * dt)));
    qd.fixed_view_mut::<3, 3>(3, 3).copy_from(&(i3 * (su2 * dt)));

    let cov = symmetrize(&(phi * ekf.cov * phi.transpose() + qd));
    EkfState { q, bias: ekf.bias, cov }
}

/// Folds one vector-sensor sample into the estimate.
pub fn mekf_update(ekf: &EkfState, s: &SensorSample, p: &EkfParams) -> (EkfState, UpdateOutcome) {
    let r = match s.kind {
        SensorKind::Mag => p.mag_reference,
        SensorKind::Sun => p.sun_reference,
        SensorKind::Gyro => return (ekf.clone(), UpdateOutcome::Ignored),
    };
    let predicted = ekf.q.dcm() * r;
    let mut h = Matrix3x6::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&predicted));
    let rm = Mat3::identity() * (p.vector_std * p.vector_std);
    let innov = s.value - predicted;
    let sm = h * ekf.cov * h.transpose() + rm;
    let Some(s_inv) = sm.try_inverse() else {
        return (ekf.clone(), UpdateOutcome::Rejected { distance2: f64::INFINITY });
    };
    let d2 = innov.dot(&(s_inv * innov));
    if d2 > p.gate {
        return (ekf.clone(), UpdateOutcome::Rejected { distance2: d2 });
    }
    let k: Matrix6x3<f64> = ekf.cov * h.transpose() * s_inv;
    let dx: Vector6<f64> = k * innov;
    let da = Vec3::new(dx[0], dx[1], dx[2]);
    let db = Vec3::new(dx[3], dx[4], dx[5]);
    let dq = Quaternion::new(1.0, 0.5 * da);
    let ikh: SMatrix<f64, 6, 6> = Matrix6::identity() - k * h;
    let cov = symmetrize(&(ikh * ekf.cov * ikh.transpose() + k * rm * k.transpose()));
    (EkfState { q: dq.compose(&ekf.q), bias: ekf.bias + db, cov }, UpdateOutcome::Applied { correction: dx.norm() })
}

/// Estimated MRP attitude (shadow-enforced) and bias-corrected body rate.
pub fn estimated_outputs(ekf: &EkfState, gyro: &Vec3) -> (Mrp, Vec3) {
    (mrp_shadow(mrp_from_quat(&ekf.q)), gyro - ekf.bias)
}
