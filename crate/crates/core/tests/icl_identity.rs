//! The integral regressor relation holds on noise-free trajectories generated
//! with known health factors, up to trapezoidal quadrature error.

use nalgebra::{DVector, Vector3};
use rwhil_core::att::Mrp;
use rwhil_core::control::{IclConfig, IclHistory, IclRecord, IclSample};
use rwhil_core::dynamics::{eom_derivative, BodyState, SpacecraftParams, StateDerivative, WheelInputs};

/// Truth integration step; much finer than any sampling step under test.
const TRUTH_STEP: f64 = 1e-3;
const WINDOW: f64 = 10.0;

fn theta() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 1.0, 0.5, 1.0])
}

/// Smooth wheel torques on the body.
fn input(t: f64) -> DVector<f64> {
    DVector::from_vec(vec![4e-3 * (0.31 * t).sin(), -3e-3 * (0.47 * t + 0.4).cos(), 5e-3 * (0.23 * t + 1.1).sin(), 2e-3 * (0.53 * t).cos() + 1e-3])
}

fn axpy(s: &BodyState, d: &StateDerivative, h: f64) -> BodyState {
    BodyState {
        t: s.t + h,
        sigma: Mrp(s.sigma.0 + h * d.sigma_dot),
        omega: s.omega + h * d.omega_dot,
        wheel_speeds: &s.wheel_speeds + h * &d.wheel_accel,
    }
}

/// Classical RK4 with the input evaluated at each stage time.
fn step(s: &BodyState, h: f64, p: &SpacecraftParams) -> BodyState {
    let f = |x: &BodyState| eom_derivative(x, &WheelInputs { torque: input(x.t), health: theta() }, p);
    let k1 = f(s);
    let k2 = f(&axpy(s, &k1, 0.5 * h));
    let k3 = f(&axpy(s, &k2, 0.5 * h));
    let k4 = f(&axpy(s, &k3, h));
    BodyState {
        t: s.t + h,
        sigma: Mrp(s.sigma.0 + h / 6.0 * (k1.sigma_dot + 2.0 * k2.sigma_dot + 2.0 * k3.sigma_dot + k4.sigma_dot)),
        omega: s.omega + h / 6.0 * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot),
        wheel_speeds: &s.wheel_speeds + h / 6.0 * (k1.wheel_accel + 2.0 * k2.wheel_accel + 2.0 * k3.wheel_accel + k4.wheel_accel),
    }
}

/// Samples of the truth trajectory every `stride` truth steps over `[0, duration]`.
fn trajectory(stride: usize, duration: f64, p: &SpacecraftParams) -> Vec<IclSample> {
    let mut s = BodyState {
        t: 0.0,
        sigma: Mrp(Vector3::new(0.1, -0.05, 0.2)),
        omega: Vector3::new(0.02, -0.01, 0.015),
        wheel_speeds: DVector::from_vec(vec![100.0, -100.0, -100.0, 100.0]),
    };
    let steps = (duration / TRUTH_STEP).round() as usize;
    let mut out = Vec::new();
    for k in 0..=steps {
        if k % stride == 0 {
            out.push(IclSample { t: s.t, omega: s.omega, wheel_speeds: s.wheel_speeds.clone(), u: input(s.t) });
        }
        if k < steps {
            s = step(&s, TRUTH_STEP, p);
        }
    }
    out
}

fn window_residual(stride: usize, p: &SpacecraftParams) -> f64 {
    let samples = trajectory(stride, WINDOW, p);
    IclRecord::from_window(&samples, p).unwrap().residual(&theta()).norm()
}

#[test]
fn residual_at_true_health_is_quadrature_small() {
    let p = SpacecraftParams::default();
    let r10 = window_residual(10, &p);
    let r5 = window_residual(5, &p);
    assert!(r10 < 1e-6, "residual at 10 ms sampling: {r10:e}");
    assert!(r10 / r5 >= 3.5, "halving the step reduced the residual only {:.2}x ({r10:e} -> {r5:e})", r10 / r5);
}

#[test]
fn residual_is_not_small_at_wrong_health() {
    let p = SpacecraftParams::default();
    let samples = trajectory(10, WINDOW, &p);
    let rec = IclRecord::from_window(&samples, &p).unwrap();
    let wrong = DVector::from_element(4, 1.0);
    assert!(rec.residual(&wrong).norm() > 1e3 * rec.residual(&theta()).norm());
}

#[test]
fn icl_term_vanishes_at_true_health() {
    let p = SpacecraftParams::default();
    let samples = trajectory(10, 120.0, &p);
    let per_window = (WINDOW / 0.01).round() as usize;
    let mut hist = IclHistory::new(4, &IclConfig::default());
    for start in (0..samples.len() - per_window).step_by(per_window / 2) {
        let rec = IclRecord::from_window(&samples[start..=start + per_window], &p).unwrap();
        hist.consider(rec);
    }
    assert!(hist.len() >= 4 && hist.lambda() > 0.0, "{} records, lambda {:e}", hist.len(), hist.lambda());
    let term = hist.icl_sum(&theta()).norm();
    assert!(term < 1e-6, "ICL term at true health {term:e}");
    assert!(hist.icl_sum(&DVector::from_element(4, 1.0)).norm() > 1e3 * term);
}
