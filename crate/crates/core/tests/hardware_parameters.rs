//! Default tables carry the hardware-in-the-loop configuration.

use nalgebra::DMatrix;
use rwhil_core::control::{ControlGains, IclConfig};
use rwhil_core::dynamics::{GuidanceTimeline, SpacecraftParams};
use rwhil_core::sensors::SensorSuiteParams;
use rwhil_core::wheel::{deadband_offset_compensation, torque_from_current, WheelParams};
use rwhil_core::{defaults, Mat3};

#[test]
fn spacecraft() {
    let p = SpacecraftParams::default();
    assert_eq!(p.mass, 20.0);
    assert_eq!([p.inertia[(0, 0)], p.inertia[(1, 1)], p.inertia[(2, 2)]], [0.30, 0.42, 0.42]);
    assert_eq!(p.inertia, Mat3::from_diagonal(&p.inertia.diagonal()));
    let rounded = [[0.5774, -0.5774, 0.5774, -0.5774], [0.5774, 0.5774, -0.5774, -0.5774], [0.5774, 0.5774, 0.5774, 0.5774]];
    for (r, row) in rounded.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert!((p.spin_axes[(r, c)] - v).abs() < 1e-4, "G[{r}][{c}]");
        }
    }
    assert_eq!(p.max_wheel_speed, 366.0);
    assert_eq!(defaults::INITIAL_WHEEL_SPEEDS, [100.0, -100.0, -100.0, 100.0]);
}

#[test]
fn wheels() {
    let w = WheelParams::default();
    assert_eq!(w.max_torque, 50e-3);
    assert_eq!(w.max_speed, 366.0);
    assert_eq!(w.deadband_current, 0.3);
    assert_eq!(torque_from_current(0.2, &w), 0.0);
    assert!((deadband_offset_compensation(0.01, &w) - 0.31).abs() < 1e-15);
}

#[test]
fn controller_gains() {
    let g = ControlGains::hil_defaults(4);
    assert_eq!(g.beta, 5e-3);
    assert_eq!(g.lambda_bar, 1e-7);
    assert_eq!(g.alpha, Mat3::identity() * 3e-2);
    assert_eq!(g.k, Mat3::identity() * 1e-2);
    assert_eq!(g.gamma, DMatrix::identity(4, 4) * 100.0);
    assert_eq!(g.k_icl, DMatrix::identity(4, 4) * 1.0);
    assert_eq!(g.theta_max, 1.0);
    assert_eq!(IclConfig::default().capacity, 20);
}

#[test]
fn rates_and_timeline() {
    let s = SensorSuiteParams::default();
    assert_eq!((s.gyro_rate_hz, s.mag_rate_hz, s.sun_rate_hz), (10.0, 2.0, 2.0));
    assert_eq!(defaults::TELEMETRY_PERIOD, 1.0 / 20.0);
    assert_eq!(defaults::CONTROL_PERIOD, 0.1);
    let g = GuidanceTimeline::default();
    assert_eq!(g.duration, 4000.0);
    assert_eq!(g.switch_period, 12.0 * 60.0);
    assert_eq!(g.nadir_hold_after, 2000.0);
}
