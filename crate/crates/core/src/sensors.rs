//! Gyro, magnetometer and sun-sensor models sampled on fixed rate boundaries.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::att::Vec3;
use crate::defaults;
use crate::dynamics::BodyState;

/// Sample-time slack when matching rate boundaries (in periods).
const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("sensor rate `{0}` must be positive")]
    BadRate(&'static str),
    #[error("reference directions are {0:.2}° apart; need more than {1:.2}°")]
    ReferencesTooClose(f64, f64),
    #[error("noise parameter `{0}` must be non-negative")]
    NegativeNoise(&'static str),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSuiteParams {
    pub gyro_rate_hz: f64,
    pub mag_rate_hz: f64,
    pub sun_rate_hz: f64,
    /// Angle random walk (rad/s^½).
    pub gyro_arw: f64,
    /// Bias random walk (rad/s^{3/2}).
    pub gyro_bias_rw: f64,
    /// True bias at t = 0 (rad/s).
    pub gyro_bias_initial: [f64; 3],
    /// Mean angular error of a vector-sensor sample (rad).
    pub vector_noise: f64,
    pub mag_reference: [f64; 3],
    pub sun_reference: [f64; 3],
}

impl Default for SensorSuiteParams {
    fn default() -> Self {
        Self {
            gyro_rate_hz: defaults::GYRO_RATE_HZ,
            mag_rate_hz: defaults::MAG_RATE_HZ,
            sun_rate_hz: defaults::SUN_RATE_HZ,
            gyro_arw: defaults::GYRO_ARW,
            gyro_bias_rw: defaults::GYRO_BIAS_RW,
            gyro_bias_initial: defaults::GYRO_BIAS_INITIAL,
            vector_noise: defaults::VECTOR_NOISE,
            mag_reference: defaults::MAG_REFERENCE,
            sun_reference: defaults::SUN_REFERENCE,
        }
    }
}

impl SensorSuiteParams {
    pub fn validate(&self) -> Result<(), SensorError> {
        for (n, r) in [("gyro_rate_hz", self.gyro_rate_hz), ("mag_rate_hz", self.mag_rate_hz), ("sun_rate_hz", self.sun_rate_hz)] {
            if !(r > 0.0) {
                return Err(SensorError::BadRate(n));
            }
        }
        for (n, v) in [("gyro_arw", self.gyro_arw), ("gyro_bias_rw", self.gyro_bias_rw), ("vector_noise", self.vector_noise)] {
            if !(v >= 0.0) {
                return Err(SensorError::NegativeNoise(n));
            }
        }
        let angle = self.mag_ref().angle(&self.sun_ref());
        let min = defaults::MIN_REFERENCE_SEPARATION;
        if angle <= min || angle >= std::f64::consts::PI - min {
            return Err(SensorError::ReferencesTooClose(angle.to_degrees(), min.to_degrees()));
        }
        Ok(())
    }

    pub fn mag_ref(&self) -> Vec3 {
        Vec3::from(self.mag_reference).normalize()
    }

    pub fn sun_ref(&self) -> Vec3 {
        Vec3::from(self.sun_reference).normalize()
    }

    /// Per-axis standard deviation of the tangent-plane perturbation that
    /// yields a mean angular error of `vector_noise` (Rayleigh mean `s·√(π/2)`).
    pub fn vector_axis_std(&self) -> f64 {
        self.vector_noise * (2.0 / std::f64::consts::PI).sqrt()
    }

    pub fn noiseless(mut self) -> Self {
        self.gyro_arw = 0.0;
        self.gyro_bias_rw = 0.0;
        self.gyro_bias_initial = [0.0; 3];
        self.vector_noise = 0.0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorKind {
    Gyro,
    Mag,
    Sun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample {
    pub t: f64,
    pub kind: SensorKind,
    pub value: Vec3,
}

/// True `t` lies on a multiple of `1/rate`.
pub fn on_rate_boundary(t: f64, rate_hz: f64) -> bool {
    let x = t * rate_hz;
    (x - x.round()).abs() < BOUNDARY_TOL
}

/// Sensor suite with its own truth bias state.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    params: SensorSuiteParams,
    bias: Vec3,
    last_gyro_t: Option<f64>,
}

impl SensorSuite {
    pub fn new(params: SensorSuiteParams) -> Self {
        let bias = Vec3::from(params.gyro_bias_initial);
        Self { params, bias, last_gyro_t: None }
    }

    pub fn params(&self) -> &SensorSuiteParams {
        &self.params
    }

    pub fn true_bias(&self) -> Vec3 {
        self.bias
    }

    /// Samples every sensor whose rate boundary falls on `t`.
    pub fn sample_sensors<R: Rng + ?Sized>(&mut self, truth: &BodyState, t: f64, rng: &mut R) -> Vec<SensorSample> {
        let p = &self.params;
        let mut out = Vec::new();
        if on_rate_boundary(t, p.gyro_rate_hz) {
            let dt = 1.0 / p.gyro_rate_hz;
            if let Some(t0) = self.last_gyro_t {
                let elapsed = (t - t0).max(0.0);
                self.bias += p.gyro_bias_rw * elapsed.sqrt() * normal3(rng);
            }
            self.last_gyro_t = Some(t);
            let noise = p.gyro_arw / dt.sqrt() * normal3(rng);
            out.push(SensorSample { t, kind: SensorKind::Gyro, value: truth.omega + self.bias + noise });
        }
        let c = truth.sigma.dcm();
        let axis_std = p.vector_axis_std();
        for (kind, rate, r) in [(SensorKind::Mag, p.mag_rate_hz, p.mag_ref()), (SensorKind::Sun, p.sun_rate_hz, p.sun_ref())] {
            if on_rate_boundary(t, rate) {
                let b = c * r;
                let value = if axis_std > 0.0 { (b + axis_std * tangent_noise(&b, rng)).normalize() } else { b };
                out.push(SensorSample { t, kind, value });
            }
        }
        out
    }
}

fn normal3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Unit-variance Gaussian perturbation orthogonal to `b`.
fn tangent_noise<R: Rng + ?Sized>(b: &Vec3, rng: &mut R) -> Vec3 {
    let n = normal3(rng);
    n - b * b.dot(&n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::att::Mrp;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn at_rest(sigma: Vec3) -> BodyState {
        BodyState { t: 0.0, sigma: Mrp(sigma), omega: Vec3::zeros(), wheel_speeds: DVector::zeros(4) }
    }

    #[test]
    fn identity_attitude_reads_references() {
        let mut s = SensorSuite::new(SensorSuiteParams::default().noiseless());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = s.sample_sensors(&at_rest(Vec3::zeros()), 0.0, &mut rng);
        let mag = out.iter().find(|x| x.kind == SensorKind::Mag).unwrap();
        assert_eq!(mag.value, s.params().mag_ref());
        let gyro = out.iter().find(|x| x.kind == SensorKind::Gyro).unwrap();
        assert_eq!(gyro.value, Vec3::zeros());
    }

    #[test]
    fn sample_counts_over_ten_seconds() {
        let mut s = SensorSuite::new(SensorSuiteParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let truth = at_rest(Vec3::new(0.1, 0.0, 0.0));
        let mut counts = [0usize; 3];
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            for x in s.sample_sensors(&truth, t, &mut rng) {
                counts[x.kind as usize] += 1;
                if x.kind != SensorKind::Gyro {
                    assert!((x.value.norm() - 1.0).abs() < 1e-9);
                }
            }
        }
        assert_eq!(counts, [100, 20, 20]);
    }

    #[test]
    fn sun_noise_mean_angle_matches_setting() {
        let p = SensorSuiteParams { vector_noise: 0.01, ..SensorSuiteParams::default() };
        let mut s = SensorSuite::new(p.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = at_rest(Vec3::new(0.2, -0.1, 0.3));
        let truth_dir = truth.sigma.dcm() * p.sun_ref();
        let mut sum = 0.0;
        let n = 10_000;
        for k in 0..n {
            let t = k as f64 * 0.5;
            let out = s.sample_sensors(&truth, t, &mut rng);
            let sun = out.iter().find(|x| x.kind == SensorKind::Sun).unwrap();
            sum += sun.value.angle(&truth_dir);
        }
        let mean = sum / n as f64;
        assert!((mean - 0.01).abs() < 0.0005, "mean angle {mean}");
    }

    #[test]
    fn parallel_references_rejected() {
        let p = SensorSuiteParams { sun_reference: [0.31, -0.5, 0.8], ..SensorSuiteParams::default() };
        assert!(matches!(p.validate(), Err(SensorError::ReferencesTooClose(..))));
        assert!(SensorSuiteParams::default().validate().is_ok());
    }
}
