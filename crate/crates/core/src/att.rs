//! Attitude representations: skew matrices, unit quaternions, Modified Rodrigues
//! Parameters and the MRP kinematics matrix.
//!
//! Frame convention: every attitude maps inertial components into body
//! components, i.e. `dcm()` returns `[BN]` with `v_B = [BN] v_N`.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Shadow-set switching surface. MRPs with norm above this are replaced by their shadow.
const SHADOW_SWITCH_NORM: f64 = 1.0;
/// Below this, `1 + q_s` is treated as zero and the negated quaternion is converted instead.
const QUAT_SINGULAR_TOL: f64 = 1e-9;

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Unit quaternion, scalar first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub s: f64,
    pub v: Vec3,
}

impl Quaternion {
    pub fn identity() -> Self {
        Self { s: 1.0, v: Vec3::zeros() }
    }

    /// Normalizes and fixes the sign so the scalar part is non-negative.
    pub fn new(s: f64, v: Vec3) -> Self {
        let n = (s * s + v.norm_squared()).sqrt();
        let (s, v) = (s / n, v / n);
        if s < 0.0 {
            Self { s: -s, v: -v }
        } else {
            Self { s, v }
        }
    }

    /// Frame rotation by `angle` (rad) about the unit `axis`.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let half = 0.5 * angle;
        Self::new(half.cos(), axis.normalize() * half.sin())
    }

    /// Rotation vector `φ·ê` to quaternion; exact for any magnitude.
    pub fn from_rotation_vector(phi: &Vec3) -> Self {
        let angle = phi.norm();
        if angle == 0.0 {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self::new(half.cos(), phi * (half.sin() / angle))
    }

    pub fn norm(&self) -> f64 {
        (self.s * self.s + self.v.norm_squared()).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self { s: self.s, v: -self.v }
    }

    /// `q.compose(&p)` is the attitude whose DCM is `dcm(q) * dcm(p)`:
    /// first `p`, then `q`.
    pub fn compose(&self, inner: &Quaternion) -> Quaternion {
        let s = self.s * inner.s - self.v.dot(&inner.v);
        let v = self.s * inner.v + inner.s * self.v - self.v.cross(&inner.v);
        Quaternion::new(s, v)
    }

    /// Direction cosine matrix `[BN]`.
    pub fn dcm(&self) -> Mat3 {
        let qv = self.v;
        (self.s * self.s - qv.norm_squared()) * Mat3::identity() + 2.0 * qv * qv.transpose() - 2.0 * self.s * skew(&qv)
    }

    /// Shepperd's method.
    pub fn from_dcm(c: &Mat3) -> Self {
        let tr = c.trace();
        let cands =
            [0.25 * (1.0 + tr), 0.25 * (1.0 + 2.0 * c[(0, 0)] - tr), 0.25 * (1.0 + 2.0 * c[(1, 1)] - tr), 0.25 * (1.0 + 2.0 * c[(2, 2)] - tr)];
        let (imax, _) = cands.iter().enumerate().fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        let (b0, b1, b2, b3);
        match imax {
            0 => {
                b0 = cands[0].sqrt();
                b1 = (c[(1, 2)] - c[(2, 1)]) / (4.0 * b0);
                b2 = (c[(2, 0)] - c[(0, 2)]) / (4.0 * b0);
                b3 = (c[(0, 1)] - c[(1, 0)]) / (4.0 * b0);
            }
            1 => {
                b1 = cands[1].sqrt();
                b0 = (c[(1, 2)] - c[(2, 1)]) / (4.0 * b1);
                b2 = (c[(0, 1)] + c[(1, 0)]) / (4.0 * b1);
                b3 = (c[(2, 0)] + c[(0, 2)]) / (4.0 * b1);
            }
            2 => {
                b2 = cands[2].sqrt();
                b0 = (c[(2, 0)] - c[(0, 2)]) / (4.0 * b2);
                b1 = (c[(0, 1)] + c[(1, 0)]) / (4.0 * b2);
                b3 = (c[(1, 2)] + c[(2, 1)]) / (4.0 * b2);
            }
            _ => {
                b3 = cands[3].sqrt();
                b0 = (c[(0, 1)] - c[(1, 0)]) / (4.0 * b3);
                b1 = (c[(2, 0)] + c[(0, 2)]) / (4.0 * b3);
                b2 = (c[(1, 2)] + c[(2, 1)]) / (4.0 * b3);
            }
        }
        Quaternion::new(b0, Vec3::new(b1, b2, b3))
    }

    /// Principal rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.v.norm().atan2(self.s.abs())
    }

    /// Time derivative for body rate `omega`; the result is not a unit quaternion.
    pub fn derivative(&self, omega: &Vec3) -> (f64, Vec3) {
        let ds = -0.5 * self.v.dot(omega);
        let dv = 0.5 * (self.s * omega + self.v.cross(omega));
        (ds, dv)
    }
}

/// Modified Rodrigues Parameters `σ = tan(Φ/4)·ê`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mrp(pub Vec3);

impl Mrp {
    pub fn zero() -> Self {
        Mrp(Vec3::zeros())
    }

    pub fn vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `[BN] = I + (8[σ×]² − 4(1−σᵀσ)[σ×]) / (1+σᵀσ)²`
    pub fn dcm(&self) -> Mat3 {
        let s2 = self.0.norm_squared();
        let sx = skew(&self.0);
        let d = (1.0 + s2) * (1.0 + s2);
        Mat3::identity() + (8.0 * sx * sx - 4.0 * (1.0 - s2) * sx) / d
    }

    /// MRP of a rotation matrix, shadow-enforced.
    pub fn from_dcm(c: &Mat3) -> Self {
        mrp_shadow(mrp_from_quat(&Quaternion::from_dcm(c)))
    }
}

pub fn mrp_from_quat(q: &Quaternion) -> Mrp {
    let (s, v) = if 1.0 + q.s > QUAT_SINGULAR_TOL { (q.s, q.v) } else { (-q.s, -q.v) };
    Mrp(v / (1.0 + s))
}

pub fn quat_from_mrp(sigma: &Mrp) -> Quaternion {
    let s2 = sigma.0.norm_squared();
    let d = 1.0 + s2;
    Quaternion::new((1.0 - s2) / d, 2.0 * sigma.0 / d)
}

/// `B(σ) = (1−σᵀσ)I₃ + 2[σ×] + 2σσᵀ`, so that `σ̇ = ¼B(σ)ω`.
pub fn mrp_kinematics_matrix(sigma: &Mrp) -> Mat3 {
    let s = sigma.0;
    (1.0 - s.norm_squared()) * Mat3::identity() + 2.0 * skew(&s) + 2.0 * s * s.transpose()
}

/// Time derivative of `B(σ)` given `σ̇`.
pub fn mrp_kinematics_matrix_rate(sigma: &Mrp, sigma_dot: &Vec3) -> Mat3 {
    let s = sigma.0;
    -2.0 * s.dot(sigma_dot) * Mat3::identity() + 2.0 * skew(sigma_dot) + 2.0 * (sigma_dot * s.transpose() + s * sigma_dot.transpose())
}

/// `B(σ)⁻¹ = B(σ)ᵀ / (1+σᵀσ)²`.
pub fn mrp_kinematics_matrix_inverse(sigma: &Mrp) -> Mat3 {
    let d = 1.0 + sigma.0.norm_squared();
    mrp_kinematics_matrix(sigma).transpose() / (d * d)
}

/// `σ̇ = ¼B(σ)ω`.
pub fn mrp_rate(sigma: &Mrp, omega: &Vec3) -> Vec3 {
    0.25 * mrp_kinematics_matrix(sigma) * omega
}

/// Swap to the shadow set `−σ/(σᵀσ)` when `|σ| > 1`.
pub fn mrp_shadow(sigma: Mrp) -> Mrp {
    let s2 = sigma.0.norm_squared();
    if s2 > SHADOW_SWITCH_NORM * SHADOW_SWITCH_NORM {
        Mrp(-sigma.0 / s2)
    } else {
        sigma
    }
}

/// Tracking error between body attitude/rate and the desired ones.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeError {
    /// MRP of `R̃`, shadow-enforced.
    pub sigma_e: Mrp,
    /// `ω − R̃ω_d`, body frame.
    pub omega_err: Vec3,
    /// `[BD] = R(σ)·R(σ_d)ᵀ`, maps desired-frame components to body.
    pub r_tilde: Mat3,
}

pub fn attitude_error(sigma: &Mrp, sigma_d: &Mrp, omega: &Vec3, omega_d: &Vec3) -> AttitudeError {
    let r_tilde = sigma.dcm() * sigma_d.dcm().transpose();
    let sigma_e = Mrp::from_dcm(&r_tilde);
    AttitudeError { sigma_e, omega_err: omega - r_tilde * omega_d, r_tilde }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cross_oracle(a: &Vec3, b: &Vec3) -> Vec3 {
        Vec3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-5.0f64..5.0).prop_map(|a| Vec3::new(a[0], a[1], a[2]))
    }

    fn unit_quat() -> impl Strategy<Value = Quaternion> {
        (prop::array::uniform4(-1.0f64..1.0))
            .prop_filter("non-degenerate", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|a| Quaternion::new(a[0], Vec3::new(a[1], a[2], a[3])))
    }

    fn same_attitude(a: &Quaternion, b: &Quaternion, tol: f64) -> bool {
        let d = (a.s - b.s).abs().max((a.v - b.v).abs().max());
        let e = (a.s + b.s).abs().max((a.v + b.v).abs().max());
        d.min(e) < tol
    }

    #[test]
    fn skew_zero_and_right_hand_rule() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
        let r = skew(&Vec3::x()) * Vec3::y();
        assert_eq!(r, Vec3::z());
    }

    #[test]
    fn quaternion_scalar_sign_fixed() {
        let q = Quaternion::new(-0.5, Vec3::new(0.5, 0.5, 0.5));
        assert!(q.s >= 0.0);
        assert_relative_eq!(q.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mrp_identity_and_quarter_turn() {
        assert_eq!(mrp_from_quat(&Quaternion::identity()), Mrp::zero());
        let q = Quaternion::from_axis_angle(&Vec3::z(), PI / 2.0);
        let s = mrp_from_quat(&q);
        // σ = tan(Φ/4)·ê
        assert_relative_eq!(s.0, Vec3::new(0.0, 0.0, (PI / 8.0).tan()), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_quaternion_flips_sign() {
        let q = Quaternion { s: -1.0, v: Vec3::zeros() };
        assert_eq!(mrp_from_quat(&q), Mrp::zero());
    }

    #[test]
    fn b_at_origin_is_identity() {
        assert_eq!(mrp_kinematics_matrix(&Mrp::zero()), Mat3::identity());
        let w = Vec3::new(0.4, -0.8, 1.2);
        assert_relative_eq!(mrp_rate(&Mrp::zero(), &w), w / 4.0);
    }

    #[test]
    fn shadow_examples() {
        let s = Mrp(Vec3::new(0.3, 0.4, 0.0));
        assert_eq!(mrp_shadow(s), s);
        assert_eq!(mrp_shadow(Mrp(Vec3::new(2.0, 0.0, 0.0))).0, Vec3::new(-0.5, 0.0, 0.0));
    }

    #[test]
    fn attitude_error_zero_case() {
        let s = Mrp(Vec3::new(0.1, -0.2, 0.3));
        let w = Vec3::new(0.01, 0.02, -0.03);
        let e = attitude_error(&s, &s, &w, &w);
        assert!(e.sigma_e.norm() < 1e-15);
        assert!(e.omega_err.norm() < 1e-15);
        assert_relative_eq!(e.r_tilde, Mat3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn attitude_error_inertial_target() {
        let s = Mrp(Vec3::new(0.1, -0.2, 0.3));
        let e = attitude_error(&s, &Mrp::zero(), &Vec3::zeros(), &Vec3::zeros());
        assert_relative_eq!(e.sigma_e.0, s.0, epsilon = 1e-14);
        assert_relative_eq!(e.r_tilde, s.dcm(), epsilon = 1e-15);
    }

    // σ and quaternion integrated side by side under the same time-varying rate.
    #[test]
    fn mrp_kinematics_matches_quaternion_propagation() {
        let omega = |t: f64| Vec3::new(0.3 * (0.5 * t).sin(), 0.2 * (0.3 * t).cos(), -0.25 + 0.05 * t);
        let h = 1e-3;
        let mut sigma = Mrp(Vec3::new(0.1, 0.2, -0.1));
        let mut q = quat_from_mrp(&sigma);
        let mut t = 0.0;
        while t < 10.0 - 1e-12 {
            // RK4 on σ
            let f = |s: &Vec3, t: f64| mrp_rate(&Mrp(*s), &omega(t));
            let k1 = f(&sigma.0, t);
            let k2 = f(&(sigma.0 + 0.5 * h * k1), t + 0.5 * h);
            let k3 = f(&(sigma.0 + 0.5 * h * k2), t + 0.5 * h);
            let k4 = f(&(sigma.0 + h * k3), t + h);
            sigma = mrp_shadow(Mrp(sigma.0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
            // RK4 on q (unnormalized state, renormalized after the step)
            let g = |s: f64, v: Vec3, t: f64| Quaternion { s, v }.derivative(&omega(t));
            let (a1, b1) = g(q.s, q.v, t);
            let (a2, b2) = g(q.s + 0.5 * h * a1, q.v + 0.5 * h * b1, t + 0.5 * h);
            let (a3, b3) = g(q.s + 0.5 * h * a2, q.v + 0.5 * h * b2, t + 0.5 * h);
            let (a4, b4) = g(q.s + h * a3, q.v + h * b3, t + h);
            q = Quaternion::new(q.s + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), q.v + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4));
            t += h;
        }
        let dq = quat_from_mrp(&sigma).compose(&q.conjugate());
        assert!(dq.angle() < 1e-8, "angle {}", dq.angle());
    }

    #[test]
    fn compose_matches_dcm_product() {
        let a = Quaternion::new(0.3, Vec3::new(0.1, -0.7, 0.2));
        let b = Quaternion::new(0.9, Vec3::new(-0.2, 0.1, 0.4));
        assert_relative_eq!(a.compose(&b).dcm(), a.dcm() * b.dcm(), epsilon = 1e-14);
    }

    #[test]
    fn axis_angle_rotates_frame() {
        // frame rotated +90° about z: inertial x appears along body -y
        let q = Quaternion::from_axis_angle(&Vec3::z(), PI / 2.0);
        assert_relative_eq!(q.dcm() * Vec3::x(), -Vec3::y(), epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn skew_is_antisymmetric_cross(a in vec3(), b in vec3()) {
            let m = skew(&a);
            prop_assert_eq!(m, -m.transpose());
            prop_assert!((m * b - cross_oracle(&a, &b)).abs().max() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn quat_mrp_round_trip(q in unit_quat()) {
            let back = quat_from_mrp(&mrp_from_quat(&q));
            prop_assert!(same_attitude(&back, &q, 1e-12));
        }

        #[test]
        fn representations_commute(q in unit_quat()) {
            let s = mrp_from_quat(&q);
            prop_assert!((s.dcm() - q.dcm()).abs().max() < 1e-10);
            prop_assert!((quat_from_mrp(&s).dcm() - q.dcm()).abs().max() < 1e-10);
            prop_assert!(same_attitude(&Quaternion::from_dcm(&q.dcm()), &q, 1e-10));
            prop_assert!((Mrp::from_dcm(&q.dcm()).dcm() - q.dcm()).abs().max() < 1e-10);
        }

        #[test]
        fn b_sigma_identities(v in vec3()) {
            let s = Mrp(v * 0.3);
            let b = mrp_kinematics_matrix(&s);
            let n2 = s.0.norm_squared();
            prop_assert!((b * s.0 - (1.0 + n2) * s.0).abs().max() < 1e-12 * (1.0 + n2) * (1.0 + n2));
            let btb = b.transpose() * b;
            prop_assert!((btb - (1.0 + n2).powi(2) * Mat3::identity()).abs().max() < 1e-12 * (1.0 + n2).powi(2));
            prop_assert!((mrp_kinematics_matrix_inverse(&s) * b - Mat3::identity()).abs().max() < 1e-12);
        }

        #[test]
        fn b_rate_matches_finite_difference(v in vec3(), d in vec3()) {
            let s = Mrp(v * 0.2);
            let h = 1e-6;
            let fd = (mrp_kinematics_matrix(&Mrp(s.0 + h * d)) - mrp_kinematics_matrix(&Mrp(s.0 - h * d))) / (2.0 * h);
            prop_assert!((mrp_kinematics_matrix_rate(&s, &d) - fd).abs().max() < 1e-6);
        }

        #[test]
        fn shadow_preserves_dcm(v in vec3()) {
            prop_assume!(v.norm() > 1.0);
            let s = Mrp(v);
            let sh = mrp_shadow(s);
            prop_assert!(sh.norm() <= 1.0 + 1e-12);
            prop_assert!((s.dcm() - sh.dcm()).abs().max() < 1e-12);
            // shadow of the shadow's shadow representative recovers σ
            let back = Mrp(-sh.0 / sh.0.norm_squared());
            prop_assert!((back.0 - s.0).abs().max() < 1e-12 * s.0.norm_squared());
        }

        #[test]
        fn attitude_error_composes(a in unit_quat(), b in unit_quat(), w in vec3(), wd in vec3()) {
            let s = mrp_from_quat(&a);
            let sd = mrp_from_quat(&b);
            let e = attitude_error(&s, &sd, &w, &wd);
            let rt = s.dcm() * sd.dcm().transpose();
            prop_assert!(e.sigma_e.norm() <= 1.0 + 1e-12);
            prop_assert!((e.sigma_e.dcm() - rt).abs().max() < 1e-12);
            prop_assert!((e.omega_err - (w - rt * wd)).abs().max() < 1e-12);
        }

        #[test]
        fn rotation_matrices_orthonormal(q in unit_quat()) {
            let r = mrp_from_quat(&q).dcm();
            prop_assert!((r.transpose() * r - Mat3::identity()).abs().max() < 1e-9);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }
}
