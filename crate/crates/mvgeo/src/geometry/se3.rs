//! Rigid-body poses and their exponential / logarithmic maps.
//!
//! Twists are 6-vectors ordered `[v, w]` (translation part first). The
//! exponential uses the closed-form Rodrigues rotation together with the
//! coupling matrix `V` that converts the translation component, and the log is
//! its exact inverse away from the `pi` rotation singularity. Pose updates in
//! the optimizers are applied on the left: `P <- exp(xi) * P`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Twist coordinates `[v, w]`: linear part first, angular part second.
pub type Twist = Vector6<f64>;

const ORTHONORMALITY_TOL: f64 = 1e-9;
/// Rotation angles closer to `pi` than this margin make the log map ill-posed.
const LOG_ANGLE_MARGIN: f64 = 1e-6;
/// Below this angle the Rodrigues coefficients switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-5;

/// A rigid transform `p -> R p + t` with a guaranteed orthonormal rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSE3 {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl PoseSE3 {
    pub fn identity() -> Self {
        PoseSE3 { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Builds a pose, rejecting rotations that are not orthonormal with
    /// positive determinant (tolerance 1e-9).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let deviation = rotation_deviation(&rotation);
        if !deviation.is_finite() || deviation > ORTHONORMALITY_TOL {
            return Err(Error::Data(format!(
                "rotation is not orthonormal: deviation {deviation:.3e} exceeds {ORTHONORMALITY_TOL:.0e}"
            )));
        }
        if !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::Data("translation has non-finite components".into()));
        }
        Ok(PoseSE3 { rotation, translation })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Composition `self o other`: applies `other` first.
    pub fn compose(&self, other: &PoseSE3) -> PoseSE3 {
        PoseSE3 {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> PoseSE3 {
        let rt = self.rotation.transpose();
        PoseSE3 { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Exponential map: `xi = [v, w]` to a pose with `R = exp([w]_x)` and
    /// `t = V v`.
    pub fn exp(xi: &Twist) -> PoseSE3 {
        let v = Vector3::new(xi[0], xi[1], xi[2]);
        let w = Vector3::new(xi[3], xi[4], xi[5]);
        let theta = w.norm();
        let wx = skew(&w);
        let wx2 = wx * wx;
        // A = sin(t)/t, B = (1-cos(t))/t^2, C = (t-sin(t))/t^3
        let (a, b, c) = if theta < SMALL_ANGLE {
            let t2 = theta * theta;
            (1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
        } else {
            let t2 = theta * theta;
            ((theta.sin()) / theta, (1.0 - theta.cos()) / t2, (theta - theta.sin()) / (t2 * theta))
        };
        let rotation = Matrix3::identity() + wx * a + wx2 * b;
        let v_mat = Matrix3::identity() + wx * b + wx2 * c;
        PoseSE3 { rotation, translation: v_mat * v }
    }

    /// Logarithmic map, the inverse of [`PoseSE3::exp`].
    ///
    /// Fails for rotation angles within `1e-6` of `pi`, where the axis is no
    /// longer uniquely recoverable.
    pub fn log(&self) -> Result<Twist> {
        let trace = self.rotation.trace();
        let cos_theta = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0);
        let theta = cos_theta.acos();
        if theta >= std::f64::consts::PI - LOG_ANGLE_MARGIN {
            return Err(Error::Domain(format!(
                "rotation angle {theta:.9} is within 1e-6 of pi; log map is ill-posed"
            )));
        }
        // vee((R - R^T) / 2) = sin(theta) * axis
        let r = &self.rotation;
        let vee = Vector3::new(
            (r[(2, 1)] - r[(1, 2)]) / 2.0,
            (r[(0, 2)] - r[(2, 0)]) / 2.0,
            (r[(1, 0)] - r[(0, 1)]) / 2.0,
        );
        let w = if theta < SMALL_ANGLE {
            // theta/sin(theta) ~ 1 + theta^2/6
            vee * (1.0 + theta * theta / 6.0)
        } else {
            vee * (theta / theta.sin())
        };
        let wx = skew(&w);
        let wx2 = wx * wx;
        // V^{-1} = I - [w]_x / 2 + (1/t^2)(1 - A/(2B)) [w]_x^2
        let v_inv = if theta < SMALL_ANGLE {
            Matrix3::identity() - wx * 0.5 + wx2 * (1.0 / 12.0)
        } else {
            let t2 = theta * theta;
            let a = theta.sin() / theta;
            let b = (1.0 - theta.cos()) / t2;
            Matrix3::identity() - wx * 0.5 + wx2 * ((1.0 - a / (2.0 * b)) / t2)
        };
        let v = v_inv * self.translation;
        Ok(Twist::new(v[0], v[1], v[2], w[0], w[1], w[2]))
    }

    /// Adjoint matrix mapping twists across the pose:
    /// `exp(Ad_P xi) = P exp(xi) P^{-1}` in the `[v, w]` ordering.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let mut ad = Matrix6::zeros();
        let tx_r = skew(&self.translation) * self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                ad[(i, j)] = self.rotation[(i, j)];
                ad[(i, j + 3)] = tx_r[(i, j)];
                ad[(i + 3, j + 3)] = self.rotation[(i, j)];
            }
        }
        ad
    }

    /// Rotation angle in radians.
    pub fn rotation_angle(&self) -> f64 {
        (((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0)).acos()
    }

    /// Frobenius deviation of `R^T R` from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        rotation_deviation(&self.rotation)
    }

    /// Row-major `[R | t]` flattening (12 values), the on-disk pose layout.
    pub fn to_matrix_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }
}

#[inline]
pub(crate) fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

fn rotation_deviation(rotation: &Matrix3<f64>) -> f64 {
    let gram = rotation.transpose() * rotation;
    let mut dev: f64 = (gram - Matrix3::identity()).norm();
    dev = dev.max((rotation.determinant() - 1.0).abs());
    dev
}

/// Projects an arbitrary matrix onto the nearest rotation (via SVD, with the
/// determinant sign corrected).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u_flip = u;
        u_flip.column_mut(2).scale_mut(-1.0);
        r = u_flip * vt;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn sample_twists() -> Vec<Twist> {
        vec![
            Twist::zeros(),
            Twist::new(0.1, -0.2, 0.3, 0.0, 0.0, 0.0),
            Twist::new(0.0, 0.0, 0.0, 0.2, -0.1, 0.4),
            Twist::new(1.0, 2.0, -0.5, 0.3, 0.7, -0.2),
            Twist::new(-0.4, 0.1, 0.9, 1e-9, -2e-9, 1e-9),
            Twist::new(0.2, 0.0, -0.1, 0.0, 3.0, 0.0),
        ]
    }

    #[test]
    fn exp_of_zero_twist_is_identity() {
        let p = PoseSE3::exp(&Twist::zeros());
        assert!((p.rotation() - Matrix3::identity()).norm() < 1e-15);
        assert!(p.translation().norm() < 1e-15);
    }

    #[test]
    fn exp_log_round_trip() {
        for xi in sample_twists() {
            let p = PoseSE3::exp(&xi);
            let back = p.log().unwrap();
            assert!((back - xi).norm() < TOL, "twist {xi:?} -> {back:?}");
        }
    }

    #[test]
    fn log_exp_round_trip_on_composed_poses() {
        let a = PoseSE3::exp(&Twist::new(0.3, -0.2, 0.5, 0.2, 0.1, -0.3));
        let b = PoseSE3::exp(&Twist::new(-0.1, 0.4, 0.2, -0.4, 0.2, 0.1));
        let c = a.compose(&b);
        let back = PoseSE3::exp(&c.log().unwrap());
        assert!((back.rotation() - c.rotation()).norm() < TOL);
        assert!((back.translation() - c.translation()).norm() < TOL);
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let xi = Twist::new(0.0, 0.0, 0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let p = PoseSE3::exp(&xi);
        let mapped = p.transform_point(&Vector3::new(1.0, 0.0, 0.0));
        assert!((mapped - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = PoseSE3::exp(&Twist::new(1.0, -2.0, 0.3, 0.4, -0.2, 0.6));
        let e = p.compose(&p.inverse());
        assert!((e.rotation() - Matrix3::identity()).norm() < 1e-12);
        assert!(e.translation().norm() < 1e-12);
    }

    #[test]
    fn log_rejects_angles_at_pi() {
        let xi = Twist::new(0.0, 0.0, 0.0, std::f64::consts::PI, 0.0, 0.0);
        let p = PoseSE3::exp(&xi);
        assert!(matches!(p.log(), Err(Error::Domain(_))));
        // Just inside the margin still works.
        let xi = Twist::new(0.1, 0.0, 0.0, std::f64::consts::PI - 1e-3, 0.0, 0.0);
        let p = PoseSE3::exp(&xi);
        let back = p.log().unwrap();
        assert!((back - xi).norm() < 1e-8);
    }

    #[test]
    fn new_rejects_non_orthonormal_rotations() {
        let mut r = Matrix3::identity();
        r[(0, 1)] = 1e-6;
        assert!(PoseSE3::new(r, Vector3::zeros()).is_err());
        let r = Matrix3::identity() * 0.999999;
        assert!(PoseSE3::new(r, Vector3::zeros()).is_err());
    }

    #[test]
    fn adjoint_transports_twists_across_the_pose() {
        let p = PoseSE3::exp(&Twist::new(0.5, -0.3, 0.8, 0.3, -0.1, 0.2));
        for xi in sample_twists() {
            if xi.norm() == 0.0 {
                continue;
            }
            let lhs = PoseSE3::exp(&(p.adjoint() * xi * 1e-4));
            let rhs = p.compose(&PoseSE3::exp(&(xi * 1e-4))).compose(&p.inverse());
            assert!((lhs.rotation() - rhs.rotation()).norm() < 1e-10);
            assert!((lhs.translation() - rhs.translation()).norm() < 1e-10);
        }
    }

    #[test]
    fn nearest_rotation_fixes_mild_drift() {
        let p = PoseSE3::exp(&Twist::new(0.0, 0.0, 0.0, 0.2, 0.5, -0.1));
        let mut drifted = *p.rotation();
        drifted[(1, 2)] += 1e-4;
        let fixed = nearest_rotation(&drifted);
        assert!(rotation_deviation(&fixed) < 1e-12);
        assert!((fixed - p.rotation()).norm() < 1e-3);
    }
}
