use crate::geometry::{Mat3, Vec3};
use crate::scalar::Real;

/// Whether poses live in full SE(3) or are restricted to yaw about the world
/// z-axis plus an xy translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseSpace {
    #[default]
    Planar,
    Full,
}

/// Rigid transform mapping world coordinates into the object frame:
/// `x_obj = rotation · x_world + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<S> {
    pub rotation: Mat3<S>,
    pub translation: Vec3<S>,
}

impl<S: Real> Default for Pose<S> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<S: Real> Pose<S> {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: Mat3<S>, translation: Vec3<S>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(t: Vec3<S>) -> Self {
        Self { rotation: Mat3::identity(), translation: t }
    }

    /// World→object transform for an object whose frame origin sits at
    /// `position` in the world, rotated by `yaw` about z.
    pub fn from_object_placement(position: Vec3<S>, yaw: S) -> Self {
        Self::object_to_world(position, Mat3::rot_z(yaw)).inverse()
    }

    /// The inverse of the world→object map: an object-to-world placement.
    pub fn object_to_world(position: Vec3<S>, rotation: Mat3<S>) -> Self {
        Self { rotation, translation: position }
    }

    #[inline]
    pub fn transform_point(&self, x: Vec3<S>) -> Vec3<S> {
        self.rotation.mul_vec(x) + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: Vec3<S>) -> Vec3<S> {
        self.rotation.mul_vec(v)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self { rotation: self.rotation.mul_mat(&other.rotation), translation: self.rotation.mul_vec(other.translation) + self.translation }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -rt.mul_vec(self.translation) }
    }

    /// World position of the object-frame origin.
    pub fn object_origin_in_world(&self) -> Vec3<S> {
        -self.rotation.transpose_mul_vec(self.translation)
    }

    pub fn rotation_angle(&self) -> S {
        self.rotation.rotation_angle()
    }

    /// Yaw of the object in the world (negated yaw of the world→object rotation).
    pub fn object_yaw(&self) -> S {
        self.rotation.transpose().yaw()
    }

    pub fn is_identity(&self, translation_tol: S, angle_tol: S) -> bool {
        self.translation.norm() <= translation_tol && self.rotation_angle() <= angle_tol
    }

    pub fn orthonormalized(&self) -> Self {
        Self { rotation: self.rotation.orthonormalized(), translation: self.translation }
    }

    /// Projects onto the planar subgroup: yaw-only rotation and zero z translation.
    pub fn projected(&self, space: PoseSpace) -> Self {
        match space {
            PoseSpace::Full => self.orthonormalized(),
            PoseSpace::Planar => Self {
                rotation: Mat3::rot_z(self.rotation.yaw()),
                translation: Vec3::new(self.translation.x, self.translation.y, S::zero()),
            },
        }
    }

    /// Translation followed by quaternion `(w, x, y, z)`.
    pub fn to_translation_quaternion(&self) -> ([S; 3], [S; 4]) {
        (self.translation.to_array(), self.rotation.to_quaternion())
    }

    pub fn from_translation_quaternion(t: [S; 3], q: [S; 4]) -> Self {
        Self { rotation: Mat3::from_quaternion(q), translation: Vec3::from_array(t) }
    }

    pub fn cast<T: Real>(&self) -> Pose<T> {
        let r = self.rotation.rows;
        let c = |v: S| T::lit(v.to_f64_lossy());
        Pose {
            rotation: Mat3::from_rows([
                [c(r[0][0]), c(r[0][1]), c(r[0][2])],
                [c(r[1][0]), c(r[1][1]), c(r[1][2])],
                [c(r[2][0]), c(r[2][1]), c(r[2][2])],
            ]),
            translation: self.translation.cast(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose_strategy() -> impl Strategy<Value = Pose<f64>> {
        (prop::array::uniform3(-1.0f64..1.0), -3.2f64..3.2, prop::array::uniform3(-2.0f64..2.0))
            .prop_map(|(axis, angle, t)| Pose::new(Mat3::from_axis_angle(Vec3::from_array(axis), angle), Vec3::from_array(t)))
    }

    #[test]
    fn identity_leaves_points() {
        let p = Pose::<f64>::identity().transform_point(Vec3::new(0.3, -0.1, 0.0));
        assert_eq!(p, Vec3::new(0.3, -0.1, 0.0));
    }

    #[test]
    fn quarter_turn_yaw() {
        let t = Pose::new(Mat3::rot_z(std::f64::consts::FRAC_PI_2), Vec3::zeros());
        let p = t.transform_point(Vec3::unit_x());
        assert!((p - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn placement_puts_origin_at_position() {
        let t = Pose::<f64>::from_object_placement(Vec3::new(0.6, -0.1, 0.0), 1.2);
        assert!((t.object_origin_in_world() - Vec3::new(0.6, -0.1, 0.0)).norm() < 1e-15);
        assert!(t.transform_point(Vec3::new(0.6, -0.1, 0.0)).norm() < 1e-15);
        assert!((t.object_yaw() - 1.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn composition_matches_sequential_application(a in pose_strategy(), b in pose_strategy(), x in prop::array::uniform3(-1.0f64..1.0)) {
            let x = Vec3::from_array(x);
            let lhs = a.compose(&b).transform_point(x);
            let rhs = a.transform_point(b.transform_point(x));
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn inverse_round_trip(a in pose_strategy(), x in prop::array::uniform3(-1.0f64..1.0)) {
            let x = Vec3::from_array(x);
            let back = a.inverse().transform_point(a.transform_point(x));
            prop_assert!((back - x).norm() < 1e-12);
        }

        #[test]
        fn rotations_stay_proper(a in pose_strategy(), b in pose_strategy()) {
            let c = a.compose(&b.inverse());
            prop_assert!((c.rotation.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
