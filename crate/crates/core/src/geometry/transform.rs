use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

/// An element of SE(3): orthonormal rotation (det +1) plus translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: &Unit<Vector3<f64>>, angle: f64) -> Self {
        Self {
            rotation: *Rotation3::from_axis_angle(axis, angle).matrix(),
            translation: Vector3::zeros(),
        }
    }

    /// Roll-pitch-yaw (fixed-axis XYZ) convention used by URDF `rpy` attributes.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            rotation: *Rotation3::from_euler_angles(roll, pitch, yaw).matrix(),
            translation: Vector3::zeros(),
        }
    }

    pub fn with_translation(mut self, translation: Vector3<f64>) -> Self {
        self.translation = translation;
        self
    }

    pub fn rotation_matrix(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.translation
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    pub fn rotate(&self, vector: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * vector
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_homogeneous(m: &Matrix4<f64>) -> Self {
        Self {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    /// Axis-angle vector of the rotation (log map); magnitude is the rotation angle.
    pub fn rotation_log(&self) -> Vector3<f64> {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        rot.scaled_axis()
    }

    /// Snap the rotation back onto SO(3) via polar decomposition.
    /// Drift after long composition chains stays below 1e-9, but callers
    /// that iterate thousands of times can renormalize explicitly.
    pub fn orthonormalized(&self) -> RigidTransform {
        let svd = self.rotation.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u_flipped = u;
            u_flipped.column_mut(2).neg_mut();
            r = u_flipped * v_t;
        }
        RigidTransform {
            rotation: r,
            translation: self.translation,
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.rotation - Matrix3::identity()).abs().max() <= tol
            && self.translation.abs().max() <= tol
    }

    /// Max absolute elementwise difference over rotation and translation.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        let dr = (self.rotation - other.rotation).abs().max();
        let dt = (self.translation - other.translation).abs().max();
        dr.max(dt)
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (
            -3.0f64..3.0,
            -3.0f64..3.0,
            -3.0f64..3.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
        )
            .prop_map(|(r, p, y, tx, ty, tz)| {
                RigidTransform::from_rpy(r, p, y).with_translation(Vector3::new(tx, ty, tz))
            })
    }

    proptest! {
        #[test]
        fn compose_inverse_is_identity(t in arb_transform()) {
            prop_assert!(t.compose(&t.inverse()).is_identity(1e-9));
        }

        #[test]
        fn composition_associative(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
            let lhs = a.compose(&b).compose(&c);
            let rhs = a.compose(&b.compose(&c));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }
    }

    #[test]
    fn long_composition_chain_stays_orthonormal() {
        let step = RigidTransform::from_rpy(0.01, 0.02, -0.015)
            .with_translation(Vector3::new(0.001, -0.002, 0.0005));
        let mut acc = RigidTransform::identity();
        for _ in 0..1000 {
            acc = acc.compose(&step);
        }
        let r = acc.rotation_matrix();
        let drift = (r.transpose() * r - Matrix3::identity()).abs().max();
        assert!(drift < 1e-9, "orthonormality drift {drift}");
        assert!((r.determinant() - 1.0).abs() < 1e-9);
        // polar snap keeps it valid too
        let snapped = acc.orthonormalized().rotation_matrix().determinant();
        assert!((snapped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_round_trip() {
        let t = RigidTransform::from_rpy(0.3, -0.2, 1.1)
            .with_translation(Vector3::new(1.0, 2.0, 3.0));
        let back = RigidTransform::from_homogeneous(&t.to_homogeneous());
        assert!(t.max_abs_diff(&back) == 0.0);
    }
}
