use std::ops::Mul;

use nalgebra::{Matrix3, Point3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

/// A proper rigid motion: `p ↦ R p + t`.
///
/// Serialized as a row-major 3×3 rotation plus a translation in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TransformDoc", into = "TransformDoc")]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct TransformDoc {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl From<TransformDoc> for RigidTransform {
    fn from(doc: TransformDoc) -> Self {
        let r = doc.rotation;
        let m = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        RigidTransform {
            rotation: Rotation3::from_matrix_unchecked(m),
            translation: Vector3::from(doc.translation),
        }
    }
}

impl From<RigidTransform> for TransformDoc {
    fn from(t: RigidTransform) -> Self {
        let m = t.rotation.matrix();
        TransformDoc {
            rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            translation: t.translation.into(),
        }
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation,
        }
    }

    /// Fixed-axis roll/pitch/yaw, `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        RigidTransform {
            rotation: Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]),
            translation: Vector3::from(xyz),
        }
    }

    /// Rotation about a unit axis through the origin.
    pub fn from_axis_angle(axis: &Unit<Vector3<f64>>, angle: f64) -> Self {
        RigidTransform {
            rotation: Rotation3::from_axis_angle(axis, angle),
            translation: Vector3::zeros(),
        }
    }

    /// Returns `(roll, pitch, yaw)` matching [`RigidTransform::from_xyz_rpy`].
    pub fn rpy(&self) -> [f64; 3] {
        let (r, p, y) = self.rotation.euler_angles();
        [r, p, y]
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn origin(&self) -> Point3<f64> {
        Point3::from(self.translation)
    }

    /// Rotation angle of `R` in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    /// Translation distance and rotation angle between two poses.
    pub fn pose_error(&self, other: &RigidTransform) -> (f64, f64) {
        let dt = (self.translation - other.translation).norm();
        let dr = rotation_angle(&(self.rotation * other.rotation.inverse()));
        (dt, dr)
    }

    pub fn is_proper(&self, tol: f64) -> bool {
        let m = self.rotation.matrix();
        let gram = m.transpose() * m;
        (gram - Matrix3::identity()).amax() <= tol && (m.determinant() - 1.0).abs() <= tol
    }

    /// Projects the rotation back onto SO(3); removes drift after long products.
    pub fn renormalized(&self) -> RigidTransform {
        let mut rotation = self.rotation;
        rotation.renormalize();
        RigidTransform {
            rotation,
            translation: self.translation,
        }
    }
}

/// Angle of a rotation, accurate near zero (`acos` of the trace is not).
pub fn rotation_angle(r: &Rotation3<f64>) -> f64 {
    let m = r.matrix();
    let skew = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    );
    (0.5 * skew.norm()).atan2(0.5 * (m.trace() - 1.0))
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl Mul<&RigidTransform> for &RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}
