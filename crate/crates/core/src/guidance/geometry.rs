use nalgebra::{Point3, Rotation3, Unit, Vector3};

use super::GuidanceError;

/// Component of `v` orthogonal to the unit normal `n`.
pub fn project_onto_plane(v: &Vector3<f64>, n: &Unit<Vector3<f64>>) -> Vector3<f64> {
    v - n.as_ref() * v.dot(n)
}

/// Angle in (−π, π] that turns the direction of `r` onto the direction of `t`
/// about `axis`. Both vectors are expected to lie in the plane normal to the axis.
pub fn signed_angle_about_axis(
    r: &Vector3<f64>,
    t: &Vector3<f64>,
    axis: &Unit<Vector3<f64>>,
    axis_tol: f64,
) -> Result<f64, GuidanceError> {
    let radius = r.norm();
    if radius <= axis_tol {
        return Err(GuidanceError::DegenerateRadius { radius });
    }
    let angle = r.cross(t).dot(axis).atan2(r.dot(t));
    // atan2 yields -π for (−0, negative); keep the half-open range
    Ok(if angle == -std::f64::consts::PI { std::f64::consts::PI } else { angle })
}

/// `point` turned by `angle` about the line through `pivot` along `axis`.
pub fn rotate_about(point: &Point3<f64>, pivot: &Point3<f64>, axis: &Unit<Vector3<f64>>, angle: f64) -> Point3<f64> {
    pivot + Rotation3::from_axis_angle(axis, angle) * (point - pivot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn z() -> Unit<Vector3<f64>> {
        Vector3::z_axis()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_onto_plane(&Vector3::new(1.0, 0.0, 0.0), &z()), Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(project_onto_plane(&Vector3::new(0.0, 0.0, 5.0), &z()), Vector3::zeros());
        assert_eq!(project_onto_plane(&Vector3::new(1.0, 0.0, 1.0), &z()), Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn angle_examples() {
        let (x, y) = (Vector3::x(), Vector3::y());
        assert_eq!(signed_angle_about_axis(&x, &y, &z(), 1e-6).unwrap(), FRAC_PI_2);
        assert_eq!(signed_angle_about_axis(&x, &x, &z(), 1e-6).unwrap(), 0.0);
        let down = -Vector3::z_axis();
        assert_eq!(signed_angle_about_axis(&x, &y, &down, 1e-6).unwrap(), -FRAC_PI_2);
        assert_eq!(signed_angle_about_axis(&x, &-x, &z(), 1e-6).unwrap(), std::f64::consts::PI);
        assert!(matches!(
            signed_angle_about_axis(&Vector3::zeros(), &y, &z(), 1e-6),
            Err(GuidanceError::DegenerateRadius { .. })
        ));
    }

    #[test]
    fn rotation_aligns_direction() {
        let axis = Unit::new_normalize(Vector3::new(0.3, -0.2, 0.9));
        let r = project_onto_plane(&Vector3::new(1.0, 0.4, -0.1), &axis);
        let t = project_onto_plane(&Vector3::new(-0.5, 0.8, 0.3), &axis);
        let angle = signed_angle_about_axis(&r, &t, &axis, 1e-9).unwrap();
        let turned = Rotation3::from_axis_angle(&axis, angle) * r;
        assert!((turned.normalize() - t.normalize()).norm() < 1e-12);
    }
}
