use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

use super::RegistrationError;
use crate::model::RigidTransform;

/// Least-squares rigid motion taking `source[i]` onto `target[i]` (Kabsch).
pub fn estimate_rigid(source: &[Point3<f64>], target: &[Point3<f64>]) -> Result<RigidTransform, RegistrationError> {
    if source.len() != target.len() {
        return Err(RegistrationError::Degenerate(format!(
            "{} source points paired with {} target points",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 3 {
        return Err(RegistrationError::Degenerate(format!("{} pairs, need at least 3", source.len())));
    }
    let n = source.len() as f64;
    let mean = |pts: &[Point3<f64>]| pts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let (cs, ct) = (mean(source), mean(target));

    let mut spread = Matrix3::zeros();
    let mut cross = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        let (ds, dt) = (s.coords - cs, t.coords - ct);
        spread += ds * ds.transpose();
        cross += ds * dt.transpose();
    }
    let mut extent = spread.symmetric_eigenvalues();
    extent.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(extent[0] > 0.0) || extent[1] <= 1e-12 * extent[0] {
        return Err(RegistrationError::Degenerate("source points are collinear or coincident".into()));
    }

    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let rotation = Rotation3::from_matrix_unchecked(rotation);
    let translation = ct - rotation * cs;
    Ok(RigidTransform::new(rotation, translation))
}
