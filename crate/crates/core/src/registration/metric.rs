use super::RegistrationError;
use crate::cloud::{NeighborIndex, PointCloud};
use crate::model::RigidTransform;

/// Root mean square, over the transformed model points, of the distance to
/// the nearest scene point.
pub fn rms_closest(model: &PointCloud, scene: &PointCloud, transform: &RigidTransform) -> Result<f64, RegistrationError> {
    if scene.is_empty() {
        return Err(RegistrationError::EmptyCloud("scene"));
    }
    rms_closest_indexed(model, &NeighborIndex::new(&scene.points), transform)
}

pub(crate) fn rms_closest_indexed(
    model: &PointCloud,
    scene: &NeighborIndex,
    transform: &RigidTransform,
) -> Result<f64, RegistrationError> {
    if model.is_empty() {
        return Err(RegistrationError::EmptyCloud("model"));
    }
    if scene.is_empty() {
        return Err(RegistrationError::EmptyCloud("scene"));
    }
    let sum: f64 = model
        .points
        .iter()
        .map(|p| scene.nearest(&transform.transform_point(p)).unwrap().1.powi(2))
        .sum();
    Ok((sum / model.len() as f64).sqrt())
}
