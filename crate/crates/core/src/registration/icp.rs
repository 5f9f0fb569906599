use serde::{Deserialize, Serialize};

use super::metric::rms_closest_indexed;
use super::rigid::estimate_rigid;
use super::{RegistrationError, RegistrationResult};
use crate::cloud::{NeighborIndex, PointCloud};
use crate::model::RigidTransform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpParams {
    pub max_iterations: usize,
    pub max_correspondence_distance: f64,
    /// Stop once an iteration moves the estimate by less than this, meters.
    pub translation_epsilon: f64,
    /// Same, radians.
    pub rotation_epsilon: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iterations: 60,
            max_correspondence_distance: 0.25,
            translation_epsilon: 1e-6,
            rotation_epsilon: 1e-6,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<(), RegistrationError> {
        let ok = self.max_iterations > 0
            && [self.max_correspondence_distance, self.translation_epsilon, self.rotation_epsilon]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(RegistrationError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Point-to-point ICP from `init`.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<RegistrationResult, RegistrationError> {
    let index = NeighborIndex::new(&target.points);
    icp_indexed(source, &index, init, params).map(|(result, _)| result)
}

/// [`icp`] against a prebuilt target index; also returns the objective seen
/// at the start of every iteration.
///
/// The objective is the mean over all source points of the squared distance
/// to the nearest target point, capped at the squared correspondence
/// distance. With that cap it cannot increase from one iteration to the next.
pub fn icp_indexed(
    source: &PointCloud,
    target: &NeighborIndex,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<(RegistrationResult, Vec<f64>), RegistrationError> {
    params.validate()?;
    if source.is_empty() {
        return Err(RegistrationError::EmptyCloud("source"));
    }
    if target.is_empty() {
        return Err(RegistrationError::EmptyCloud("target"));
    }
    let cap = params.max_correspondence_distance;
    let mut estimate = *init;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut moved = Vec::with_capacity(source.len());
    let mut matched = Vec::with_capacity(source.len());

    while iterations < params.max_iterations {
        iterations += 1;
        moved.clear();
        matched.clear();
        let mut objective = 0.0;
        for p in &source.points {
            let p = estimate.transform_point(p);
            match target.nearest_within(&p, cap) {
                Some((j, d)) => {
                    objective += d * d;
                    moved.push(p);
                    matched.push(*target.point(j));
                }
                None => objective += cap * cap,
            }
        }
        history.push(objective / source.len() as f64);
        if matched.is_empty() {
            if iterations == 1 {
                return Err(RegistrationError::NoCorrespondences { max_distance: cap });
            }
            break;
        }
        let step = match estimate_rigid(&moved, &matched) {
            Ok(step) => step,
            Err(_) if iterations == 1 => return Err(RegistrationError::NoCorrespondences { max_distance: cap }),
            Err(_) => break,
        };
        estimate = step.compose(&estimate).renormalized();
        if step.translation.norm() < params.translation_epsilon && step.rotation_angle() < params.rotation_epsilon {
            converged = true;
            break;
        }
    }

    let rms = rms_closest_indexed(source, target, &estimate)?;
    Ok((
        RegistrationResult {
            transform: estimate,
            rms,
            converged,
            iterations,
            lcp: None,
        },
        history,
    ))
}
