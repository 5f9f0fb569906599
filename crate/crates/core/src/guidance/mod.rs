//! Hand displacement to joint updates.
//!
//! Each joint sees the hand motion projected onto the plane normal to its
//! axis and turns the previous hand position about that axis as far as it can
//! (step cap and limits permitting). Whatever it cannot realize is handed to
//! the next joint toward the base.

mod decompose;
mod geometry;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

pub use decompose::{decompose, decompose_traced, joint_step, scaled_target, GuidanceUpdate, JointStep};
pub use geometry::{project_onto_plane, rotate_about, signed_angle_about_axis};
pub use session::{session_step, Engagement, GuidanceState, HandSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("radius {radius:.3e} m is within the axis tolerance")]
    DegenerateRadius { radius: f64 },
    #[error("hand sample at t = {t} s does not follow t = {previous} s")]
    OutOfOrder { previous: f64, t: f64 },
    #[error("invalid guidance config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What to do when a desired update would leave the joint's limits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitPolicy {
    /// Leave the joint where it is.
    #[default]
    Reject,
    /// Move it as far as the limit allows.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceConfig {
    pub sensitivity: f64,
    pub residual_tol: f64,
    pub axis_tol: f64,
    /// Per-sample cap on a single joint's update, radians.
    pub max_step_angle: f64,
    pub limit_policy: LimitPolicy,
    pub zone_margin: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            sensitivity: 1.0,
            residual_tol: 1e-4,
            axis_tol: 1e-6,
            max_step_angle: 0.1,
            limit_policy: LimitPolicy::Reject,
            zone_margin: crate::model::DEFAULT_ZONE_MARGIN,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        let positive = [
            ("sensitivity", self.sensitivity),
            ("residual_tol", self.residual_tol),
            ("axis_tol", self.axis_tol),
            ("max_step_angle", self.max_step_angle),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GuidanceError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.zone_margin.is_finite() && self.zone_margin >= 0.0) {
            return Err(GuidanceError::InvalidConfig(format!(
                "zone_margin must be non-negative, got {}",
                self.zone_margin
            )));
        }
        Ok(())
    }

    pub fn with_sensitivity(self, sensitivity: f64) -> Self {
        GuidanceConfig { sensitivity, ..self }
    }
}
