//! Locating the robot base in a scene cloud.

pub mod bench;
mod congruent;
mod icp;
mod metric;
mod pipeline;
mod rigid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::CloudError;
use crate::model::{ModelError, RigidTransform};

pub use congruent::{base_invariants, congruent_set_register, CongruentParams};
pub use icp::{icp, icp_indexed, IcpParams};
pub use metric::rms_closest;
pub use pipeline::{
    model_cloud, register_pipeline, register_pipeline_with, Method, PipelineConfig, Preset, CROP_RADIUS,
    MODEL_SAMPLES,
};
pub use rigid::estimate_rigid;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("degenerate point set: {0}")]
    Degenerate(String),
    #[error("{0} cloud is empty")]
    EmptyCloud(&'static str),
    #[error("cloud has {size} points, need at least {needed}")]
    TooFewPoints { size: usize, needed: usize },
    #[error("no correspondences within {max_distance} m of the initial pose")]
    NoCorrespondences { max_distance: f64 },
    #[error("no coplanar four-point base found in the source")]
    NoCoplanarBase,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empty crop: no scene points within {radius} m of the seed")]
    EmptyCrop { radius: f64 },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<RegistrationError>,
    },
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl RegistrationError {
    /// Pipeline stage that failed, if known.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            RegistrationError::Stage { stage, .. } => Some(stage),
            RegistrationError::EmptyCrop { .. } => Some("crop"),
            _ => None,
        }
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(RegistrationError) -> RegistrationError {
        move |e| match e {
            e @ (RegistrationError::Stage { .. } | RegistrationError::EmptyCrop { .. }) => e,
            e => RegistrationError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// Model base frame to scene frame.
    pub transform: RigidTransform,
    pub rms: f64,
    pub converged: bool,
    /// ICP iterations, or bases tried by the congruent-set search.
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lcp: Option<f64>,
}
