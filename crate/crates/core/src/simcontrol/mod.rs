//! Simulated stand-ins for the physical cell: a joint-position controller,
//! a synthetic scanner, and a replay driver tying guidance to the controller.

mod controller;
mod replay;
mod scene;

use thiserror::Error;

use crate::cloud::CloudError;
use crate::guidance::GuidanceError;
use crate::model::ModelError;

pub use controller::{controller_tick, ControllerState, MotionLimits, DEFAULT_MAX_ACCELERATION};
pub use replay::{
    parse_samples, replay, write_samples, write_trajectory, ReplayConfig, TrajectoryRecord, DEFAULT_SAMPLE_RATE,
    DEFAULT_TICK,
};
pub use scene::{synth_scene, Clutter, SceneSpec, SyntheticScene, TableSpec};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid motion limits: {0}")]
    InvalidLimits(String),
    #[error("invalid scene or replay settings: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}
