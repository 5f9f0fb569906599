//! Robot description, forward kinematics and per-joint collision zones.
//!
//! A model is a serial chain of revolute joints. Link `0` is the base; joint
//! `k` moves link `k + 1`, and that link's collision primitive is joint `k`'s
//! zone.

mod kinematics;
mod schema;
pub mod shape;
mod transform;

use std::ops::{Deref, DerefMut};

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kinematics::JointFrame;
pub use schema::{load_model, samples, to_document};
pub use shape::Shape;
pub use transform::{rotation_angle, RigidTransform};

/// Default inflation of a link's collision primitive when testing zones.
pub const DEFAULT_ZONE_MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("robot description parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("invalid {item}: {msg}")]
    Invalid { item: String, msg: String },
    #[error("configuration has {got} values, model has {expected} joints")]
    Dimension { expected: usize, got: usize },
    #[error("joint index {index} out of range for {count} joints")]
    JointIndex { index: usize, count: usize },
}

/// Position plus fixed-axis roll/pitch/yaw, as written in robot descriptions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Origin {
    pub fn transform(&self) -> RigidTransform {
        RigidTransform::from_xyz_rpy(self.xyz, self.rpy)
    }

    fn is_identity(&self) -> bool {
        self.xyz == [0.0; 3] && self.rpy == [0.0; 3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "velocity")]
    pub max_velocity: f64,
}

impl JointLimits {
    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.lower && angle <= self.upper
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.lower, self.upper)
    }
}

impl Default for JointLimits {
    fn default() -> Self {
        JointLimits {
            lower: -std::f64::consts::PI,
            upper: std::f64::consts::PI,
            max_velocity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent_link: String,
    pub child_link: String,
    pub origin: Origin,
    pub axis: Unit<Vector3<f64>>,
    pub limits: JointLimits,
    origin_transform: RigidTransform,
}

impl JointSpec {
    pub fn origin_transform(&self) -> &RigidTransform {
        &self.origin_transform
    }
}

/// A link's convex collision primitive, placed in the link frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    pub shape: Shape,
    pub origin: Origin,
    placement: RigidTransform,
}

impl Collision {
    pub fn new(shape: Shape, origin: Origin) -> Self {
        Collision {
            placement: origin.transform(),
            shape,
            origin,
        }
    }

    pub fn placement(&self) -> &RigidTransform {
        &self.placement
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub name: String,
    pub collision: Option<Collision>,
    pub visual: Option<String>,
}

/// Serial revolute chain. `links[0]` is the base link and `links[k + 1]` the
/// child of `joints[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub joints: Vec<JointSpec>,
    pub links: Vec<LinkSpec>,
}

impl RobotModel {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn base_link(&self) -> &str {
        &self.links[0].name
    }

    pub fn zero_configuration(&self) -> Configuration {
        Configuration(vec![0.0; self.joints.len()])
    }

    pub fn check_configuration(&self, q: &[f64]) -> Result<(), ModelError> {
        if q.len() != self.joints.len() {
            return Err(ModelError::Dimension {
                expected: self.joints.len(),
                got: q.len(),
            });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.joints.len()
            && self.joints.iter().zip(q).all(|(j, a)| j.limits.contains(*a))
    }
}

/// Joint angles in radians, base to tip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn zeros(n: usize) -> Self {
        Configuration(vec![0.0; n])
    }
}

impl Deref for Configuration {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Configuration {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(q: Vec<f64>) -> Self {
        Configuration(q)
    }
}
