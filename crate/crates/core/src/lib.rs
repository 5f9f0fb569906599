//! Sensorless hand guidance for serial robot arms.
//!
//! A robot model is registered into a scene point cloud to find its base
//! pose; hand positions near the robot are then turned into joint angle
//! updates and fed to an interpolating joint controller.

pub mod cloud;
pub mod guidance;
pub mod model;
pub mod registration;
pub mod service;
pub mod simcontrol;

pub use cloud::{PointCloud, TriangleMesh};
pub use model::{Configuration, RigidTransform, RobotModel};
