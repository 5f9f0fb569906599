//! Scene cleanup followed by registration of the posed robot model.

use serde::{Deserialize, Serialize};

use super::congruent::congruent_indexed;
use super::icp::icp_indexed;
use super::metric::rms_closest_indexed;
use super::{CongruentParams, IcpParams, RegistrationError, RegistrationResult};
use crate::cloud::{
    crop_sphere, mls_smooth, remove_outliers, sample_mesh, MlsDegree, MlsParams, NeighborIndex,
    OutlierParams, PointCloud,
};
use crate::model::{RigidTransform, RobotModel};

pub const CROP_RADIUS: f64 = 2.5;

/// Points sampled from the robot surface for matching.
pub const MODEL_SAMPLES: usize = 5_000;

/// Longest triangle edge when tessellating the robot for its model cloud.
const MODEL_EDGE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Icp,
    Congruent,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Icp => "ICP",
            Method::Congruent => "Congruent",
        }
    }
}

/// Scan resolution: surface samples per mesh and mesh triangle density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Big,
    Small,
}

impl Preset {
    pub fn samples(self) -> usize {
        match self {
            Preset::Big => 256_000,
            Preset::Small => 16_000,
        }
    }

    /// Triangles per cubic meter of scene bounding box.
    pub fn triangle_density(self) -> f64 {
        match self {
            Preset::Big => 1_240_000.0,
            Preset::Small => 1_000.0,
        }
    }

    /// Smoothing radius, a few times the typical point spacing.
    pub fn mls_radius(self) -> f64 {
        match self {
            Preset::Big => 0.005,
            Preset::Small => 0.02,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::Big => "big",
            Preset::Small => "small",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub crop_radius: f64,
    pub outlier_k: usize,
    pub outlier_alpha: f64,
    pub icp: IcpParams,
    pub congruent: CongruentParams,
    pub model_samples: usize,
    pub model_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let outliers = OutlierParams::default();
        PipelineConfig {
            crop_radius: CROP_RADIUS,
            outlier_k: outliers.k,
            outlier_alpha: outliers.alpha,
            icp: IcpParams::default(),
            congruent: CongruentParams::default(),
            model_samples: MODEL_SAMPLES,
            model_seed: 7,
        }
    }
}

/// Surface samples of the robot at `q`, in its base frame.
pub fn model_cloud(
    model: &RobotModel,
    q: &[f64],
    samples: usize,
    seed: u64,
) -> Result<PointCloud, RegistrationError> {
    let mesh = model.surface_mesh(q, MODEL_EDGE)?;
    Ok(sample_mesh(&mesh, samples, seed)?)
}

/// Crops the scene around the seed, cleans it, and registers the robot
/// model into it.
///
/// The reported rms is measured against the uncropped, unfiltered scene.
pub fn register_pipeline(
    scene: &PointCloud,
    model: &RobotModel,
    q: &[f64],
    seed_pose: &RigidTransform,
    method: Method,
    preset: Preset,
) -> Result<RegistrationResult, RegistrationError> {
    register_pipeline_with(scene, model, q, seed_pose, method, preset, &PipelineConfig::default())
}

pub fn register_pipeline_with(
    scene: &PointCloud,
    model: &RobotModel,
    q: &[f64],
    seed_pose: &RigidTransform,
    method: Method,
    preset: Preset,
    config: &PipelineConfig,
) -> Result<RegistrationResult, RegistrationError> {
    if scene.is_empty() {
        return Err(RegistrationError::EmptyCloud("scene"));
    }
    let source = model_cloud(model, q, config.model_samples, config.model_seed)
        .map_err(RegistrationError::at("model"))?;

    let cropped = crop_sphere(scene, &seed_pose.origin(), config.crop_radius);
    if cropped.is_empty() {
        return Err(RegistrationError::EmptyCrop {
            radius: config.crop_radius,
        });
    }
    let filtered = if cropped.len() > config.outlier_k {
        let params = OutlierParams {
            k: config.outlier_k,
            alpha: config.outlier_alpha,
        };
        remove_outliers(&cropped, params).map_err(|e| RegistrationError::at("outliers")(e.into()))?
    } else {
        cropped
    };
    let smoothed = mls_smooth(
        &filtered,
        MlsParams {
            radius: preset.mls_radius(),
            degree: MlsDegree::Linear,
        },
    );
    let index = NeighborIndex::new(&smoothed.points);

    let mut result = match method {
        Method::Icp => icp_indexed(&source, &index, seed_pose, &config.icp)
            .map(|(result, _)| result)
            .map_err(RegistrationError::at("icp"))?,
        Method::Congruent => congruent_indexed(&source, &smoothed, &index, &config.congruent)
            .map_err(RegistrationError::at("congruent"))?,
    };
    let scene_index = NeighborIndex::new(&scene.points);
    result.rms = rms_closest_indexed(&source, &scene_index, &result.transform)
        .map_err(RegistrationError::at("rms"))?;
    Ok(result)
}
