//! Fixtures shared by the benchmarks.

use handguide_core::model::{samples, Origin, RigidTransform, RobotModel};
use handguide_core::registration::{model_cloud, Preset, MODEL_SAMPLES};
use handguide_core::simcontrol::{synth_scene, Clutter, SceneSpec};
use handguide_core::PointCloud;

pub struct RegistrationFixture {
    pub model: RobotModel,
    pub q: Vec<f64>,
    pub source: PointCloud,
    pub scene: PointCloud,
    /// Truth nudged by 5 cm and 5 degrees.
    pub seed: RigidTransform,
}

pub fn registration_fixture(preset: Preset) -> RegistrationFixture {
    let model = samples::kr5_like();
    let q = vec![0.3, -0.4, 0.5, 0.0, 0.6, 0.0];
    let spec = SceneSpec {
        base_pose: Origin {
            xyz: [0.4, -0.3, 0.0],
            rpy: [0.0, 0.0, 0.7],
        },
        q: q.clone().into(),
        clutter: Clutter::default(),
        noise_sigma: 0.003,
        preset,
        seed: 1,
    };
    let scene = synth_scene(&model, &spec).expect("valid scene");
    let source = model_cloud(&model, &q, MODEL_SAMPLES, 7).expect("valid configuration");
    let nudge = RigidTransform::from_xyz_rpy([0.03, -0.03, 0.02], [0.0, 0.0, 5f64.to_radians()]);
    RegistrationFixture {
        seed: scene.ground_truth.compose(&nudge),
        model,
        q,
        source,
        scene: scene.cloud,
    }
}
