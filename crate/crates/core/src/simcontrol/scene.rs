//! Synthetic scans: the posed robot plus optional clutter, tessellated,
//! roughened and sampled like a depth-sensor mesh.

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::cloud::{sample_mesh, PointCloud, TriangleMesh};
use crate::model::{Configuration, Origin, RigidTransform, RobotModel, Shape};
use crate::registration::Preset;

/// Clutter is tessellated no finer than this; flat faces gain nothing from
/// more triangles.
const CLUTTER_EDGE: f64 = 0.02;

const TABLE_HALF_EXTENTS: [f64; 3] = [0.4, 0.6, 0.375];
const FLOOR_HALF_EXTENTS: [f64; 3] = [1.5, 1.5, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    /// Clearance between the robot base and the table's near face, meters.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Clutter {
    pub floor: bool,
    pub adjacent_table: Option<TableSpec>,
}

impl Clutter {
    pub fn touching_table() -> Self {
        Clutter {
            floor: false,
            adjacent_table: Some(TableSpec { gap: 0.0 }),
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.floor && self.adjacent_table.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// True robot base pose in the scene.
    pub base_pose: Origin,
    pub q: Configuration,
    #[serde(default)]
    pub clutter: Clutter,
    #[serde(default)]
    pub noise_sigma: f64,
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self, model: &RobotModel) -> Result<(), SimError> {
        model.check_configuration(&self.q)?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SimError::InvalidSpec(format!(
                "noise_sigma must be a non-negative number, got {}",
                self.noise_sigma
            )));
        }
        if let Some(table) = self.clutter.adjacent_table {
            if !(table.gap.is_finite() && table.gap >= 0.0) {
                return Err(SimError::InvalidSpec(format!("table gap must be >= 0, got {}", table.gap)));
            }
        }
        let finite = self.base_pose.xyz.iter().chain(&self.base_pose.rpy).chain(self.q.iter());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(SimError::InvalidSpec("non-finite pose or joint value".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    /// Scene mesh in the world frame.
    pub mesh: TriangleMesh,
    pub cloud: PointCloud,
    /// Robot base frame to world frame.
    pub ground_truth: RigidTransform,
}

fn bounds(points: &[Point3<f64>]) -> (Point3<f64>, Point3<f64>) {
    let mut lo = Point3::from([f64::INFINITY; 3]);
    let mut hi = Point3::from([f64::NEG_INFINITY; 3]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Robot surface in the base frame, refined until it carries the preset's
/// triangle count for its bounding box. Returns the mesh and the edge used.
fn robot_mesh(model: &RobotModel, q: &[f64], preset: Preset) -> Result<(TriangleMesh, f64), SimError> {
    let coarse = model.surface_mesh(q, f64::INFINITY)?;
    let (lo, hi) = bounds(&coarse.vertices);
    let extent = (hi - lo).map(|e| e.max(0.01));
    let target = (preset.triangle_density() * extent.product()).ceil() as usize;
    let mut edge = extent.max();
    let mut mesh = model.surface_mesh(q, edge)?;
    while mesh.triangles.len() < target && edge > 1e-3 {
        edge /= std::f64::consts::SQRT_2;
        mesh = model.surface_mesh(q, edge)?;
    }
    Ok((mesh, edge))
}

fn clutter_mesh(model: &RobotModel, clutter: &Clutter, edge: f64) -> TriangleMesh {
    let edge = edge.max(CLUTTER_EDGE);
    let mut mesh = TriangleMesh::default();
    if clutter.floor {
        let [_, _, hz] = FLOOR_HALF_EXTENTS;
        let floor = Shape::Box {
            half_extents: FLOOR_HALF_EXTENTS,
        };
        let at = RigidTransform::from_xyz_rpy([0.0, 0.0, -hz], [0.0; 3]);
        mesh.append(&floor.tessellate(edge).transformed(&at));
    }
    if let Some(table) = clutter.adjacent_table {
        let base_reach = model.links[0]
            .collision
            .as_ref()
            .map(|c| {
                let placed = c.shape.tessellate(f64::INFINITY).transformed(c.placement());
                bounds(&placed.vertices).1.x
            })
            .unwrap_or(0.0);
        let [hx, _, hz] = TABLE_HALF_EXTENTS;
        let desk = Shape::Box {
            half_extents: TABLE_HALF_EXTENTS,
        };
        let at = RigidTransform::from_xyz_rpy([base_reach + table.gap + hx, 0.0, hz], [0.0; 3]);
        mesh.append(&desk.tessellate(edge).transformed(&at));
    }
    mesh
}

/// Builds the scene mesh and its sampled cloud, both in the world frame.
///
/// Deterministic for a given spec.
pub fn synth_scene(model: &RobotModel, spec: &SceneSpec) -> Result<SyntheticScene, SimError> {
    spec.validate(model)?;
    let ground_truth = spec.base_pose.transform();
    let (mut mesh, edge) = robot_mesh(model, &spec.q, spec.preset)?;
    mesh.append(&clutter_mesh(model, &spec.clutter, edge));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma checked positive");
        for v in &mut mesh.vertices {
            for c in v.coords.iter_mut() {
                *c += normal.sample(&mut rng);
            }
        }
    }
    let mesh = mesh.transformed(&ground_truth);
    let cloud = sample_mesh(&mesh, spec.preset.samples(), rng.random())?;
    Ok(SyntheticScene {
        mesh,
        cloud,
        ground_truth,
    })
}
