//! Point clouds, triangle meshes and the scan-cleanup stages that run before
//! registration.

mod filter;
pub mod io;
mod kdtree;
mod mesh;
mod mls;

use nalgebra::Point3;
use thiserror::Error;

use crate::model::RigidTransform;

pub use filter::{crop_sphere, mean_neighbor_distances, remove_outliers, OutlierParams};
pub use kdtree::NeighborIndex;
pub use mesh::{sample_mesh, TriangleMesh};
pub use mls::{mls_smooth, MlsDegree, MlsParams};

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("cannot sample {0} points from an empty mesh")]
    EmptyMesh(usize),
    #[error("cloud of {size} points is too small for {k} neighbors")]
    TooSmall { size: usize, k: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An unordered set of 3-D points in meters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self, CloudError> {
        if let Some(i) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(CloudError::NonFinite(i));
        }
        Ok(PointCloud { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.transform_point(p)).collect(),
        }
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }
}

impl FromIterator<Point3<f64>> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point3<f64>>>(iter: I) -> Self {
        PointCloud {
            points: iter.into_iter().collect(),
        }
    }
}
