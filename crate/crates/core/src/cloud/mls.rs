//! Moving-least-squares projection.
//!
//! Every point is projected onto a surface fitted to its own neighborhood:
//! first a weighted plane, then optionally a quadratic height field over that
//! plane. Weights are Gaussian, `w = exp(-d² / h²)` with bandwidth `h = radius / 2`.

use nalgebra::{Matrix3, Point3, SMatrix, SVector, SymmetricEigen, Vector3};
use rayon::prelude::*;

use super::{NeighborIndex, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlsDegree {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlsParams {
    pub radius: f64,
    pub degree: MlsDegree,
}

impl Default for MlsParams {
    fn default() -> Self {
        MlsParams {
            radius: 0.05,
            degree: MlsDegree::Linear,
        }
    }
}

const MIN_NEIGHBORS: usize = 3;
const QUADRATIC_TERMS: usize = 6;

pub fn mls_smooth(cloud: &PointCloud, params: MlsParams) -> PointCloud {
    let index = NeighborIndex::new(&cloud.points);
    let h2 = (0.5 * params.radius).powi(2);
    let points = cloud
        .points
        .par_iter()
        .map(|p| project_point(&index, p, params, h2))
        .collect();
    PointCloud { points }
}

fn project_point(index: &NeighborIndex, p: &Point3<f64>, params: MlsParams, h2: f64) -> Point3<f64> {
    let mut neighbors: Vec<(usize, f64)> = Vec::new();
    index.for_each_within(p, params.radius, |i, d2| neighbors.push((i, (-d2 / h2).exp())));
    if neighbors.len() < MIN_NEIGHBORS {
        return *p;
    }
    // fixed summation order regardless of tree traversal
    neighbors.sort_unstable_by_key(|(i, _)| *i);

    let wsum: f64 = neighbors.iter().map(|(_, w)| w).sum();
    let centroid = neighbors
        .iter()
        .fold(Vector3::zeros(), |acc, (i, w)| acc + index.point(*i).coords * *w)
        / wsum;
    let mut cov = Matrix3::zeros();
    for (i, w) in &neighbors {
        let d = index.point(*i).coords - centroid;
        cov += d * d.transpose() * *w;
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let normal: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    let on_plane = p.coords - normal * (p.coords - centroid).dot(&normal);

    if params.degree == MlsDegree::Linear || neighbors.len() < QUADRATIC_TERMS {
        return Point3::from(on_plane);
    }

    let u: Vector3<f64> = eig.eigenvectors.column(order[2]).into_owned();
    let v = normal.cross(&u);
    let mut ata = SMatrix::<f64, QUADRATIC_TERMS, QUADRATIC_TERMS>::zeros();
    let mut atb = SVector::<f64, QUADRATIC_TERMS>::zeros();
    for (i, w) in &neighbors {
        let d = index.point(*i).coords - on_plane;
        let (a, b, height) = (d.dot(&u), d.dot(&v), d.dot(&normal));
        let row = SVector::<f64, QUADRATIC_TERMS>::from([1.0, a, b, a * a, a * b, b * b]);
        ata += row * row.transpose() * *w;
        atb += row * (height * *w);
    }
    match ata.cholesky() {
        Some(chol) => {
            let coeffs = chol.solve(&atb);
            if coeffs[0].is_finite() {
                Point3::from(on_plane + normal * coeffs[0])
            } else {
                Point3::from(on_plane)
            }
        }
        None => Point3::from(on_plane),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Points on the plane through `origin` spanned by `u`, `v`.
    fn plane_cloud(n: usize, seed: u64, noise: f64) -> (PointCloud, Vector3<f64>, Point3<f64>) {
        let origin = Point3::new(0.3, -0.2, 1.0);
        let u = Vector3::new(1.0, 0.5, 0.2).normalize();
        let normal = u.cross(&Vector3::new(0.1, 1.0, -0.3)).normalize();
        let v = normal.cross(&u);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
        let cloud = (0..n)
            .map(|_| {
                let a = rng.random::<f64>() * 0.5;
                let b = rng.random::<f64>() * 0.5;
                let h = if noise > 0.0 { gauss.sample(&mut rng) } else { 0.0 };
                origin + u * a + v * b + normal * h
            })
            .collect();
        (cloud, normal, origin)
    }

    fn rms_to_plane(cloud: &PointCloud, normal: &Vector3<f64>, origin: &Point3<f64>) -> f64 {
        let s: f64 = cloud
            .points
            .iter()
            .map(|p| (p - origin).dot(normal).powi(2))
            .sum();
        (s / cloud.len() as f64).sqrt()
    }

    #[test]
    fn exact_plane_is_a_fixed_point() {
        let (cloud, _, _) = plane_cloud(800, 1, 0.0);
        for degree in [MlsDegree::Linear, MlsDegree::Quadratic] {
            let out = mls_smooth(&cloud, MlsParams { radius: 0.05, degree });
            for (a, b) in cloud.points.iter().zip(&out.points) {
                assert!((a - b).norm() < 1e-9, "{degree:?}");
            }
            // idempotent
            let again = mls_smooth(&out, MlsParams { radius: 0.05, degree });
            for (a, b) in out.points.iter().zip(&again.points) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_normal_to_plane_is_reduced() {
        let (cloud, normal, origin) = plane_cloud(2000, 2, 0.005);
        let before = rms_to_plane(&cloud, &normal, &origin);
        for degree in [MlsDegree::Linear, MlsDegree::Quadratic] {
            let out = mls_smooth(&cloud, MlsParams { radius: 0.05, degree });
            let after = rms_to_plane(&out, &normal, &origin);
            assert!(after < 0.005 && after < before, "{degree:?}: {before} -> {after}");
        }
    }

    #[test]
    fn isolated_points_pass_through() {
        let cloud = PointCloud::new(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.3),
        ])
        .unwrap();
        assert_eq!(mls_smooth(&cloud, MlsParams::default()), cloud);
    }
}
