use nalgebra::Point3;
use rayon::prelude::*;

use super::{CloudError, NeighborIndex, PointCloud};

/// Statistical outlier removal settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierParams {
    /// Neighbors per point, excluding the point itself.
    pub k: usize,
    /// Standard deviations above the mean a point may sit before it is dropped.
    pub alpha: f64,
}

impl Default for OutlierParams {
    fn default() -> Self {
        OutlierParams { k: 16, alpha: 1.0 }
    }
}

/// Mean distance from every point to its `k` nearest other points.
pub fn mean_neighbor_distances(
    cloud: &PointCloud,
    index: &NeighborIndex,
    k: usize,
) -> Vec<f64> {
    cloud
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let neighbors = index.knn(p, k + 1);
            let sum: f64 = neighbors
                .iter()
                .filter(|(j, _)| *j != i)
                .take(k)
                .map(|(_, d)| d)
                .sum();
            sum / k as f64
        })
        .collect()
}

/// Keeps point `i` iff its mean k-neighbor distance is at most `μ + α·σ`,
/// with `μ`, `σ` the mean and population standard deviation of that statistic
/// over the whole cloud.
pub fn remove_outliers(cloud: &PointCloud, params: OutlierParams) -> Result<PointCloud, CloudError> {
    let k = params.k;
    if k == 0 || cloud.len() <= k {
        return Err(CloudError::TooSmall {
            size: cloud.len(),
            k,
        });
    }
    let index = NeighborIndex::new(&cloud.points);
    let means = mean_neighbor_distances(cloud, &index, k);
    let n = means.len() as f64;
    let mu = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / n;
    let threshold = mu + params.alpha * var.sqrt();
    Ok(cloud
        .points
        .iter()
        .zip(&means)
        .filter(|(_, m)| **m <= threshold)
        .map(|(p, _)| *p)
        .collect())
}

/// Points within `radius` of `center` (boundary inclusive).
pub fn crop_sphere(cloud: &PointCloud, center: &Point3<f64>, radius: f64) -> PointCloud {
    let r2 = radius * radius;
    cloud
        .points
        .iter()
        .filter(|p| (*p - center).norm_squared() <= r2)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    /// Brute-force version of the statistic, independent of the k-d tree.
    fn brute_means(cloud: &PointCloud, k: usize) -> Vec<f64> {
        cloud
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut d: Vec<f64> = cloud
                    .points
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| (q - p).norm())
                    .collect();
                d.sort_by(f64::total_cmp);
                d[..k].iter().sum::<f64>() / k as f64
            })
            .collect()
    }

    #[test]
    fn tree_statistic_matches_brute_force() {
        let cloud = cube_cloud(500, 3);
        let index = NeighborIndex::new(&cloud.points);
        let fast = mean_neighbor_distances(&cloud, &index, 8);
        for (a, b) in fast.iter().zip(brute_means(&cloud, 8)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_cloud_is_mostly_retained() {
        let cloud = cube_cloud(1000, 11);
        let kept = remove_outliers(&cloud, OutlierParams { k: 16, alpha: 3.0 }).unwrap();
        assert!(kept.len() as f64 >= 0.99 * 1000.0, "kept {}", kept.len());
    }

    #[test]
    fn far_point_is_removed() {
        let mut cloud = cube_cloud(1000, 11);
        cloud.points.push(Point3::new(100.0, 100.0, 100.0));
        // brute-force check that the construction is what we think it is
        let means = brute_means(&cloud, 8);
        let n = means.len() as f64;
        let mu = means.iter().sum::<f64>() / n;
        let sigma = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / n).sqrt();
        assert!(means[1000] > mu + sigma);

        let kept = remove_outliers(&cloud, OutlierParams { k: 8, alpha: 1.0 }).unwrap();
        assert!(!kept.points.contains(&Point3::new(100.0, 100.0, 100.0)));
        // output is a subset of the input
        assert!(kept.points.iter().all(|p| cloud.points.contains(p)));
    }

    #[test]
    fn too_small_cloud_is_an_error() {
        let cloud = cube_cloud(2, 1);
        assert!(matches!(
            remove_outliers(&cloud, OutlierParams { k: 8, alpha: 1.0 }),
            Err(CloudError::TooSmall { size: 2, k: 8 })
        ));
    }

    #[test]
    fn crop_cases() {
        let cloud = cube_cloud(200, 5);
        assert_eq!(crop_sphere(&cloud, &Point3::origin(), 1e12), cloud);
        assert!(crop_sphere(&cloud, &Point3::new(50.0, 0.0, 0.0), 1.0).is_empty());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sphere: PointCloud = (0..500)
            .map(|_| {
                let v = nalgebra::Vector3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                )
                .normalize();
                Point3::from(v)
            })
            .collect();
        assert!(crop_sphere(&sphere, &Point3::origin(), 0.5).is_empty());
    }
}
