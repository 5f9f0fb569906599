//! Four-point congruent sets.
//!
//! A base is four coplanar source points whose two segments `a–b` and `c–d`
//! cross at `e`. The ratios `|a − e| / |a − b|` and `|c − e| / |c − d|` survive
//! any rigid motion, so congruent copies in the target are found by pairing
//! target point pairs of the right lengths whose ratio points coincide.

use nalgebra::{Point3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::icp::{icp_indexed, IcpParams};
use super::metric::rms_closest_indexed;
use super::rigid::estimate_rigid;
use super::{RegistrationError, RegistrationResult};
use crate::cloud::{NeighborIndex, PointCloud};
use crate::model::RigidTransform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CongruentParams {
    /// Expected fraction of the source that is visible in the target.
    pub overlap_estimate: f64,
    /// Correspondence tolerance, meters.
    pub delta: f64,
    /// Points drawn from each cloud for base search and scoring.
    pub sample_size: usize,
    pub num_bases: usize,
    pub coplanarity_tolerance: f64,
    /// Stop searching once a candidate's LCP reaches this.
    pub accept_lcp: f64,
    pub seed: u64,
}

impl Default for CongruentParams {
    fn default() -> Self {
        CongruentParams {
            overlap_estimate: 0.5,
            delta: 0.01,
            sample_size: 500,
            num_bases: 200,
            coplanarity_tolerance: 0.01,
            accept_lcp: 0.9,
            seed: 0,
        }
    }
}

impl CongruentParams {
    pub fn validate(&self) -> Result<(), RegistrationError> {
        let ok = self.overlap_estimate > 0.0
            && self.overlap_estimate <= 1.0
            && self.delta.is_finite()
            && self.delta > 0.0
            && self.coplanarity_tolerance.is_finite()
            && self.coplanarity_tolerance > 0.0
            && self.sample_size >= 4
            && self.num_bases > 0
            && self.accept_lcp > 0.0
            && self.accept_lcp <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(RegistrationError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Closest-approach parameters `(s, u)` of the lines `a + s(b − a)` and
/// `c + u(d − c)`, plus the gap between them at those points.
fn crossing(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>, d: &Point3<f64>) -> Option<(f64, f64, f64)> {
    let (p, q, w) = (b - a, d - c, a - c);
    let (pp, pq, qq) = (p.dot(&p), p.dot(&q), q.dot(&q));
    let den = pp * qq - pq * pq;
    if den <= 1e-12 * pp * qq {
        return None;
    }
    let (pw, qw) = (p.dot(&w), q.dot(&w));
    let s = (pq * qw - qq * pw) / den;
    let u = (pp * qw - pq * pw) / den;
    let gap = ((a + p * s) - (c + q * u)).norm();
    Some((s, u, gap))
}

/// Ratios at which the segments `base[0]–base[1]` and `base[2]–base[3]`
/// cross, if they cross.
pub fn base_invariants(base: &[Point3<f64>; 4], tolerance: f64) -> Option<(f64, f64)> {
    let (s, u, gap) = crossing(&base[0], &base[1], &base[2], &base[3])?;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u) && gap <= tolerance).then_some((s, u))
}

struct Base {
    points: [Point3<f64>; 4],
    ratios: (f64, f64),
    lengths: (f64, f64),
    angle: f64,
}

fn segment_angle(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>, d: &Point3<f64>) -> f64 {
    (b - a).angle(&(d - c))
}

const BASE_TRIES: usize = 64;

fn select_base(points: &[Point3<f64>], span: f64, params: &CongruentParams, rng: &mut ChaCha8Rng) -> Option<Base> {
    let n = points.len();
    for _ in 0..BASE_TRIES {
        let picked = sample(rng, n, 3);
        let (a, b, c) = (points[picked.index(0)], points[picked.index(1)], points[picked.index(2)]);
        let sides = [(b - a).norm(), (c - a).norm(), (c - b).norm()];
        if sides.iter().any(|s| *s < 0.3 * span || *s > span) {
            continue;
        }
        let normal = (b - a).cross(&(c - a));
        if normal.norm() < 0.1 * span * span {
            continue;
        }
        let normal = normal.normalize();

        // fourth point: coplanar and as far from the other three as possible
        let mut best: Option<(f64, [Point3<f64>; 4], (f64, f64))> = None;
        for d in points {
            if (d - a).dot(&normal).abs() > params.coplanarity_tolerance {
                continue;
            }
            let spread = [a, b, c].iter().map(|x| (d - x).norm()).fold(f64::INFINITY, f64::min);
            if spread < 0.3 * span || best.as_ref().is_some_and(|(s, _, _)| *s >= spread) {
                continue;
            }
            for quad in [[a, b, c, *d], [a, c, b, *d], [a, *d, b, c]] {
                if let Some((r1, r2)) = base_invariants(&quad, params.coplanarity_tolerance) {
                    let margin = r1.min(1.0 - r1).min(r2).min(1.0 - r2);
                    if margin > 0.1 {
                        best = Some((spread, quad, (r1, r2)));
                        break;
                    }
                }
            }
        }
        if let Some((_, quad, ratios)) = best {
            return Some(Base {
                points: quad,
                ratios,
                lengths: ((quad[1] - quad[0]).norm(), (quad[3] - quad[2]).norm()),
                angle: segment_angle(&quad[0], &quad[1], &quad[2], &quad[3]),
            });
        }
    }
    None
}

/// Every ordered pair of target sample points, sorted by separation.
struct PairTable {
    pairs: Vec<(f64, u32, u32)>,
}

impl PairTable {
    fn new(points: &[Point3<f64>]) -> Self {
        let n = points.len();
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pairs.push(((points[i] - points[j]).norm(), i as u32, j as u32));
                }
            }
        }
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        PairTable { pairs }
    }

    fn of_length(&self, length: f64, delta: f64) -> &[(f64, u32, u32)] {
        let lo = self.pairs.partition_point(|p| p.0 < length - delta);
        let hi = self.pairs.partition_point(|p| p.0 <= length + delta);
        &self.pairs[lo..hi]
    }
}

/// Candidate target quadruples congruent to `base`.
fn congruent_sets(base: &Base, points: &[Point3<f64>], table: &PairTable, delta: f64) -> Vec<[usize; 4]> {
    let first = table.of_length(base.lengths.0, delta);
    let second = table.of_length(base.lengths.1, delta);
    if first.is_empty() || second.is_empty() {
        return Vec::new();
    }
    let at = |i: u32, j: u32, r: f64| points[i as usize] + (points[j as usize] - points[i as usize]) * r;
    let crossings: Vec<Point3<f64>> = second.iter().map(|&(_, i, j)| at(i, j, base.ratios.1)).collect();
    let crossing_index = NeighborIndex::new(&crossings);
    let angle_tol = 2.0 * delta * (1.0 / base.lengths.0 + 1.0 / base.lengths.1);

    let mut sets = Vec::new();
    for &(_, i, j) in first {
        let e = at(i, j, base.ratios.0);
        crossing_index.for_each_within(&e, delta, |m, _| {
            let (_, k, l) = second[m];
            if k == i || k == j || l == i || l == j {
                return;
            }
            let [i, j, k, l] = [i, j, k, l].map(|x| x as usize);
            let angle = segment_angle(&points[i], &points[j], &points[k], &points[l]);
            if (angle - base.angle).abs() <= angle_tol {
                sets.push([i, j, k, l]);
            }
        });
    }
    sets.sort_unstable();
    sets
}

/// Number of `source` points within `delta` of the target under `transform`,
/// or `None` as soon as `needed` can no longer be reached.
fn common_points(
    source: &[Point3<f64>],
    target: &NeighborIndex,
    transform: &RigidTransform,
    delta: f64,
    needed: usize,
) -> Option<usize> {
    let mut count = 0;
    for (seen, p) in source.iter().enumerate() {
        if target.any_within(&transform.transform_point(p), delta) {
            count += 1;
        }
        if count + (source.len() - seen - 1) < needed {
            return None;
        }
    }
    Some(count)
}

/// Counts common points in growing prefixes, dropping a candidate as soon as
/// a prefix falls clearly behind the rate needed to beat the leader.
fn staged_count(
    source: &[Point3<f64>],
    target: &NeighborIndex,
    transform: &RigidTransform,
    delta: f64,
    needed: usize,
) -> Option<usize> {
    let n = source.len();
    for (stage, slack) in [(24, 0.5), (96, 0.8)] {
        if stage >= n {
            break;
        }
        let want = ((needed as f64 * stage as f64 / n as f64) * slack).floor() as usize;
        common_points(&source[..stage], target, transform, delta, want.max(1))?;
    }
    common_points(source, target, transform, delta, needed)
}

/// Up to `size` distinct points in random order.
fn subsample(cloud: &PointCloud, size: usize, rng: &mut ChaCha8Rng) -> Vec<Point3<f64>> {
    let size = size.min(cloud.len());
    sample(rng, cloud.len(), size).into_iter().map(|i| cloud.points[i]).collect()
}

fn extent(points: &[Point3<f64>]) -> f64 {
    let (lo, hi) = points.iter().fold(
        (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(&p.coords), hi.sup(&p.coords)),
    );
    (hi - lo).norm()
}


/// Global rigid registration of `source` onto `target` with no initial guess.
pub fn congruent_set_register(
    source: &PointCloud,
    target: &PointCloud,
    params: &CongruentParams,
) -> Result<RegistrationResult, RegistrationError> {
    let index = NeighborIndex::new(&target.points);
    congruent_indexed(source, target, &index, params)
}

pub(crate) fn congruent_indexed(
    source: &PointCloud,
    target: &PointCloud,
    target_index: &NeighborIndex,
    params: &CongruentParams,
) -> Result<RegistrationResult, RegistrationError> {
    params.validate()?;
    for cloud in [source, target] {
        if cloud.len() < 4 {
            return Err(RegistrationError::TooFewPoints { size: cloud.len(), needed: 4 });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let src = subsample(source, params.sample_size, &mut rng);
    let tgt = subsample(target, params.sample_size, &mut rng);
    let table = PairTable::new(&tgt);
    let span = params.overlap_estimate * extent(&src);
    let delta = params.delta;

    let accept = ((params.accept_lcp * src.len() as f64).ceil() as usize).max(1);
    let mut best: Option<(usize, RigidTransform)> = None;
    let mut bases_found = 0;
    for _ in 0..params.num_bases {
        if best.as_ref().is_some_and(|(count, _)| *count >= accept) {
            break;
        }
        let Some(base) = select_base(&src, span, params, &mut rng) else {
            continue;
        };
        bases_found += 1;
        for set in congruent_sets(&base, &tgt, &table, delta) {
            let matched = set.map(|i| tgt[i]);
            let Ok(candidate) = estimate_rigid(&base.points, &matched) else {
                continue;
            };
            let fit = base
                .points
                .iter()
                .zip(&matched)
                .map(|(p, m)| (candidate.transform_point(p) - m).norm())
                .fold(0.0, f64::max);
            if fit > 3.0 * delta {
                continue;
            }
            let needed = best.as_ref().map_or(1, |(c, _)| c + 1);
            if let Some(count) = staged_count(&src, target_index, &candidate, delta, needed) {
                best = Some((count, candidate));
                if count >= accept {
                    break;
                }
            }
        }
    }
    if bases_found == 0 {
        return Err(RegistrationError::NoCoplanarBase);
    }
    let (mut count, mut transform) = best.unwrap_or((0, RigidTransform::identity()));

    if count > 0 {
        // least-squares polish restricted to delta-scale correspondences
        let polish = IcpParams {
            max_correspondence_distance: 2.0 * delta,
            ..IcpParams::default()
        };
        let sample_cloud = PointCloud { points: src.clone() };
        if let Ok((refined, _)) = icp_indexed(&sample_cloud, target_index, &transform, &polish) {
            let floor = count - count / 20;
            if let Some(refined_count) = common_points(&src, target_index, &refined.transform, delta, floor.max(1)) {
                transform = refined.transform;
                count = refined_count;
            }
        }
    }

    let lcp = count as f64 / src.len() as f64;
    Ok(RegistrationResult {
        transform,
        rms: rms_closest_indexed(source, target_index, &transform)?,
        converged: lcp >= 0.5 * params.overlap_estimate,
        iterations: bases_found,
        lcp: Some(lcp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::sample_mesh;
    use rand::Rng;
    use crate::model::samples;

    fn arm_cloud(n: usize, seed: u64) -> PointCloud {
        let model = samples::kr5_like();
        let mesh = model.surface_mesh(&[0.3, -0.5, 0.9, 0.2, 0.6, -0.4], 0.02).unwrap();
        sample_mesh(&mesh, n, seed).unwrap()
    }

    #[test]
    fn invariants_survive_rigid_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 200 {
            let mut quad = [Point3::origin(); 4];
            let (u, v) = (Vector3::new(1.0, 0.2, -0.3), Vector3::new(-0.1, 0.8, 0.4));
            for p in quad.iter_mut() {
                *p = Point3::origin() + u * rng.random_range(-1.0..1.0) + v * rng.random_range(-1.0..1.0);
            }
            let Some((r1, r2)) = base_invariants(&quad, 1e-9) else {
                continue;
            };
            let g = RigidTransform::from_xyz_rpy(
                [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
                [rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5), rng.random_range(-3.0..3.0)],
            );
            let moved = quad.map(|p| g.transform_point(&p));
            let (s1, s2) = base_invariants(&moved, 1e-9).unwrap();
            assert!((r1 - s1).abs() < 1e-9 && (r2 - s2).abs() < 1e-9);
            checked += 1;
        }
    }

    #[test]
    fn crossing_ratio_of_a_square() {
        let sq = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert_eq!(base_invariants(&sq, 1e-12), Some((0.5, 0.5)));
        let skew = [sq[0], sq[1], sq[2], Point3::new(0.0, 1.0, 0.5)];
        assert_eq!(base_invariants(&skew, 1e-3), None);
    }

    #[test]
    fn identical_clouds() {
        let c = arm_cloud(6000, 4);
        let r = congruent_set_register(&c, &c, &CongruentParams::default()).unwrap();
        let (dt, dr) = r.transform.pose_error(&RigidTransform::identity());
        assert!(r.lcp.unwrap() >= 0.99, "{r:?}");
        assert!(dt < 1e-3 && dr < 0.5f64.to_radians(), "{dt} {dr}");
        assert!(r.converged);
    }

    #[test]
    fn recovers_a_large_motion() {
        let c = arm_cloud(6000, 5);
        let truth = RigidTransform::from_xyz_rpy([0.4, -1.0, 0.3], [0.5, -0.3, 2.0]);
        let target = arm_cloud(6000, 6).transformed(&truth);
        let r = congruent_set_register(&c, &target, &CongruentParams::default()).unwrap();
        let (dt, dr) = r.transform.pose_error(&truth);
        assert!(dt < 0.05 && dr < 5f64.to_radians(), "{dt} {dr} {r:?}");
    }

    #[test]
    fn deterministic_and_checked() {
        let c = arm_cloud(2000, 7);
        let p = CongruentParams::default();
        assert_eq!(congruent_set_register(&c, &c, &p).unwrap(), congruent_set_register(&c, &c, &p).unwrap());
        let tiny: PointCloud = c.points[..3].iter().copied().collect();
        assert!(matches!(
            congruent_set_register(&tiny, &c, &p),
            Err(RegistrationError::TooFewPoints { .. })
        ));
    }
}
