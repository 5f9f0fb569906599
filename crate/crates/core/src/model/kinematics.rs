use nalgebra::{Point3, Unit, Vector3};

use super::{ModelError, RigidTransform, RobotModel};
use crate::cloud::TriangleMesh;

/// World placement of a revolute joint: a point on its axis and the axis
/// direction, plus the full frame of the link it drives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointFrame {
    pub origin: Point3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub frame: RigidTransform,
}

impl RobotModel {
    /// Link poses in the model base frame: `pose[0]` is the base link and
    /// `pose[k + 1] = pose[k] ∘ origin[k] ∘ Rot(axis[k], q[k])`.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Vec<RigidTransform>, ModelError> {
        self.check_configuration(q)?;
        let mut poses = Vec::with_capacity(self.links.len());
        poses.push(RigidTransform::identity());
        for (joint, angle) in self.joints.iter().zip(q) {
            let parent = poses.last().unwrap();
            let rotation = RigidTransform::from_axis_angle(&joint.axis, *angle);
            poses.push(parent.compose(joint.origin_transform()).compose(&rotation));
        }
        Ok(poses)
    }

    /// Frames of every joint at `q`.
    pub fn joint_frames(&self, q: &[f64]) -> Result<Vec<JointFrame>, ModelError> {
        let poses = self.forward_kinematics(q)?;
        Ok(self
            .joints
            .iter()
            .enumerate()
            .map(|(k, joint)| {
                let frame = poses[k + 1];
                JointFrame {
                    origin: frame.origin(),
                    axis: Unit::new_normalize(frame.transform_vector(&joint.axis)),
                    frame,
                }
            })
            .collect())
    }

    pub fn joint_world_frame(&self, q: &[f64], k: usize) -> Result<JointFrame, ModelError> {
        if k >= self.joints.len() {
            return Err(ModelError::JointIndex {
                index: k,
                count: self.joints.len(),
            });
        }
        Ok(self.joint_frames(q)?[k])
    }

    /// Distance from `point` to the zone of joint `k` (its child link's
    /// collision primitive), or `None` if that link has no primitive.
    fn zone_distance(&self, poses: &[RigidTransform], k: usize, point: &Point3<f64>) -> Option<f64> {
        let collision = self.links.get(k + 1)?.collision.as_ref()?;
        let placement = poses[k + 1].compose(collision.placement());
        let local = placement.inverse().transform_point(point);
        Some(collision.shape.distance(&local))
    }

    /// Whether `point` lies within `margin` of joint `k`'s zone (inclusive).
    ///
    /// Total: out-of-range indices and malformed configurations yield `false`.
    pub fn zone_contains(&self, q: &[f64], k: usize, point: &Point3<f64>, margin: f64) -> bool {
        let Ok(poses) = self.forward_kinematics(q) else {
            return false;
        };
        k < self.joints.len()
            && self
                .zone_distance(&poses, k, point)
                .is_some_and(|d| d <= margin)
    }

    /// Most distal joint whose zone contains `point`.
    pub fn active_zone(&self, q: &[f64], point: &Point3<f64>, margin: f64) -> Option<usize> {
        let poses = self.forward_kinematics(q).ok()?;
        (0..self.joints.len())
            .rev()
            .find(|&k| self.zone_distance(&poses, k, point).is_some_and(|d| d <= margin))
    }

    /// Tessellated collision surfaces of all links (base included) at `q`,
    /// in the model base frame.
    pub fn surface_mesh(&self, q: &[f64], max_edge: f64) -> Result<TriangleMesh, ModelError> {
        let poses = self.forward_kinematics(q)?;
        let mut mesh = TriangleMesh::default();
        for (link, pose) in self.links.iter().zip(&poses) {
            if let Some(c) = &link.collision {
                let placed = pose.compose(c.placement());
                mesh.append(&c.shape.tessellate(max_edge).transformed(&placed));
            }
        }
        Ok(mesh)
    }

    /// Center of the base link's collision primitive, or the base origin.
    pub fn base_center(&self) -> Point3<f64> {
        match &self.links[0].collision {
            Some(c) => c.placement().transform_point(&c.shape.centroid()),
            None => Point3::origin(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model, samples};
    use approx::assert_relative_eq;
    use nalgebra::Matrix4;
    use std::f64::consts::FRAC_PI_2;

    /// Homogeneous-matrix chain, written independently of `RigidTransform`.
    fn oracle_fk(model: &RobotModel, q: &[f64]) -> Vec<Matrix4<f64>> {
        fn rpy_matrix(xyz: [f64; 3], rpy: [f64; 3]) -> Matrix4<f64> {
            let (r, p, y) = (rpy[0], rpy[1], rpy[2]);
            let rx = Matrix4::new(
                1.0, 0.0, 0.0, 0.0, 0.0, r.cos(), -r.sin(), 0.0, 0.0, r.sin(), r.cos(), 0.0, 0.0,
                0.0, 0.0, 1.0,
            );
            let ry = Matrix4::new(
                p.cos(), 0.0, p.sin(), 0.0, 0.0, 1.0, 0.0, 0.0, -p.sin(), 0.0, p.cos(), 0.0, 0.0,
                0.0, 0.0, 1.0,
            );
            let rz = Matrix4::new(
                y.cos(), -y.sin(), 0.0, 0.0, y.sin(), y.cos(), 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
                0.0, 0.0, 1.0,
            );
            let mut t = Matrix4::identity();
            t[(0, 3)] = xyz[0];
            t[(1, 3)] = xyz[1];
            t[(2, 3)] = xyz[2];
            t * rz * ry * rx
        }
        fn axis_angle(a: [f64; 3], th: f64) -> Matrix4<f64> {
            // Rodrigues
            let (x, y, z) = (a[0], a[1], a[2]);
            let (c, s) = (th.cos(), th.sin());
            let v = 1.0 - c;
            Matrix4::new(
                c + x * x * v, x * y * v - z * s, x * z * v + y * s, 0.0,
                y * x * v + z * s, c + y * y * v, y * z * v - x * s, 0.0,
                z * x * v - y * s, z * y * v + x * s, c + z * z * v, 0.0,
                0.0, 0.0, 0.0, 1.0,
            )
        }
        let mut out = vec![Matrix4::identity()];
        for (j, a) in model.joints.iter().zip(q) {
            let m = out.last().unwrap()
                * rpy_matrix(j.origin.xyz, j.origin.rpy)
                * axis_angle(j.axis.into_inner().into(), *a);
            out.push(m);
        }
        out
    }

    fn random_q(model: &RobotModel, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        model
            .joints
            .iter()
            .map(|j| rng.random_range(j.limits.lower..=j.limits.upper))
            .collect()
    }

    #[test]
    fn zero_configuration_composes_origins() {
        let m = samples::kr5_like();
        let poses = m.forward_kinematics(&m.zero_configuration()).unwrap();
        let mut acc = RigidTransform::identity();
        for (k, j) in m.joints.iter().enumerate() {
            acc = acc * j.origin.transform();
            let (dt, dr) = poses[k + 1].pose_error(&acc);
            assert!(dt < 1e-12 && dr < 1e-12);
        }
        assert_eq!(poses.len(), m.link_count());
    }

    #[test]
    fn single_z_joint_quarter_turn() {
        let m = load_model(
            r#"{"name": "z", "links": [{"name": "a"}, {"name": "b"}],
                "joints": [{"name": "j", "parent": "a", "child": "b", "axis": [0, 0, 1]}]}"#,
        )
        .unwrap();
        let poses = m.forward_kinematics(&[FRAC_PI_2]).unwrap();
        let x = poses[1].transform_vector(&Vector3::x());
        assert_relative_eq!(x, Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn matches_homogeneous_oracle() {
        for model in [samples::kr5_like(), samples::seven_joint()] {
            for seed in 0..20 {
                let q = random_q(&model, seed);
                let poses = model.forward_kinematics(&q).unwrap();
                let oracle = oracle_fk(&model, &q);
                for (p, m) in poses.iter().zip(&oracle) {
                    let r = p.rotation.matrix();
                    for i in 0..3 {
                        assert_relative_eq!(p.translation[i], m[(i, 3)], epsilon = 1e-12);
                        for j in 0..3 {
                            assert_relative_eq!(r[(i, j)], m[(i, j)], epsilon = 1e-12);
                        }
                    }
                }
                let frames = model.joint_frames(&q).unwrap();
                for (k, f) in frames.iter().enumerate() {
                    let m = &oracle[k + 1];
                    let a = model.joints[k].axis.into_inner();
                    let axis = m.fixed_view::<3, 3>(0, 0) * a;
                    assert_relative_eq!(f.axis.into_inner(), axis, epsilon = 1e-12);
                    assert_relative_eq!(f.origin.coords, m.fixed_view::<3, 1>(0, 3).into_owned(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn joint_frames() {
        let m = load_model(
            r#"{"name": "zx", "links": [{"name": "a"}, {"name": "b"}, {"name": "c"}],
                "joints": [{"name": "j0", "parent": "a", "child": "b", "axis": [0, 0, 1]},
                           {"name": "j1", "parent": "b", "child": "c", "axis": [1, 0, 0],
                            "origin": {"xyz": [0.5, 0, 0]}}]}"#,
        )
        .unwrap();
        for q0 in [0.0, 1.0, -2.0] {
            let base = m.joint_world_frame(&[q0, 0.3], 0).unwrap();
            assert_eq!(base.origin, Point3::origin());
        }
        let child = m.joint_world_frame(&[FRAC_PI_2, 0.0], 1).unwrap();
        assert_relative_eq!(child.axis.into_inner(), Vector3::y(), epsilon = 1e-15);
        assert_relative_eq!(child.origin, Point3::new(0.0, 0.5, 0.0), epsilon = 1e-15);
        assert!(matches!(
            m.joint_world_frame(&[0.0, 0.0], 2),
            Err(ModelError::JointIndex { index: 2, count: 2 })
        ));
        assert!(matches!(
            m.forward_kinematics(&[0.0]),
            Err(ModelError::Dimension { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn chain_split_composition() {
        let model = samples::seven_joint();
        let q = random_q(&model, 99);
        let poses = model.forward_kinematics(&q).unwrap();
        for split in 1..model.joint_count() {
            // distal sub-chain evaluated from the split link
            let mut acc = RigidTransform::identity();
            for k in split..model.joint_count() {
                let j = &model.joints[k];
                acc = acc * *j.origin_transform() * RigidTransform::from_axis_angle(&j.axis, q[k]);
            }
            let (dt, dr) = (poses[split] * acc).pose_error(poses.last().unwrap());
            assert!(dt < 1e-9 && dr < 1e-9);
        }
    }

    fn unit_box_arm() -> RobotModel {
        load_model(
            r#"{"name": "boxes", "links": [
                    {"name": "base"},
                    {"name": "l1", "collision": {"type": "box", "half_extents": [0.5, 0.5, 0.5], "origin": {"xyz": [1, 0, 0]}}},
                    {"name": "l2", "collision": {"type": "box", "half_extents": [0.5, 0.5, 0.5], "origin": {"xyz": [1, 0, 0]}}},
                    {"name": "l3", "collision": {"type": "box", "half_extents": [0.5, 0.5, 0.5], "origin": {"xyz": [1, 0, 0]}}},
                    {"name": "l4", "collision": {"type": "box", "half_extents": [0.5, 0.5, 0.5], "origin": {"xyz": [1, 0, 0]}}}],
                "joints": [
                    {"name": "j0", "parent": "base", "child": "l1", "axis": [0, 0, 1]},
                    {"name": "j1", "parent": "l1", "child": "l2", "axis": [0, 0, 1], "origin": {"xyz": [2, 0, 0]}},
                    {"name": "j2", "parent": "l2", "child": "l3", "axis": [0, 0, 1], "origin": {"xyz": [2, 0, 0]}},
                    {"name": "j3", "parent": "l3", "child": "l4", "axis": [0, 0, 1], "origin": {"xyz": [1, 0, 0]}}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn zone_membership() {
        let m = unit_box_arm();
        let q = [0.0; 4];
        // l1 occupies x in [0.5, 1.5]
        assert!(m.zone_contains(&q, 0, &Point3::new(1.0, 0.0, 0.0), 0.0));
        assert!(!m.zone_contains(&q, 0, &Point3::new(11.0, 0.0, 0.0), 0.05));
        // exactly margin away from the y = 0.5 face (closed-form box distance)
        let p = Point3::new(1.0, 0.75, 0.0);
        assert!(m.zone_contains(&q, 0, &p, 0.25));
        assert!(!m.zone_contains(&q, 0, &p, 0.25 - 1e-9));
        assert!(!m.zone_contains(&q, 7, &p, 0.25));
    }

    #[test]
    fn active_zone_prefers_distal() {
        let m = unit_box_arm();
        let q = [0.0; 4];
        assert_eq!(m.active_zone(&q, &Point3::new(0.0, 5.0, 0.0), 0.05), None);
        // l3 spans x in [4.5, 5.5], l4 spans [5.5, 6.5]
        assert_eq!(m.active_zone(&q, &Point3::new(6.2, 0.0, 0.0), 0.05), Some(3));
        assert_eq!(m.active_zone(&q, &Point3::new(3.0, 0.0, 0.0), 0.05), Some(1));
        let shared = Point3::new(5.5, 0.0, 0.0);
        assert!(m.zone_contains(&q, 2, &shared, 0.05) && m.zone_contains(&q, 3, &shared, 0.05));
        assert_eq!(m.active_zone(&q, &shared, 0.05), Some(3));
    }

    #[test]
    fn surface_mesh_covers_every_link() {
        let m = samples::kr5_like();
        let mesh = m.surface_mesh(&m.zero_configuration(), 0.05).unwrap();
        let area: f64 = m
            .links
            .iter()
            .filter_map(|l| l.collision.as_ref())
            .map(|c| c.shape.surface_area())
            .sum();
        assert!((mesh.area() - area).abs() / area < 0.01);
    }
}
