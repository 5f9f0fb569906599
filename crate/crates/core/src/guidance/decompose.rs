use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::{project_onto_plane, rotate_about, signed_angle_about_axis};
use super::{GuidanceConfig, GuidanceError, LimitPolicy};
use crate::model::{JointLimits, ModelError, RobotModel};

/// Outcome of one joint's share of a hand displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStep {
    /// Angle the joint would need, after the per-step cap.
    pub desired: f64,
    /// Angle actually granted by the limit policy.
    pub applied: f64,
    pub rotated: Point3<f64>,
    pub residual: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceUpdate {
    pub dq: Vec<f64>,
    pub residual: Vector3<f64>,
    pub joints_used: Vec<usize>,
}

impl GuidanceUpdate {
    pub fn is_motionless(&self) -> bool {
        self.dq.iter().all(|d| *d == 0.0)
    }
}

/// `previous + sensitivity · (raw − previous)`.
pub fn scaled_target(previous: &Point3<f64>, raw: &Point3<f64>, sensitivity: f64) -> Point3<f64> {
    previous + (raw - previous) * sensitivity
}

fn apply_limits(angle: f64, desired: f64, limits: &JointLimits, policy: LimitPolicy) -> f64 {
    let goal = angle + desired;
    if limits.contains(goal) {
        return desired;
    }
    match policy {
        LimitPolicy::Reject => 0.0,
        LimitPolicy::Clamp => {
            let mut granted = limits.clamp(goal) - angle;
            // the subtraction can round the sum one ulp past the limit
            while granted != 0.0 && !limits.contains(angle + granted) {
                granted = if granted > 0.0 { granted.next_down() } else { granted.next_up() };
            }
            // a joint already beyond its limit is never pushed backwards
            if granted * desired > 0.0 {
                granted
            } else {
                0.0
            }
        }
    }
}

/// Turns `hand_prev` about the joint axis through `origin` toward `hand_cur`.
pub fn joint_step(
    origin: &Point3<f64>,
    axis: &Unit<Vector3<f64>>,
    angle: f64,
    limits: &JointLimits,
    hand_prev: &Point3<f64>,
    hand_cur: &Point3<f64>,
    config: &GuidanceConfig,
) -> JointStep {
    let r = project_onto_plane(&(hand_prev - origin), axis);
    let t = r + project_onto_plane(&(hand_cur - hand_prev), axis);
    let Ok(raw) = signed_angle_about_axis(&r, &t, axis, config.axis_tol) else {
        return JointStep {
            desired: 0.0,
            applied: 0.0,
            rotated: *hand_prev,
            residual: hand_cur - hand_prev,
        };
    };
    let desired = raw.clamp(-config.max_step_angle, config.max_step_angle);
    let applied = apply_limits(angle, desired, limits, config.limit_policy);
    let rotated = if applied == 0.0 {
        *hand_prev
    } else {
        rotate_about(hand_prev, origin, axis, applied)
    };
    JointStep {
        desired,
        applied,
        rotated,
        residual: hand_cur - rotated,
    }
}

/// Spreads the move `hand_prev → hand_cur` over joints `start, start − 1, …, 0`.
///
/// `hand_cur` is taken as already scaled by the sensitivity (see
/// [`scaled_target`]).
pub fn decompose(
    model: &RobotModel,
    q: &[f64],
    hand_prev: &Point3<f64>,
    hand_cur: &Point3<f64>,
    start: usize,
    config: &GuidanceConfig,
) -> Result<GuidanceUpdate, GuidanceError> {
    decompose_traced(model, q, hand_prev, hand_cur, start, config).map(|(update, _)| update)
}

/// [`decompose`] plus every joint step in the order it was taken.
pub fn decompose_traced(
    model: &RobotModel,
    q: &[f64],
    hand_prev: &Point3<f64>,
    hand_cur: &Point3<f64>,
    start: usize,
    config: &GuidanceConfig,
) -> Result<(GuidanceUpdate, Vec<(usize, JointStep)>), GuidanceError> {
    let frames = model.joint_frames(q)?;
    if start >= frames.len() {
        return Err(ModelError::JointIndex {
            index: start,
            count: frames.len(),
        }
        .into());
    }

    let mut dq = vec![0.0; model.joint_count()];
    let mut joints_used = Vec::new();
    let mut steps = Vec::new();
    let mut prev = *hand_prev;
    let mut residual = hand_cur - hand_prev;
    for k in (0..=start).rev() {
        if residual.norm() < config.residual_tol {
            break;
        }
        let f = &frames[k];
        let step = joint_step(&f.origin, &f.axis, q[k], &model.joints[k].limits, &prev, hand_cur, config);
        dq[k] = step.applied;
        joints_used.push(k);
        steps.push((k, step));
        prev = step.rotated;
        residual = step.residual;
    }
    Ok((
        GuidanceUpdate {
            dq,
            residual,
            joints_used,
        },
        steps,
    ))
}
