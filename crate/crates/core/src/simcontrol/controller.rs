//! Per-joint online trapezoidal interpolation.
//!
//! Every tick replans each joint from its current position and velocity to
//! the target with zero final velocity, then follows that plan for `dt`.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::model::RobotModel;

pub const DEFAULT_MAX_ACCELERATION: f64 = 2.0;

/// Distance below which a joint at rest counts as arrived.
const ARRIVED: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub max_velocity: Vec<f64>,
    pub max_acceleration: Vec<f64>,
}

impl MotionLimits {
    pub fn from_model(model: &RobotModel, max_acceleration: f64) -> Self {
        MotionLimits {
            max_velocity: model.joints.iter().map(|j| j.limits.max_velocity).collect(),
            max_acceleration: vec![max_acceleration; model.joint_count()],
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.max_velocity.len() != self.max_acceleration.len() {
            return Err(SimError::Dimension {
                expected: self.max_velocity.len(),
                got: self.max_acceleration.len(),
            });
        }
        let bad = self
            .max_velocity
            .iter()
            .chain(&self.max_acceleration)
            .find(|v| !(v.is_finite() && **v > 0.0));
        match bad {
            Some(v) => Err(SimError::InvalidLimits(format!("limit {v} is not positive"))),
            None => Ok(()),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.max_velocity.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub target: Vec<f64>,
}

impl ControllerState {
    /// At rest at `position`, holding it.
    pub fn at_rest(position: Vec<f64>) -> Self {
        ControllerState {
            velocity: vec![0.0; position.len()],
            target: position.clone(),
            position,
        }
    }

    pub fn is_settled(&self) -> bool {
        self.position == self.target && self.velocity.iter().all(|v| *v == 0.0)
    }
}

/// Constant-acceleration pieces `(duration, acceleration)`.
type Plan = Vec<(f64, f64)>;

/// Time-optimal rest-to-rest-or-moving plan for one joint.
fn plan(position: f64, velocity: f64, target: f64, vmax: f64, amax: f64) -> Plan {
    let error = target - position;
    let stopping = velocity * velocity.abs() / (2.0 * amax);
    let overshoot = error - stopping;
    if overshoot.abs() <= ARRIVED {
        return vec![(velocity.abs() / amax, -velocity.signum() * amax)];
    }
    let s = overshoot.signum();
    let u0 = s * velocity;
    let distance = s * error;
    let mut pieces = Vec::with_capacity(3);
    if u0 > vmax {
        let d0 = (u0 * u0 - vmax * vmax) / (2.0 * amax);
        let cruise = (distance - d0 - vmax * vmax / (2.0 * amax)) / vmax;
        pieces.push(((u0 - vmax) / amax, -amax));
        pieces.push((cruise.max(0.0), 0.0));
        pieces.push((vmax / amax, -amax));
    } else {
        let peak = (amax * distance + 0.5 * u0 * u0).sqrt();
        if peak <= vmax {
            pieces.push(((peak - u0) / amax, amax));
            pieces.push((peak / amax, -amax));
        } else {
            let ramp = (vmax * vmax - u0 * u0) / (2.0 * amax);
            let cruise = (distance - ramp - vmax * vmax / (2.0 * amax)) / vmax;
            pieces.push(((vmax - u0) / amax, amax));
            pieces.push((cruise.max(0.0), 0.0));
            pieces.push((vmax / amax, -amax));
        }
    }
    pieces.into_iter().map(|(d, a)| (d.max(0.0), s * a)).collect()
}

fn advance(position: f64, velocity: f64, target: f64, vmax: f64, amax: f64, dt: f64) -> (f64, f64) {
    if (target - position).abs() <= ARRIVED && velocity == 0.0 {
        return (target, 0.0);
    }
    let pieces = plan(position, velocity, target, vmax, amax);
    let total: f64 = pieces.iter().map(|p| p.0).sum();
    if total <= dt {
        return (target, 0.0);
    }
    let (mut x, mut v, mut left) = (position, velocity, dt);
    for (duration, accel) in pieces {
        let tau = duration.min(left);
        x += v * tau + 0.5 * accel * tau * tau;
        v += accel * tau;
        left -= tau;
        if left <= 0.0 {
            break;
        }
    }
    (x, v.clamp(-vmax.max(velocity.abs()), vmax.max(velocity.abs())))
}

/// Advances every joint by `dt` toward its target.
///
/// A state whose dimensions disagree with `limits`, or a non-positive `dt`,
/// is returned unchanged.
pub fn controller_tick(state: &ControllerState, limits: &MotionLimits, dt: f64) -> ControllerState {
    let n = limits.joint_count();
    if !(dt > 0.0) || state.position.len() != n || state.velocity.len() != n || state.target.len() != n {
        return state.clone();
    }
    let mut next = state.clone();
    for i in 0..n {
        let (x, v) = advance(
            state.position[i],
            state.velocity[i],
            state.target[i],
            limits.max_velocity[i],
            limits.max_acceleration[i],
            dt,
        );
        next.position[i] = x;
        next.velocity[i] = v;
    }
    next
}
