use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::decompose::{decompose, scaled_target, GuidanceUpdate};
use super::{GuidanceConfig, GuidanceError};
use crate::model::{Configuration, RobotModel};

/// A timestamped hand position in the robot base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "SampleRecord", into = "SampleRecord")]
pub struct HandSample {
    pub t: f64,
    pub position: Point3<f64>,
    pub tracked: bool,
}

/// `{t, x, y, z, tracked}` as it appears in trajectory files.
#[derive(Serialize, Deserialize)]
struct SampleRecord {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    #[serde(default = "tracked_default")]
    tracked: bool,
}

fn tracked_default() -> bool {
    true
}

impl From<SampleRecord> for HandSample {
    fn from(r: SampleRecord) -> Self {
        HandSample {
            t: r.t,
            position: Point3::new(r.x, r.y, r.z),
            tracked: r.tracked,
        }
    }
}

impl From<HandSample> for SampleRecord {
    fn from(s: HandSample) -> Self {
        SampleRecord {
            t: s.t,
            x: s.position.x,
            y: s.position.y,
            z: s.position.z,
            tracked: s.tracked,
        }
    }
}

impl HandSample {
    pub fn new(t: f64, position: Point3<f64>) -> Self {
        HandSample {
            t,
            position,
            tracked: true,
        }
    }

    pub fn untracked(t: f64) -> Self {
        HandSample {
            t,
            position: Point3::origin(),
            tracked: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Engagement {
    Idle,
    Engaged { zone: usize, last: Point3<f64> },
}

impl Engagement {
    pub fn zone(&self) -> Option<usize> {
        match self {
            Engagement::Idle => None,
            Engagement::Engaged { zone, .. } => Some(*zone),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceState {
    pub mode: Engagement,
    pub q: Configuration,
    pub last_t: Option<f64>,
}

impl GuidanceState {
    pub fn new(q: Configuration) -> Self {
        GuidanceState {
            mode: Engagement::Idle,
            q,
            last_t: None,
        }
    }
}

/// Advances one session by one hand sample.
///
/// A sample that enters a zone (from outside, or from a different zone) only
/// arms tracking; motion starts with the following sample in the same zone.
pub fn session_step(
    state: &GuidanceState,
    model: &RobotModel,
    sample: &HandSample,
    config: &GuidanceConfig,
) -> Result<(GuidanceState, Option<GuidanceUpdate>), GuidanceError> {
    if let Some(previous) = state.last_t {
        if !(sample.t > previous) {
            return Err(GuidanceError::OutOfOrder { previous, t: sample.t });
        }
    }
    model.check_configuration(&state.q)?;
    let mut next = GuidanceState {
        mode: Engagement::Idle,
        q: state.q.clone(),
        last_t: Some(sample.t),
    };
    if !sample.tracked {
        return Ok((next, None));
    }
    let Some(zone) = model.active_zone(&state.q, &sample.position, config.zone_margin) else {
        return Ok((next, None));
    };
    next.mode = Engagement::Engaged {
        zone,
        last: sample.position,
    };
    match state.mode {
        Engagement::Engaged { zone: held, last } if held == zone => {
            let target = scaled_target(&last, &sample.position, config.sensitivity);
            let update = decompose(model, &state.q, &last, &target, zone, config)?;
            for (a, d) in next.q.iter_mut().zip(&update.dq) {
                *a += d;
            }
            Ok((next, Some(update)))
        }
        _ => Ok((next, None)),
    }
}
