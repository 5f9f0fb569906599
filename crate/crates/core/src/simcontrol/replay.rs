//! Batch driver: recorded hand samples through guidance and the controller.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::controller::{controller_tick, ControllerState, MotionLimits, DEFAULT_MAX_ACCELERATION};
use super::SimError;
use crate::guidance::{session_step, GuidanceConfig, GuidanceState, HandSample};
use crate::model::{Configuration, RobotModel};

pub const DEFAULT_TICK: f64 = 1.0 / 250.0;
pub const DEFAULT_SAMPLE_RATE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplayConfig {
    pub guidance: GuidanceConfig,
    pub dt: f64,
    pub max_acceleration: f64,
    /// Starting configuration; zeros when absent.
    pub initial: Option<Configuration>,
    /// Longest the controller may keep moving after the last sample, seconds.
    pub settle_timeout: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            guidance: GuidanceConfig::default(),
            dt: DEFAULT_TICK,
            max_acceleration: DEFAULT_MAX_ACCELERATION,
            initial: None,
            settle_timeout: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub q: Vec<f64>,
}

/// Reads one hand sample per non-blank line.
pub fn parse_samples(text: &str) -> Result<Vec<HandSample>, SimError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| SimError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn write_samples(samples: &[HandSample]) -> String {
    lines(samples)
}

pub fn write_trajectory(records: &[TrajectoryRecord]) -> String {
    lines(records)
}

fn lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        writeln!(out, "{}", serde_json::to_string(item).expect("plain data serializes")).unwrap();
    }
    out
}

/// Plays `samples` against a simulated arm.
///
/// The controller ticks on a fixed grid starting at the first sample's time
/// and one record is emitted per tick. Each sample updates the commanded
/// configuration once the grid reaches its timestamp. After the last sample
/// the arm runs until it settles or `settle_timeout` expires.
pub fn replay(
    model: &RobotModel,
    samples: &[HandSample],
    config: &ReplayConfig,
) -> Result<Vec<TrajectoryRecord>, SimError> {
    config.guidance.validate()?;
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(SimError::InvalidSpec(format!("tick must be positive, got {}", config.dt)));
    }
    let limits = MotionLimits::from_model(model, config.max_acceleration);
    limits.validate()?;
    let q0 = config.initial.clone().unwrap_or_else(|| model.zero_configuration());
    model.check_configuration(&q0)?;

    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let t0 = first.t;
    let clock = |k: u64| t0 + k as f64 * config.dt;
    let mut guidance = GuidanceState::new(q0.clone());
    let mut arm = ControllerState::at_rest(q0.0);
    let mut records = Vec::new();
    let mut k = 0u64;
    let tick = |arm: &mut ControllerState, k: &mut u64, records: &mut Vec<TrajectoryRecord>| {
        *arm = controller_tick(arm, &limits, config.dt);
        *k += 1;
        records.push(TrajectoryRecord {
            t: clock(*k),
            q: arm.position.clone(),
        });
    };

    for sample in samples {
        while clock(k) < sample.t {
            tick(&mut arm, &mut k, &mut records);
        }
        let (next, _) = session_step(&guidance, model, sample, &config.guidance)?;
        guidance = next;
        arm.target = guidance.q.0.clone();
    }
    let deadline = clock(k) + config.settle_timeout;
    while !arm.is_settled() && clock(k) < deadline {
        tick(&mut arm, &mut k, &mut records);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::samples;
    use nalgebra::Point3;

    fn two_sample() -> Vec<HandSample> {
        parse_samples(include_str!("../../data/two_sample.jsonl")).unwrap()
    }

    fn raised_step() -> ReplayConfig {
        ReplayConfig {
            guidance: GuidanceConfig {
                max_step_angle: 0.5,
                ..GuidanceConfig::default()
            },
            ..ReplayConfig::default()
        }
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let model = samples::planar_two_link();
        assert!(replay(&model, &[], &ReplayConfig::default()).unwrap().is_empty());
        assert!(parse_samples("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn untracked_samples_hold_still() {
        let model = samples::planar_two_link();
        let samples: Vec<_> = (0..30).map(|i| HandSample::untracked(i as f64 / 30.0)).collect();
        let out = replay(&model, &samples, &ReplayConfig::default()).unwrap();
        assert!(!out.is_empty());
        assert!(out.iter().all(|r| r.q == vec![0.0, 0.0]));
    }

    #[test]
    fn two_sample_file_settles_on_the_decomposition() {
        let model = samples::planar_two_link();
        let out = replay(&model, &two_sample(), &raised_step()).unwrap();
        let last = out.last().unwrap();
        assert!((last.q[0] - 0.000971).abs() < 1e-6, "{:?}", last.q);
        assert!((last.q[1] - 0.197396).abs() < 1e-6, "{:?}", last.q);
        // Records are one tick apart and the elbow never reverses.
        for w in out.windows(2) {
            assert!((w[1].t - w[0].t - DEFAULT_TICK).abs() < 1e-12);
            assert!(w[1].q[1] >= w[0].q[1]);
        }
    }

    #[test]
    fn default_step_cap_limits_the_same_motion() {
        let model = samples::planar_two_link();
        let out = replay(&model, &two_sample(), &ReplayConfig::default()).unwrap();
        let last = out.last().unwrap();
        assert!(last.q.iter().all(|a| a.abs() <= 0.1 + 1e-12), "{:?}", last.q);
        assert!(last.q[1] > 0.09);
    }

    #[test]
    fn output_is_reproducible_text() {
        let model = samples::planar_two_link();
        let a = write_trajectory(&replay(&model, &two_sample(), &raised_step()).unwrap());
        let b = write_trajectory(&replay(&model, &two_sample(), &raised_step()).unwrap());
        assert_eq!(a, b);
        let first = a.lines().next().unwrap();
        let back: TrajectoryRecord = serde_json::from_str(first).unwrap();
        assert_eq!(back.q.len(), 2);
    }

    #[test]
    fn bad_lines_and_order_are_reported() {
        match parse_samples("{\"t\": 0, \"x\": 0, \"y\": 0, \"z\": 0}\nnot json\n") {
            Err(SimError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let model = samples::planar_two_link();
        let samples = vec![
            HandSample::new(1.0, Point3::new(2.0, 0.0, 0.0)),
            HandSample::new(0.5, Point3::new(2.0, 0.0, 0.0)),
        ];
        assert!(matches!(
            replay(&model, &samples, &ReplayConfig::default()),
            Err(SimError::Guidance(_))
        ));
    }
}
