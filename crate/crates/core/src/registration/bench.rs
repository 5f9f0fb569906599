//! Repeated pipeline runs on randomized synthetic scenes.

use std::fmt::Write as _;

use nalgebra::{Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{register_pipeline_with, Method, PipelineConfig, Preset};
use super::RegistrationError;
use crate::model::{Configuration, Origin, RigidTransform, RobotModel};
use crate::simcontrol::{synth_scene, Clutter, SceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub method: Method,
    pub preset: Preset,
    #[serde(default)]
    pub clutter: Clutter,
}

impl Scenario {
    pub fn new(method: Method, preset: Preset) -> Self {
        Scenario {
            method,
            preset,
            clutter: Clutter::default(),
        }
    }

    /// Both methods on both presets, segmented scenes.
    pub fn standard() -> Vec<Scenario> {
        [Method::Icp, Method::Congruent]
            .into_iter()
            .flat_map(|m| [Preset::Big, Preset::Small].map(|p| Scenario::new(m, p)))
            .collect()
    }

    pub fn name(&self) -> String {
        let mut name = format!("{}-{}", self.method.label(), self.preset.label());
        if self.clutter.adjacent_table.is_some() {
            name.push_str("+table");
        }
        if self.clutter.floor {
            name.push_str("+floor");
        }
        name
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenarios: Vec<Scenario>,
    pub trials: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    /// Largest seed-pose offset from the truth, meters.
    pub max_offset: f64,
    /// Largest seed-pose rotation from the truth, radians.
    pub max_angle: f64,
    pub pipeline: PipelineConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenarios: Scenario::standard(),
            trials: 20,
            seed: 0,
            noise_sigma: 0.003,
            max_offset: 0.1,
            max_angle: 10f64.to_radians(),
            pipeline: PipelineConfig::default(),
        }
    }
}

/// One randomized setup, shared by every scenario for the same trial index.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub truth: Origin,
    pub q: Configuration,
    pub seed_pose: RigidTransform,
    pub scene_seed: u64,
}

pub fn draw_trial(model: &RobotModel, master_seed: u64, index: usize, max_offset: f64, max_angle: f64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let truth = Origin {
        xyz: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0],
        rpy: [0.0, 0.0, yaw],
    };
    let q: Vec<f64> = model
        .joints
        .iter()
        .map(|j| {
            let (lo, hi) = (0.5 * j.limits.lower, 0.5 * j.limits.upper);
            if lo < hi {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
        .collect();
    let direction = Vector3::from(UnitSphere.sample(&mut rng));
    let offset = direction * rng.random_range(0.0..=max_offset);
    let axis = Unit::new_normalize(Vector3::from(UnitSphere.sample(&mut rng)));
    let nudge = RigidTransform::from_axis_angle(&axis, rng.random_range(0.0..=max_angle));
    let true_pose = truth.transform();
    let seed_pose = RigidTransform::from_translation(offset).compose(&true_pose.compose(&nudge));
    Trial {
        index,
        truth,
        q: q.into(),
        seed_pose,
        scene_seed: rng.random(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub trial: usize,
    pub seed: u64,
    pub rms: Option<f64>,
    pub converged: bool,
    pub translation_error: Option<f64>,
    pub rotation_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lcp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    /// Pose within the given translation (m) and rotation (rad) error.
    pub fn within(&self, translation: f64, rotation: f64) -> bool {
        matches!(
            (self.translation_error, self.rotation_error),
            (Some(t), Some(r)) if t < translation && r < rotation
        )
    }
}

/// Rms statistics over the trials that produced a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub scenario: String,
    pub trials: usize,
    pub failures: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl ScenarioStats {
    pub fn from_records(scenario: &str, records: &[TrialRecord]) -> Self {
        let rms: Vec<f64> = records.iter().filter_map(|r| r.rms).collect();
        let failures = records.len() - rms.len();
        let mut stats = ScenarioStats {
            scenario: scenario.to_string(),
            trials: records.len(),
            failures,
            min: None,
            max: None,
            mean: None,
            std: None,
        };
        if !rms.is_empty() {
            let n = rms.len() as f64;
            let mean = rms.iter().sum::<f64>() / n;
            let var = rms.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
            stats.min = rms.iter().copied().reduce(f64::min);
            stats.max = rms.iter().copied().reduce(f64::max);
            stats.mean = Some(mean);
            stats.std = Some(var.sqrt());
        }
        stats
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub stats: Vec<ScenarioStats>,
    pub records: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn records_for(&self, scenario: &Scenario) -> Vec<&TrialRecord> {
        let name = scenario.name();
        self.records.iter().filter(|r| r.scenario == name).collect()
    }

    pub fn table(&self) -> String {
        format_table(&self.stats)
    }

    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r).expect("plain data serializes")).unwrap();
        }
        out
    }
}

/// Aligned Min / Max / Mean / Std table, one row per scenario.
pub fn format_table(stats: &[ScenarioStats]) -> String {
    let width = stats
        .iter()
        .map(|s| s.scenario.len())
        .chain(["Algorithm".len()])
        .max()
        .unwrap_or(0);
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.5}"));
    let mut out = String::new();
    writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}",
        "Algorithm", "Min", "Max", "Mean", "Std", "Trials", "Failed"
    )
    .unwrap();
    for s in stats {
        writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}",
            s.scenario,
            cell(s.min),
            cell(s.max),
            cell(s.mean),
            cell(s.std),
            s.trials,
            s.failures
        )
        .unwrap();
    }
    out
}

pub fn run_trial(
    model: &RobotModel,
    scenario: &Scenario,
    trial: &Trial,
    config: &BenchConfig,
) -> TrialRecord {
    let spec = SceneSpec {
        base_pose: trial.truth,
        q: trial.q.clone(),
        clutter: scenario.clutter,
        noise_sigma: config.noise_sigma,
        preset: scenario.preset,
        seed: trial.scene_seed,
    };
    let mut record = TrialRecord {
        scenario: scenario.name(),
        trial: trial.index,
        seed: trial.scene_seed,
        rms: None,
        converged: false,
        translation_error: None,
        rotation_error: None,
        lcp: None,
        error: None,
    };
    let scene = match synth_scene(model, &spec) {
        Ok(scene) => scene,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let mut pipeline = config.pipeline;
    pipeline.congruent.seed = trial.scene_seed;
    match register_pipeline_with(
        &scene.cloud,
        model,
        &trial.q,
        &trial.seed_pose,
        scenario.method,
        scenario.preset,
        &pipeline,
    ) {
        Ok(result) => {
            let (dt, dr) = scene.ground_truth.pose_error(&result.transform);
            record.rms = Some(result.rms);
            record.converged = result.converged;
            record.translation_error = Some(dt);
            record.rotation_error = Some(dr);
            record.lcp = result.lcp;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs every scenario over `config.trials` randomized trials.
///
/// Trial `i` uses the same robot pose, configuration, seed pose and scan
/// seed in every scenario. Output order is scenario-major, then trial.
pub fn run_benchmark(model: &RobotModel, config: &BenchConfig) -> Result<BenchReport, RegistrationError> {
    if config.trials == 0 {
        return Err(RegistrationError::InvalidParams("at least one trial is needed".into()));
    }
    if !(config.noise_sigma >= 0.0 && config.max_offset >= 0.0 && config.max_angle >= 0.0) {
        return Err(RegistrationError::InvalidParams(
            "noise and seed perturbation must be non-negative".into(),
        ));
    }
    let trials: Vec<Trial> = (0..config.trials)
        .map(|i| draw_trial(model, config.seed, i, config.max_offset, config.max_angle))
        .collect();
    let mut stats = Vec::with_capacity(config.scenarios.len());
    let mut records = Vec::with_capacity(config.scenarios.len() * trials.len());
    for scenario in &config.scenarios {
        let rows: Vec<TrialRecord> = trials
            .par_iter()
            .map(|t| run_trial(model, scenario, t, config))
            .collect();
        stats.push(ScenarioStats::from_records(&scenario.name(), &rows));
        records.extend(rows);
    }
    Ok(BenchReport { stats, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::samples;

    fn record(rms: Option<f64>) -> TrialRecord {
        TrialRecord {
            scenario: "x".into(),
            trial: 0,
            seed: 0,
            rms,
            converged: rms.is_some(),
            translation_error: None,
            rotation_error: None,
            lcp: None,
            error: rms.is_none().then(|| "failed".into()),
        }
    }

    #[test]
    fn stats_skip_failures_but_count_them() {
        let rows = [record(Some(0.001)), record(None), record(Some(0.003))];
        let s = ScenarioStats::from_records("x", &rows);
        assert_eq!((s.trials, s.failures), (3, 1));
        assert_eq!(s.min, Some(0.001));
        assert_eq!(s.max, Some(0.003));
        assert!((s.mean.unwrap() - 0.002).abs() < 1e-15);
        assert!((s.std.unwrap() - 0.001).abs() < 1e-15);
        let single = ScenarioStats::from_records("x", &rows[..1]);
        assert_eq!(single.std, Some(0.0));
        assert_eq!(single.min, single.mean);
    }

    #[test]
    fn table_has_the_expected_columns() {
        let stats = vec![ScenarioStats {
            scenario: "ICP-small".into(),
            trials: 20,
            failures: 0,
            min: Some(0.00162),
            max: Some(0.01441),
            mean: Some(0.0032),
            std: Some(0.0017),
        }];
        let table = format_table(&stats);
        let mut lines = table.lines();
        let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(header[..5], ["Algorithm", "Min", "Max", "Mean", "Std"]);
        let row: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(row[..5], ["ICP-small", "0.00162", "0.01441", "0.00320", "0.00170"]);
    }

    #[test]
    fn trials_are_reproducible_and_bounded() {
        let model = samples::kr5_like();
        let a = draw_trial(&model, 3, 4, 0.1, 0.2);
        assert_eq!(a, draw_trial(&model, 3, 4, 0.1, 0.2));
        assert_ne!(a, draw_trial(&model, 3, 5, 0.1, 0.2));
        let (dt, dr) = a.truth.transform().pose_error(&a.seed_pose);
        assert!(dt <= 0.1 + 1e-12 && dr <= 0.2 + 1e-12);
        assert!(model.within_limits(&a.q));
    }

    #[test]
    fn scenario_names() {
        let names: Vec<String> = Scenario::standard().iter().map(Scenario::name).collect();
        assert_eq!(names, ["ICP-big", "ICP-small", "Congruent-big", "Congruent-small"]);
        let mut s = Scenario::new(Method::Congruent, Preset::Small);
        s.clutter = Clutter::touching_table();
        assert_eq!(s.name(), "Congruent-small+table");
    }

    #[test]
    fn zero_trials_is_rejected() {
        let config = BenchConfig {
            trials: 0,
            ..BenchConfig::default()
        };
        assert!(run_benchmark(&samples::kr5_like(), &config).is_err());
    }
}
