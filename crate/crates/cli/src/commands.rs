use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use handguide_core::cloud::io::{read_cloud, write_ply, write_ply_mesh};
use handguide_core::guidance::GuidanceConfig;
use handguide_core::model::{load_model, samples, RigidTransform, RobotModel};
use handguide_core::registration::bench::{run_benchmark, BenchConfig, Scenario};
use handguide_core::registration::{register_pipeline_with, Method, PipelineConfig, Preset, RegistrationResult};
use handguide_core::simcontrol::{parse_samples, replay, synth_scene, write_trajectory, Clutter, ReplayConfig, SceneSpec};
use serde::Serialize;
use thiserror::Error;

use crate::args::{BenchArgs, RegisterArgs, ReplayArgs, SynthArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 0 success, 1 algorithmic failure, 2 usage or I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Input { .. } => 2,
        }
    }
}

fn input(path: &Path, e: impl ToString) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| input(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| input(path, e))
}

pub fn load_model_arg(path: Option<&Path>) -> Result<RobotModel, CliError> {
    match path {
        None => Ok(samples::kr5_like()),
        Some(path) => load_model(&read_text(path)?).map_err(|e| input(path, e)),
    }
}

/// Finished command: text for standard output.
#[derive(Debug, Default)]
pub struct Report {
    pub stdout: String,
}

#[derive(Debug, Serialize)]
struct RegisterOutput<'a> {
    method: Method,
    preset: Preset,
    #[serde(flatten)]
    result: &'a RegistrationResult,
}

pub fn register(args: &RegisterArgs) -> Result<Report, CliError> {
    let model = load_model_arg(args.model.as_deref())?;
    let scene = read_cloud(&args.scene).map_err(|e| input(&args.scene, e))?;
    let [x, y, z, roll, pitch, yaw] = args.seed_pose[..] else {
        return Err(CliError::Usage("--seed-pose takes x y z roll pitch yaw".into()));
    };
    let seed_pose = RigidTransform::from_xyz_rpy([x, y, z], [roll, pitch, yaw]);
    let q = args.q.clone().unwrap_or_else(|| model.zero_configuration().0);
    model
        .check_configuration(&q)
        .map_err(|e| CliError::Usage(format!("--q: {e}")))?;
    let (method, preset) = (Method::from(args.method), Preset::from(args.preset));
    let mut config = PipelineConfig::default();
    config.congruent.seed = args.seed;
    let result = register_pipeline_with(&scene, &model, &q, &seed_pose, method, preset, &config)
        .map_err(|e| CliError::Failed(format!("registration failed: {e}")))?;
    let text = serde_json::to_string_pretty(&RegisterOutput {
        method,
        preset,
        result: &result,
    })
    .expect("plain data serializes")
        + "\n";
    if let Some(out) = &args.out {
        write_text(out, &text)?;
    }
    if !result.converged {
        return Err(CliError::Failed(format!("registration did not converge\n{text}")));
    }
    Ok(Report { stdout: text })
}

pub fn bench_config(args: &BenchArgs) -> Result<BenchConfig, CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(CliError::Usage("--noise must be non-negative".into()));
    }
    let keep_method = |m: Method| args.method.is_empty() || args.method.iter().any(|a| Method::from(*a) == m);
    let keep_preset = |p: Preset| args.preset.is_empty() || args.preset.iter().any(|a| Preset::from(*a) == p);
    let mut scenarios: Vec<Scenario> = Scenario::standard()
        .into_iter()
        .filter(|s| keep_method(s.method) && keep_preset(s.preset))
        .collect();
    if args.clutter {
        for preset in [Preset::Big, Preset::Small].into_iter().filter(|p| keep_preset(*p)) {
            let mut s = Scenario::new(Method::Congruent, preset);
            s.clutter = Clutter::touching_table();
            scenarios.push(s);
        }
    }
    if scenarios.is_empty() {
        return Err(CliError::Usage("no scenario matches the filters".into()));
    }
    Ok(BenchConfig {
        scenarios,
        trials: args.trials,
        seed: args.seed,
        noise_sigma: args.noise,
        ..BenchConfig::default()
    })
}

pub fn bench(args: &BenchArgs) -> Result<Report, CliError> {
    let model = load_model_arg(args.model.as_deref())?;
    let config = bench_config(args)?;
    let report = run_benchmark(&model, &config).map_err(|e| CliError::Usage(e.to_string()))?;
    let table = report.table();
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_text(&dir.join("table.txt"), &table)?;
        write_text(&dir.join("records.jsonl"), &report.jsonl())?;
    }
    if let Some(s) = report.stats.iter().find(|s| s.failures == s.trials) {
        return Err(CliError::Failed(format!("every {} trial failed\n{table}", s.scenario)));
    }
    Ok(Report { stdout: table })
}

pub fn replay_config(args: &ReplayArgs) -> ReplayConfig {
    let mut guidance = GuidanceConfig::default().with_sensitivity(args.sensitivity);
    if let Some(step) = args.max_step_angle {
        guidance.max_step_angle = step;
    }
    ReplayConfig {
        guidance,
        dt: args.dt,
        max_acceleration: args.max_acceleration,
        ..ReplayConfig::default()
    }
}

pub fn replay_cmd(args: &ReplayArgs) -> Result<Report, CliError> {
    let model = load_model_arg(args.model.as_deref())?;
    let config = replay_config(args);
    config
        .guidance
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let samples = parse_samples(&read_text(&args.trajectory)?).map_err(|e| input(&args.trajectory, e))?;
    let records = replay(&model, &samples, &config).map_err(|e| input(&args.trajectory, e))?;
    let text = write_trajectory(&records);
    match &args.out {
        Some(out) => {
            write_text(out, &text)?;
            let mut summary = format!("{} records", records.len());
            if let Some(last) = records.last() {
                write!(summary, ", final q {:?}", last.q).unwrap();
            }
            Ok(Report { stdout: summary + "\n" })
        }
        None => Ok(Report { stdout: text }),
    }
}

pub fn synth(args: &SynthArgs) -> Result<Report, CliError> {
    let model = load_model_arg(args.model.as_deref())?;
    let mut spec: SceneSpec = serde_json::from_str(&read_text(&args.spec)?).map_err(|e| input(&args.spec, e))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let scene = synth_scene(&model, &spec).map_err(|e| input(&args.spec, e))?;
    create_dir(&args.out)?;
    write_text(&args.out.join("mesh.ply"), &write_ply_mesh(&scene.mesh))?;
    write_text(&args.out.join("cloud.ply"), &write_ply(&scene.cloud))?;
    let truth = serde_json::to_string_pretty(&scene.ground_truth).expect("plain data serializes") + "\n";
    write_text(&args.out.join("truth.json"), &truth)?;
    Ok(Report {
        stdout: format!(
            "{} triangles, {} points written to {}\n",
            scene.mesh.triangles.len(),
            scene.cloud.len(),
            args.out.display()
        ),
    })
}
