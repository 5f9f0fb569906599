use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use handguide_core::registration::{Method, Preset};

#[derive(Debug, Parser)]
#[command(name = "handguide", version, about = "Robot registration and hand-guidance toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register the robot model into a scene cloud.
    Register(RegisterArgs),
    /// Run the registration benchmark over synthetic scenes.
    Bench(BenchArgs),
    /// Replay a recorded hand trajectory through guidance and the controller.
    Replay(ReplayArgs),
    /// Generate a synthetic scene mesh and cloud.
    Synth(SynthArgs),
    /// Serve sessions over HTTP and websockets.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Icp,
    Congruent,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Icp => Method::Icp,
            MethodArg::Congruent => Method::Congruent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Big,
    Small,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Big => Preset::Big,
            PresetArg::Small => Preset::Small,
        }
    }
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Robot description; the bundled six-joint arm when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Scene cloud, PLY or XYZ.
    #[arg(long)]
    pub scene: PathBuf,
    /// Seed pose of the robot base in the scene.
    #[arg(long, num_args = 6, value_names = ["X", "Y", "Z", "ROLL", "PITCH", "YAW"], allow_negative_numbers = true)]
    pub seed_pose: Vec<f64>,
    /// Joint angles while the scene was captured; zeros when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "icp")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "small")]
    pub preset: PresetArg,
    /// Seed for the congruent-set search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the result document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scan noise, meters.
    #[arg(long, default_value_t = 0.003)]
    pub noise: f64,
    /// Only these methods.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Vec<MethodArg>,
    /// Only these presets.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub preset: Vec<PresetArg>,
    /// Add congruent-set scenarios with a table touching the robot.
    #[arg(long)]
    pub clutter: bool,
    /// Directory for `table.txt` and `records.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Hand samples, one JSON record per line.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Controller tick, seconds.
    #[arg(long, default_value_t = handguide_core::simcontrol::DEFAULT_TICK)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sensitivity: f64,
    /// Largest joint change per sample, radians.
    #[arg(long)]
    pub max_step_angle: Option<f64>,
    /// Joint acceleration limit, rad/s².
    #[arg(long, default_value_t = handguide_core::simcontrol::DEFAULT_MAX_ACCELERATION)]
    pub max_acceleration: f64,
    /// Joint trajectory output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Scene description document.
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the document's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for `mesh.ply`, `cloud.ply` and `truth.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}
