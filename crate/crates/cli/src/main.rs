use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod failure;

use failure::Failure;

/// Headless simulation tools: episodes, benchmarks, scene tooling, push
/// datasets, demonstration replay and the teleop server.
#[derive(Parser, Debug)]
#[command(name = "homesim", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run scripted episodes and write a results file.
    Run(RunArgs),
    /// Measure render, sensor and step rates.
    Bench(BenchArgs),
    /// Scene file tools.
    #[command(subcommand)]
    Scene(SceneCommand),
    /// Generate a push-interaction dataset.
    Pushes(PushArgs),
    /// Replay a recorded demonstration and report divergence.
    Replay(ReplayArgs),
    /// Serve a teleoperation session over WebSocket.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Number of episodes; seeds are seed..seed+n-1.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Visualrl,
    Highfidelity,
}

impl From<Preset> for homesim::render::PresetName {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Visualrl => homesim::render::PresetName::VisualRL,
            Preset::Highfidelity => homesim::render::PresetName::HighFidelity,
        }
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Scene file; defaults to a built-in 50-object room.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Presets to measure (repeatable); defaults to both.
    #[arg(long, value_enum)]
    pub preset: Vec<Preset>,
    /// Samples per measurement.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Materials,
    Objects,
    Dynamics,
}

#[derive(Subcommand, Debug)]
pub enum SceneCommand {
    /// Parse and validate a scene file.
    Validate { scene: PathBuf },
    /// Build a scene from a floorplan document and resolve overlaps.
    Import {
        floorplan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep overlapping objects as imported.
        #[arg(long)]
        no_resolve: bool,
    },
    /// Apply seeded randomization along the given axes.
    Randomize {
        scene: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        axes: Vec<Axis>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print object, room and class counts.
    Stats {
        scene: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
pub struct PushArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub locations: usize,
    #[arg(long, default_value_t = 10)]
    pub per_location: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub demo: PathBuf,
    /// Environment config the demonstration was recorded with.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub endpoint: String,
    /// Directory for finalized demonstrations.
    #[arg(long)]
    pub demo_dir: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Scene(c) => commands::scene(&c),
        Command::Pushes(a) => commands::pushes(&a),
        Command::Replay(a) => commands::replay(&a),
        Command::Serve(a) => commands::serve(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as validation failures; help and version succeed.
            return ExitCode::from(if e.use_stderr() { failure::VALIDATION } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
