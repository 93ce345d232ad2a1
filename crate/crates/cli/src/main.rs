//! `lakeopt`: command-line front end for the two-stage lake-level workflow.
//!
//! Exit status: 0 on success (including non-converged optimizations, which
//! are flagged in the report), 2 on input or configuration errors, 3 on
//! numerical failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::CliConfig;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<lakeopt_core::Error> for Failure {
    fn from(e: lakeopt_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

macro_rules! via_core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                lakeopt_core::Error::from(e).into()
            }
        }
    )*};
}

via_core_error!(
    lakeopt_core::dataset::DatasetError,
    lakeopt_core::surrogate::SurrogateError,
    lakeopt_core::sensitivity::SensitivityError,
    lakeopt_core::optimizers::OptimizeError
);

#[derive(Debug, Parser)]
#[command(
    name = "lakeopt",
    version,
    about = "Lake-level surrogate modelling, sensitivity analysis and monthly runoff planning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Monthly record CSV (`year,month,P,R,G,E,Ur,Ug,H[,Hcon]`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; every component seed is derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SensitivityMethod {
    Sobol,
    Morris,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-variable min/max/mean/std of a monthly record.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic monthly record with a planted lake-level response.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        years: Option<usize>,
    },
    /// Train a meta-model: target H (Model I) or R (Model II).
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "H")]
        target: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Sobol'–Jansen and/or Morris analysis of a saved model.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: SensitivityMethod,
    },
    /// Monthly runoff maximization with a saved Model II.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// `ga`, `pattern_search`, `nlp` or `all`.
        #[arg(long, default_value = "all")]
        method: String,
    },
    /// Both stages end to end.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Two-input response surface with the other inputs held constant.
    Surface {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        var_i: String,
        #[arg(long)]
        var_j: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        fixed: Option<f64>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Stats { common }
            | Command::Synth { common, .. }
            | Command::Train { common, .. }
            | Command::Sensitivity { common, .. }
            | Command::Optimize { common, .. }
            | Command::Pipeline { common }
            | Command::Surface { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Stats { .. } => "stats",
            Command::Synth { .. } => "synth",
            Command::Train { .. } => "train",
            Command::Sensitivity { .. } => "sensitivity",
            Command::Optimize { .. } => "optimize",
            Command::Pipeline { .. } => "pipeline",
            Command::Surface { .. } => "surface",
        }
    }
}

fn effective_config(common: &Common) -> Result<CliConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    if common.input.is_some() {
        cfg.input = common.input.clone();
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    let seed = common.seed.unwrap_or(cfg.pipeline.seed);
    cfg.pipeline = cfg.pipeline.with_seed(seed);
    Ok(cfg)
}

fn run(command: Command) -> Result<(), Failure> {
    let cfg = effective_config(command.common())?;
    let ctx = commands::Context::new(command.name(), cfg)?;
    match command {
        Command::Stats { .. } => commands::stats(&ctx),
        Command::Synth { years, .. } => commands::synth(ctx, years),
        Command::Train {
            target,
            epochs,
            learning_rate,
            ..
        } => commands::train(ctx, &target, epochs, learning_rate),
        Command::Sensitivity { model, method, .. } => commands::sensitivity(&ctx, &model, method),
        Command::Optimize { model, method, .. } => commands::optimize(ctx, &model, &method),
        Command::Pipeline { .. } => commands::pipeline(&ctx),
        Command::Surface {
            model,
            var_i,
            var_j,
            resolution,
            fixed,
            ..
        } => commands::surface(ctx, &model, &var_i, &var_j, resolution, fixed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = cli.command.common().threads;
    let result = match threads {
        Some(0) => Err(Failure::Input("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Failure::Input(format!(
                "cannot start {n} worker threads: {e}"
            ))),
        },
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
