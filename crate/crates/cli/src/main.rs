//! `aniso-lobe`: experiment harness for anisotropic reflectance lobes.
//!
//! Every command reads an optional sectioned config file, applies
//! `--set key=value` and dedicated flag overrides, writes a resolved copy of
//! its configuration next to its outputs and exits with
//! 0 (success), 1 (check failed), 2 (usage or config error) or 3 (I/O error).
//! `ANISO_LOBE_THREADS` caps the worker pool.

mod commands;
mod config;
mod error;
mod output;
mod scene;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::render::Edit;
use crate::config::{parse_override, RunConfig};
use crate::error::{CliError, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "aniso-lobe", version, about = "Anisotropic lobe fitting, encoding and rendering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Sectioned key = value configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config key (repeatable); global keys go to the global block.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a symmetric vMF mixture to one ASG target.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        beta_js: Option<f64>,
        /// Side-lobe count L (N = 2L + 1).
        #[arg(long)]
        side: Option<usize>,
    },
    /// Direct-fit loss against component count for several targets.
    SweepN {
        #[command(flatten)]
        common: Common,
    },
    /// Train the bandwidth-to-mixture network.
    TrainAmortizer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Compare the trained network with direct fits on held-out targets.
    EvalAmortizer {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        weights: Option<PathBuf>,
    },
    /// Check the directional encodings against Monte Carlo expectations.
    IdeCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render a scene with material edits.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        scene: Option<PathBuf>,
        /// Anisotropy for an extra edit.
        #[arg(long)]
        e: Option<f64>,
        /// Concentration for an extra edit.
        #[arg(long)]
        kappa: Option<f64>,
        /// Tangent angle (radians) for an extra edit.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
    },
    /// Compare every analytic gradient with finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Negate one check's analytic gradient (harness self-test).
        #[arg(long, value_name = "NAME", hide = true)]
        flip_sign: Option<String>,
    },
}

fn load(name: &'static str, common: Common, flags: Vec<(&str, Option<String>)>) -> Result<RunConfig, CliError> {
    let mut overrides = common.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let flag_pairs = flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v)));
    overrides.extend(flag_pairs);
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = common.out {
        overrides.push(("output_dir".into(), out.display().to_string()));
    }
    RunConfig::load(name, common.config.as_deref(), &overrides)
}

fn str_of<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("ANISO_LOBE_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Usage(format!("ANISO_LOBE_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    configure_threads()?;
    use commands::*;
    match cmd {
        Command::Fit { common, lambda, mu, beta_js, side } => {
            let flags = vec![("lambda", str_of(lambda)), ("mu", str_of(mu)), ("beta_js", str_of(beta_js)), ("side", str_of(side))];
            fit::run(load("fit", common, flags)?)
        }
        Command::SweepN { common } => sweep::run(load("sweep-n", common, vec![])?),
        Command::TrainAmortizer { common, steps } => {
            amortizer::train(load("train-amortizer", common, vec![("num_steps", str_of(steps))])?)
        }
        Command::EvalAmortizer { common, weights } => amortizer::eval(load("eval-amortizer", common, vec![])?, weights),
        Command::IdeCheck { common, samples } => ide_check::run(load("ide-check", common, vec![("samples", str_of(samples))])?),
        Command::Render { common, scene, e, kappa, phi } => {
            let edit = Edit { e, kappa, phi, dphi: None };
            render::run(load("render", common, vec![])?, scene, edit)
        }
        Command::Gradcheck { common, flip_sign } => gradcheck::run(load("gradcheck", common, vec![])?, flip_sign),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("aniso-lobe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
