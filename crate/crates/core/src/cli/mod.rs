//! Command-line front end. Every command prints `key=value` lines.

mod commands;
pub mod config;

pub use commands::{ablate, ablation_table, compress, decompress, stats, synth, AblationRow, GridSpec};
pub use config::{ablation_model, Profile, RunConfig, ABLATION_ROWS};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fieldnet", version, about = "Compress 4D gridded fields into small coordinate networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Worker threads; 1 is the bit-exact reference mode
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on a field and write the artifact
    Compress {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate an artifact on its native grid or on --grid
    Decompress {
        artifact: PathBuf,
        output: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Error metrics of an artifact against the original field
    Stats {
        artifact: PathBuf,
        original: PathBuf,
        #[arg(long, default_value_t = 0.99999)]
        quantile: f64,
        /// Directory for the histogram and per-location error maps
        #[arg(long)]
        maps: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the ablation rows and write a WRMSE table
    Ablate {
        input: PathBuf,
        report: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic band-limited field
    Synth {
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_text(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn run_config(path: &Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::parse(&read_text(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
        cfg.ablate_seeds = vec![s];
    }
    Ok(cfg)
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::invalid("--workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?;
    pool.install(f)
}

fn dispatch(cmd: Command, out: &mut (dyn Write + Send)) -> Result<()> {
    match cmd {
        Command::Compress {
            input,
            output,
            config,
            seed,
            common,
        } => {
            let cfg = run_config(&config, seed)?;
            in_pool(common.workers, || compress(&input, &output, &cfg, &mut *out))
        }
        Command::Decompress {
            artifact,
            output,
            grid,
            common,
        } => {
            let spec = grid.as_ref().map(read_text).transpose()?;
            let spec = spec.as_deref().map(GridSpec::parse).transpose()?;
            in_pool(common.workers, || decompress(&artifact, &output, spec.as_ref(), &mut *out))
        }
        Command::Stats {
            artifact,
            original,
            quantile,
            maps,
            common,
        } => in_pool(common.workers, || stats(&artifact, &original, quantile, maps.as_deref(), &mut *out)),
        Command::Ablate {
            input,
            report,
            config,
            seed,
            common,
        } => {
            let cfg = run_config(&config, seed)?;
            in_pool(common.workers, || ablate(&input, &report, &cfg, &mut *out).map(|_| ()))
        }
        Command::Synth { output, config, seed } => {
            let spec = match &config {
                Some(p) => crate::gridfield::SynthSpec::parse(&read_text(p)?)?,
                None => crate::gridfield::SynthSpec::default(),
            };
            synth(&spec, seed, &output, out)
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status: 0 success, 1 usage, 2 data or format, 3 numerical.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
