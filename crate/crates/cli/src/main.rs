//! `bvlab`: runs distortion and conjugation experiments from JSON configs and
//! writes a CSV series plus a JSON result record.

mod commands;
mod config;
mod experiments;
mod failure;
mod record;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use commands::Outcome;
use config::{load, ApproximateConfig, CheckConfig, DistortionConfig, RotnoConfig};
use experiments::{Experiment, ExperimentConfig};
use failure::Failure;
use record::{config_hash, write_outputs, ResultRecord};

const THREADS_VAR: &str = "BVLAB_THREADS";

#[derive(Parser)]
#[command(name = "bvlab", version, about = "Asymptotic distortion and conjugation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Birkhoff estimates of the rotation number on a geometric grid of n.
    Rotno(CommonArgs),
    /// The series var(log Dfⁿ)/n and its Fekete estimate.
    Distortion(CommonArgs),
    /// Distance to the rotation of explicit conjugates (geometric-mean, box, path, herman).
    Approximate(CommonArgs),
    /// Seeded random-point checks of inverses and derivatives.
    Check(CommonArgs),
    /// Canonical experiments; the shipped config is used unless --config is given.
    Experiment {
        #[arg(value_enum)]
        name: Experiment,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "bvlab-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "bvlab-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::config(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))
}

struct Prepared {
    command: &'static str,
    experiment: String,
    hash: String,
    seed: Option<u64>,
    out: PathBuf,
    run: Box<dyn FnOnce() -> Result<Outcome, Failure>>,
}

fn prepare_common<T, F>(command: &'static str, args: &CommonArgs, apply_seed: F, run: fn(&T) -> Result<Outcome, Failure>) -> Result<Prepared, Failure>
where
    T: serde::de::DeserializeOwned + config::Versioned + Serialize + ExperimentId + 'static,
    F: FnOnce(&mut T, Option<u64>) -> Option<u64>,
{
    let mut cfg: T = load(&args.config)?;
    let seed = apply_seed(&mut cfg, args.seed);
    Ok(Prepared {
        command,
        experiment: cfg.experiment_id().to_string(),
        hash: config_hash(&cfg, seed),
        seed,
        out: args.out.clone(),
        run: Box::new(move || run(&cfg)),
    })
}

trait ExperimentId {
    fn experiment_id(&self) -> &str;
}

macro_rules! experiment_id {
    ($($t:ty),*) => {
        $(impl ExperimentId for $t {
            fn experiment_id(&self) -> &str {
                &self.experiment
            }
        })*
    };
}

experiment_id!(RotnoConfig, DistortionConfig, ApproximateConfig, CheckConfig);

fn prepare(cli: Cli) -> Result<Prepared, Failure> {
    match cli.command {
        Command::Rotno(a) => prepare_common("rotno", &a, |_, s| s, commands::rotno),
        Command::Distortion(a) => prepare_common(
            "distortion",
            &a,
            |c: &mut DistortionConfig, s| {
                if s.is_some() {
                    c.seed = s;
                }
                c.seed
            },
            commands::distortion,
        ),
        Command::Approximate(a) => prepare_common("approximate", &a, |_, s| s, commands::approximate),
        Command::Check(a) => prepare_common(
            "check",
            &a,
            |c: &mut CheckConfig, s| {
                if s.is_some() {
                    c.seed = s;
                }
                c.seed
            },
            commands::check,
        ),
        Command::Experiment { name, config, out, seed } => {
            let cfg = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
                    ExperimentConfig::parse(name, &text, &path.display().to_string())?
                }
                None => ExperimentConfig::parse(name, name.canonical_config(), &format!("configs/{}.json", name.name()))?,
            };
            Ok(Prepared {
                command: "experiment",
                experiment: cfg.experiment_id().to_string(),
                hash: config_hash(&cfg.to_json(), seed),
                seed,
                out,
                run: Box::new(move || cfg.run()),
            })
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let p = prepare(cli)?;
    let start = Instant::now();
    let outcome = (p.run)()?;
    let record = ResultRecord {
        experiment: p.experiment,
        command: p.command.to_string(),
        config_hash: p.hash,
        seed: p.seed,
        converged: outcome.converged,
        summary: outcome.summary,
        series: outcome.table,
        csv_file: String::new(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let record = ResultRecord {
        csv_file: format!("{}.csv", record::sanitize(&record.experiment)),
        ..record
    };
    let (csv, json) = write_outputs(Path::new(&p.out), &record)?;
    println!(
        "{}",
        serde_json::json!({
            "experiment": record.experiment,
            "converged": record.converged,
            "summary": record.summary,
            "csv": csv.display().to_string(),
            "record": json.display().to_string(),
        })
    );
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bvlab: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
