//! `besselflow`: run flow simulations and the distributional checks from the command line.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use besselflow::experiments::{self, Experiment, ExperimentConfig};
use clap::{Parser, Subcommand};

mod keyvalue;
mod laws_cmd;
mod simulate;
mod suite;

/// Seed used when neither the config nor `--seed` supplies one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "besselflow", version, about = "Monte Carlo checks for Bessel flows")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate coupled flow paths and write them to `samples.csv`.
    Simulate,
    /// Run one experiment and write `<experiment>.json`.
    Verify {
        /// Experiment name, e.g. `exp_scaling`.
        experiment: Experiment,
    },
    /// Run every acceptance criterion and write one report per criterion.
    Suite,
    /// Draw from a named law and write `<name>.csv`.
    Laws {
        /// One of gamma, dufresne-u1, tau0, t1, bound-integral.
        name: String,
    },
}

/// Why a command did not complete.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or config: exit 2.
    Usage(String),
    /// The run itself failed (numerics, I/O): exit 1.
    Run(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Run(m) => m,
        }
    }
}

pub type Outcome = Result<bool, Failure>;

/// Global options shared by all subcommands.
pub struct Options {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
}

impl Options {
    /// Config text with the path for error messages, if `--config` was given.
    pub fn config_text(&self) -> Result<Option<(String, String)>, Failure> {
        let Some(path) = &self.config else {
            return Ok(None);
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Ok(Some((path.display().to_string(), text)))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Failure::Run(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn out_path(&self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Failure::Run(format!("{}: {e}", self.out.display())))?;
        Ok(self.out.join(name))
    }
}

/// Prefixes line-anchored config errors with the file name.
pub fn config_error(source: &str, e: besselflow::Error) -> Failure {
    match e {
        besselflow::Error::Config { line, msg } => Failure::Usage(format!("{source}:{line}: {msg}")),
        other => Failure::Usage(format!("{source}: {other}")),
    }
}

pub fn pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Run(format!("cannot start {workers} workers: {e}")))
}

fn verify(opts: &Options, experiment: Experiment) -> Outcome {
    let config = match opts.config_text()? {
        Some((source, text)) => ExperimentConfig::parse(&text, Some(experiment), opts.seed)
            .map_err(|e| config_error(&source, e))?,
        None => {
            let cfg = ExperimentConfig::default_for(experiment, opts.seed.unwrap_or(DEFAULT_SEED));
            cfg.validate().map_err(|e| config_error("defaults", e))?;
            cfg
        }
    };
    opts.write(&format!("{experiment}.conf"), &config.to_text())?;
    let json_name = format!("{experiment}.json");
    let started = Instant::now();
    let result = experiments::run(&config);
    let manifest = serde_json::json!({
        "schema": suite::MANIFEST_SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config": config.to_text(),
        "reports": [json_name],
        "seconds": started.elapsed().as_secs_f64(),
        "passed": result.as_ref().is_ok_and(|r| r.passed),
    });
    opts.write("manifest.json", &(serde_json::to_string_pretty(&manifest).expect("plain JSON") + "\n"))?;
    match result {
        Ok(report) => {
            let path = opts.write(&json_name, &(report.to_json() + "\n"))?;
            for c in &report.checks {
                println!("  {} {}", if c.passed { "pass" } else { "FAIL" }, c.name);
            }
            for f in &report.flags {
                println!("  flag: {f}");
            }
            println!(
                "{experiment}: {} ({})",
                if report.passed { "PASS" } else { "FAIL" },
                path.display()
            );
            Ok(report.passed)
        }
        Err(e) => {
            let body = serde_json::json!({
                "schema": experiments::REPORT_SCHEMA,
                "experiment": experiment,
                "config": config,
                "error": e.to_string(),
                "passed": false,
            });
            opts.write(&json_name, &(serde_json::to_string_pretty(&body).expect("plain JSON") + "\n"))?;
            Err(Failure::Run(format!("{experiment}: {e}")))
        }
    }
}

fn dispatch(opts: &Options, command: &Command) -> Outcome {
    match command {
        Command::Simulate => simulate::run(opts),
        Command::Verify { experiment } => verify(opts, *experiment),
        Command::Suite => suite::run(opts),
        Command::Laws { name } => laws_cmd::run(opts, name),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        config: cli.config,
        seed: cli.seed,
        workers: cli.workers.map_or_else(default_workers, usize::from),
        out: cli.out,
    };
    let result = pool(opts.workers).and_then(|p| p.install(|| dispatch(&opts, &cli.command)));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
