//! `robust-gxe`: simulate, fit, select, diagnose, replicate, prescreen.
//!
//! Results go to stdout as JSON. Failures print a JSON error document to
//! stderr and exit with status 1 (2 for usage errors).

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_gxe::Error;
use serde_json::{json, Value};

use commands::{ReplicateArgs, SimulateArgs};
use config::Overrides;

#[derive(Parser, Debug)]
#[command(name = "robust-gxe", version, about = "Robust Bayesian sparse-group G x E variable selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a training set, test set and truth file.
    Simulate {
        #[command(flatten)]
        flags: Overrides,
        #[command(flatten)]
        args: SimulateArgs,
    },
    /// Run one or more chains on a data CSV and write their samples.
    Fit {
        #[command(flatten)]
        flags: Overrides,
    },
    /// Select effects from sample files (chains are pooled).
    Select {
        #[command(flatten)]
        flags: Overrides,
        samples: Vec<PathBuf>,
    },
    /// PSRF of every parameter across sample files, one per chain.
    Diagnose {
        #[command(flatten)]
        flags: Overrides,
        samples: Vec<PathBuf>,
    },
    /// Score methods over simulated replicates and write a summary table.
    Replicate {
        #[command(flatten)]
        flags: Overrides,
        #[command(flatten)]
        args: ReplicateArgs,
    },
    /// Keep genetic factors whose marginal group F-test p-value is below the cutoff.
    Prescreen {
        #[command(flatten)]
        flags: Overrides,
    },
}

impl Command {
    fn flags(&self) -> &Overrides {
        match self {
            Command::Simulate { flags, .. }
            | Command::Fit { flags }
            | Command::Select { flags, .. }
            | Command::Diagnose { flags, .. }
            | Command::Replicate { flags, .. }
            | Command::Prescreen { flags } => flags,
        }
    }
}

fn error_document(e: &Error) -> Value {
    let problems = match e {
        Error::Config(p) => p.clone(),
        other => vec![other.to_string()],
    };
    json!({ "error": { "kind": e.kind(), "message": e.to_string(), "problems": problems } })
}

/// Thread count: `--jobs` (or available cores), capped by `ROBUST_GXE_THREADS`.
fn thread_count(jobs: Option<usize>) -> usize {
    let mut n = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Some(cap) = std::env::var("ROBUST_GXE_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if cap > 0 {
            n = n.min(cap);
        }
    }
    n.max(1)
}

fn run(cli: Cli) -> robust_gxe::Result<Value> {
    let jobs = cli.command.flags().jobs;
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(jobs))
        .build_global()
        .ok();
    match &cli.command {
        Command::Simulate { flags, args } => commands::simulate(flags, args),
        Command::Fit { flags } => commands::fit(flags),
        Command::Select { flags, samples } => commands::select_cmd(flags, samples),
        Command::Diagnose { flags, samples } => commands::diagnose(flags, samples),
        Command::Replicate { flags, args } => commands::replicate(flags, args),
        Command::Prescreen { flags } => commands::prescreen(flags),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let doc = json!({ "error": { "kind": "usage", "message": e.to_string().trim(), "problems": [] } });
            eprintln!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            // a closed pipe downstream is not an error
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("{}", serde_json::to_string_pretty(&error_document(&e)).unwrap_or_default());
            ExitCode::from(1)
        }
    }
}
