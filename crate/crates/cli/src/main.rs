mod args;
mod commands;
mod error;

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use args::{merge, Cli, Command, Io};
use commands::Output;
use error::Failure;

/// Everything needed to rerun a command and locate its outputs. Passing a
/// manifest back as `--config` reproduces the run.
#[derive(Debug, Serialize)]
struct RunManifest {
    subcommand: String,
    params: Value,
    seed: Option<u64>,
    version: String,
    started_at: String,
    finished_at: String,
    outputs: Vec<String>,
    summary: Option<Value>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("CP_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("CP_THREADS must be a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the worker pool: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn finish(name: &str, io: &Io, started_at: String, out: Output) -> Result<(), Failure> {
    let Some(path) = &io.out else {
        print!("{}", out.body);
        if let Some(manifest) = &io.manifest {
            write_manifest(name, manifest, started_at, Vec::new(), out)?;
        }
        return Ok(());
    };
    write_file(path, &out.body)?;
    let manifest = io.manifest.clone().unwrap_or_else(|| {
        let mut p = path.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    write_manifest(name, &manifest, started_at, vec![path.display().to_string()], out)
}

fn write_manifest(name: &str, path: &Path, started_at: String, outputs: Vec<String>, out: Output) -> Result<(), Failure> {
    let manifest = RunManifest {
        subcommand: name.into(),
        params: out.params,
        seed: out.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now(),
        outputs,
        summary: out.summary,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(path, &text)
}

macro_rules! dispatch {
    ($inv:expr, $name:literal, $run:path, $started:expr) => {{
        let inv = $inv;
        let params = merge(&inv.params, inv.io.config.as_deref(), $name)?;
        let out = $run(params)?;
        finish($name, &inv.io, $started, out)
    }};
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let started = now();
    match cli.command {
        Command::Bounds(inv) => dispatch!(inv, "bounds", commands::bounds, started),
        Command::Table(inv) => dispatch!(inv, "table", commands::table, started),
        Command::Predict(inv) => dispatch!(inv, "predict", commands::predict, started),
        Command::Simulate(inv) => dispatch!(inv, "simulate", commands::simulate, started),
        Command::Star(inv) => dispatch!(inv, "star", commands::star, started),
        Command::Sweep(inv) => dispatch!(inv, "sweep", commands::sweep, started),
        Command::Walks(inv) => dispatch!(inv, "walks", commands::walks, started),
        Command::Oracle(inv) => dispatch!(inv, "oracle", commands::oracle, started),
        Command::Lambda2(inv) => dispatch!(inv, "lambda2", commands::lambda2, started),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(failure) = run(cli) {
        eprintln!("cptree: {failure}");
        std::process::exit(failure.exit_code());
    }
}
