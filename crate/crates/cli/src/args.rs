//! Command-line arguments. Every subcommand's parameters are also accepted
//! from a JSON config file (`--config`), keyed by the flag name with `_` for
//! `-`; flags given on the command line win. A run manifest is a valid config
//! file for its own subcommand.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Failure;

#[derive(Debug, Parser)]
#[command(name = "cptree", version, about = "Bounds, walk counts and simulations for contact processes on periodic trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every analytic bound that applies to a degree sequence.
    Bounds(Invocation<BoundsArgs>),
    /// Regenerate a period-3 table (period3_lambda1 or period3_x0).
    Table(Invocation<TableArgs>),
    /// Asymptotic lambda_2 predictions, one row per n.
    Predict(Invocation<PredictArgs>),
    /// Independent replicas of the contact process or branching random walk.
    Simulate(Invocation<SimulateArgs>),
    /// Replicas of the aggregated star-graph chain.
    Star(Invocation<StarArgs>),
    /// Survival estimates over a grid of infection rates.
    Sweep(Invocation<SweepArgs>),
    /// Closed-walk counts and their roots.
    Walks(Invocation<WalksArgs>),
    /// Exact solves: star, graph, truncation or walks.
    Oracle(Invocation<OracleArgs>),
    /// Bisection estimate of the local-survival threshold.
    Lambda2(Invocation<Lambda2Args>),
}

/// Flags shared by every subcommand, never read from config files.
#[derive(Debug, Args)]
pub struct Io {
    /// JSON config file (or a run manifest) supplying defaults for the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent. A manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Invocation<T: Args> {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub params: T,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsArgs {
    /// Children per residue, e.g. 3,4.
    #[arg(long)]
    pub degrees: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TableArgs {
    /// period3_lambda1 or period3_x0.
    pub which: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictArgs {
    #[arg(long)]
    pub degrees: Option<String>,
    /// start:stop:step values substituted for the largest degree.
    #[arg(long)]
    pub n_range: Option<String>,
}

/// Simulation knobs shared by `simulate` and `sweep`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct RunArgs {
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub root_residue: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub max_vertices: Option<usize>,
    /// contact or brw.
    #[arg(long)]
    pub mode: Option<String>,
    /// Particle cap for the branching random walk.
    #[arg(long)]
    pub population_cap: Option<u64>,
    /// Start of the local-survival window as a fraction of the horizon.
    #[arg(long)]
    pub local_window: Option<f64>,
    /// Restrict the tree to the ball of this radius around the root.
    #[arg(long)]
    pub radius: Option<u32>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Re-derive the occupied-set bookkeeping after every event.
    #[arg(long)]
    pub audit: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// start:stop:step, inclusive of stop.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// global or local.
    #[arg(long)]
    pub criterion: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct StarArgs {
    /// Number of leaves.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Initially infected leaves.
    #[arg(long)]
    pub j: Option<u32>,
    /// Initial centre state, 0 or 1.
    #[arg(long)]
    pub center: Option<u8>,
    /// Stop once this many leaves are infected.
    #[arg(long)]
    pub reach_l: Option<u32>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct WalksArgs {
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub root_residue: Option<usize>,
    /// Largest n; counts walks of length 2..=2 nmax.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Longest walk length accepted.
    #[arg(long)]
    pub max_length: Option<u32>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleArgs {
    /// star, graph, truncation or walks.
    pub kind: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Star leaves.
    #[arg(long)]
    pub n: Option<u32>,
    /// Graph edges as u-v pairs, e.g. 0-1,1-2.
    #[arg(long)]
    pub edges: Option<String>,
    /// Graph vertex count; one more than the largest endpoint by default.
    #[arg(long)]
    pub vertices: Option<usize>,
    #[arg(long)]
    pub root: Option<u32>,
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub root_residue: Option<usize>,
    /// Depth of the rooted truncation.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Closed-walk length for the enumeration.
    #[arg(long)]
    pub length: Option<u32>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Lambda2Args {
    #[arg(long)]
    pub degrees: Option<String>,
    #[arg(long)]
    pub root_residue: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Survival probability defining the crossing.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub lambda_lo: Option<f64>,
    #[arg(long)]
    pub lambda_hi: Option<f64>,
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub max_vertices: Option<usize>,
    #[arg(long)]
    pub local_window: Option<f64>,
    #[arg(long)]
    pub radius: Option<u32>,
}

fn read_config(path: &Path, subcommand: &str) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(Failure::Usage(format!("config {} must be a JSON object", path.display())));
    };
    // A manifest carries its parameters under `params`.
    if let (Some(Value::String(sub)), Some(Value::Object(_))) = (map.get("subcommand"), map.get("params")) {
        if sub != subcommand {
            return Err(Failure::Usage(format!("manifest is for `{sub}`, not `{subcommand}`")));
        }
        let Some(Value::Object(params)) = map.remove("params") else {
            unreachable!("checked above")
        };
        return Ok(params);
    }
    Ok(map)
}

/// Overlays `cli` on the config file's values. Absent flags (and `false`
/// switches) leave the config value in place.
pub fn merge<T: Serialize + DeserializeOwned + Default>(
    cli: &T,
    config: Option<&Path>,
    subcommand: &str,
) -> Result<T, Failure> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(cli).expect("serializable")).expect("round trip"));
    };
    let known = match serde_json::to_value(T::default()).expect("serializable") {
        Value::Object(m) => m,
        _ => unreachable!("argument structs serialize to objects"),
    };
    let mut merged = read_config(path, subcommand)?;
    if let Some(bad) = merged.keys().find(|k| !known.contains_key(*k)) {
        return Err(Failure::Usage(format!("unknown key {bad:?} in config {}", path.display())));
    }
    if let Value::Object(flags) = serde_json::to_value(cli).expect("serializable") {
        for (k, v) in flags {
            if !(v.is_null() || v == Value::Bool(false)) {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
}

/// `start:stop:step` with `stop` included when it lies on the grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("grid {text:?} must be start:stop:step with step > 0 and stop >= start"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(bad());
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Integer `start:stop:step`, inclusive of `stop`.
pub fn parse_int_range(text: &str) -> Result<Vec<u32>, Failure> {
    let bad = || Failure::Usage(format!("range {text:?} must be start:stop:step of positive integers"));
    let parts: Vec<u32> = text
        .split(':')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if step == 0 || stop < start || start == 0 {
        return Err(bad());
    }
    Ok((start..=stop).step_by(step as usize).collect())
}
