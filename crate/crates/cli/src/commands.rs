use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use cptree::analytic_bounds::{bounds_report, lambda2_asymptotic, PUBLISHED_PERIOD3};
use cptree::exact_oracle::{enumerate_closed_walks, exact_contact_small, star_mean_absorption};
use cptree::report::{self, Period3Table};
use cptree::simulator::{
    estimate_lambda2, run_replicas, star_replicas, survival_curve, survival_from_outcomes, Criterion, ExplicitGraph,
    Lambda2Protocol, Mode, SimConfig, StarHit, StarState, StarStops, StopRule,
};
use cptree::walk_counts::{closed_walk_count, m0_estimates_bounded, DEFAULT_MAX_LENGTH};
use cptree::PeriodicDegreeSequence;

use crate::args::{
    parse_grid, parse_int_range, BoundsArgs, Lambda2Args, OracleArgs, PredictArgs, RunArgs, SimulateArgs, StarArgs,
    SweepArgs, TableArgs, WalksArgs,
};
use crate::error::Failure;

/// What a subcommand produced: the primary output, the resolved parameters
/// that reproduce it, and an optional summary for the manifest.
pub struct Output {
    pub body: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub summary: Option<Value>,
}

fn params<T: Serialize>(p: &T) -> Value {
    serde_json::to_value(p).expect("parameters serialize")
}

fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, Failure> {
    value.clone().ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn degrees(text: &Option<String>) -> Result<PeriodicDegreeSequence, Failure> {
    Ok(required(text, "degrees")?.parse()?)
}

fn mode(text: &str) -> Result<Mode, Failure> {
    match text {
        "contact" => Ok(Mode::Contact),
        "brw" => Ok(Mode::Brw),
        other => Err(Failure::Usage(format!("unknown mode {other:?}; expected contact or brw"))),
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Contact => "contact",
        Mode::Brw => "brw",
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("unavailable".into(), |v| format!("{v:.6}"))
}

pub fn bounds(a: BoundsArgs) -> Result<Output, Failure> {
    let seq = degrees(&a.degrees)?;
    let r = bounds_report(&seq)?;
    let mut body = String::new();
    let mut line = |k: &str, v: String| writeln!(body, "{k}={v}").expect("string write");
    line("degrees", seq.to_string());
    line("lambda_g", format!("{:.6}", r.lambda_g));
    line("lambda1_upper", fmt_opt(r.lambda1_upper));
    let ell_key = if seq.period() <= 2 { "lambda_ell" } else { "lambda_ell_lower" };
    line(ell_key, fmt_opt(r.lambda_ell_lower));
    if let Some(x0) = r.x0 {
        line("x0", format!("{x0:.6}"));
    }
    line("c", fmt_opt(r.lambda2_asymptotic_c));
    line("lambda2_prediction", fmt_opt(r.prediction));
    let published = PUBLISHED_PERIOD3.iter().find(|p| p.degrees[..] == *seq.degrees());
    if let Some(p) = published {
        line("published_x0", p.x0.to_string());
        line("published_lambda_ell_lower", p.lambda_ell_lower.to_string());
        line("published_lambda1_upper", p.lambda1_upper.to_string());
        line(
            "published_lambda_g",
            format!("{} (inconsistent with the characteristic polynomial)", p.lambda_g),
        );
    }
    for note in &r.notes {
        line("note", note.clone());
    }
    Ok(Output {
        body,
        params: params(&a),
        seed: None,
        summary: Some(json!({ "report": r, "published": published })),
    })
}

pub fn table(a: TableArgs) -> Result<Output, Failure> {
    let which: Period3Table = required(&a.which, "which")?.parse().map_err(Failure::Usage)?;
    Ok(Output {
        body: report::period3_table_csv(which)?,
        params: params(&a),
        seed: None,
        summary: None,
    })
}

pub fn predict(a: PredictArgs) -> Result<Output, Failure> {
    let seq = degrees(&a.degrees)?;
    let rows = match &a.n_range {
        None => vec![lambda2_asymptotic(&seq, None)?],
        Some(range) => parse_int_range(range)?
            .into_iter()
            .map(|n| lambda2_asymptotic(&seq, Some(n)))
            .collect::<Result<_, _>>()?,
    };
    let warnings: Vec<&String> = rows.iter().flat_map(|p| &p.warnings).collect();
    Ok(Output {
        body: report::predict_csv(&rows),
        params: params(&a),
        seed: None,
        summary: (!warnings.is_empty()).then(|| json!({ "warnings": warnings })),
    })
}

/// Fills every simulation default into `run` and builds the config.
fn sim_config(run: &mut RunArgs, lambda: f64) -> Result<SimConfig, Failure> {
    let seq = degrees(&run.degrees)?;
    let base = SimConfig::new(seq, lambda);
    let cfg = SimConfig {
        root_residue: *run.root_residue.get_or_insert(base.root_residue),
        horizon: *run.horizon.get_or_insert(base.horizon),
        max_events: *run.max_events.get_or_insert(base.max_events),
        max_vertices: *run.max_vertices.get_or_insert(base.max_vertices),
        seed: *run.seed.get_or_insert(base.seed),
        replicas: *run.replicas.get_or_insert(base.replicas),
        mode: mode(run.mode.get_or_insert_with(|| mode_name(base.mode).into()))?,
        brw_population_cap: *run.population_cap.get_or_insert(base.brw_population_cap),
        local_window: *run.local_window.get_or_insert(base.local_window),
        radius: run.radius,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(mut a: SimulateArgs) -> Result<Output, Failure> {
    let lambda = required(&a.lambda, "lambda")?;
    let mut cfg = sim_config(&mut a.run, lambda)?;
    cfg.audit = a.audit;
    let outcomes = run_replicas(&cfg, StopRule::Full);
    let extinct: Vec<f64> = outcomes.iter().filter_map(|o| o.extinction_time).collect();
    let mean_extinction = (!extinct.is_empty()).then(|| extinct.iter().sum::<f64>() / extinct.len() as f64);
    let summary = json!({
        "replicas": outcomes.len(),
        "extinct": extinct.len(),
        "mean_extinction_time": mean_extinction,
        "truncated": outcomes.iter().filter(|o| o.truncated.is_some()).count(),
        "wasted_events": outcomes.iter().map(|o| o.wasted_events).sum::<u64>(),
        "global": survival_from_outcomes(lambda, &outcomes, Criterion::Global),
        "local": survival_from_outcomes(lambda, &outcomes, Criterion::Local),
    });
    Ok(Output {
        body: report::replicas_csv(&outcomes),
        seed: Some(cfg.seed),
        params: params(&a),
        summary: Some(summary),
    })
}

pub fn sweep(mut a: SweepArgs) -> Result<Output, Failure> {
    let grid = parse_grid(&required(&a.lambda_grid, "lambda-grid")?)?;
    let criterion: Criterion = a
        .criterion
        .get_or_insert_with(|| "global".into())
        .parse()
        .map_err(Failure::Usage)?;
    let mut estimates = Vec::with_capacity(grid.len());
    let mut seed = None;
    for lambda in grid {
        let cfg = sim_config(&mut a.run, lambda)?;
        seed = Some(cfg.seed);
        estimates.push(survival_curve(&cfg, criterion)?);
    }
    Ok(Output {
        body: report::sweep_csv(&estimates),
        seed,
        params: params(&a),
        summary: None,
    })
}

pub fn star(mut a: StarArgs) -> Result<Output, Failure> {
    let n = required(&a.n, "n")?;
    let lambda = required(&a.lambda, "lambda")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Failure::Usage(format!("invalid rate {lambda}")));
    }
    let center = match *a.center.get_or_insert(1) {
        0 => false,
        1 => true,
        c => return Err(Failure::Usage(format!("--center must be 0 or 1, got {c}"))),
    };
    let init = StarState::new(n, *a.j.get_or_insert(0), center)?;
    let stops = StarStops {
        reach_l: a.reach_l,
        horizon: a.horizon,
        max_events: Some(*a.max_events.get_or_insert(10_000_000)),
    };
    let seed = *a.seed.get_or_insert(0);
    let replicas = *a.replicas.get_or_insert(1000);
    if replicas == 0 {
        return Err(Failure::Usage("--replicas must be at least 1".into()));
    }
    let runs = star_replicas(lambda, init, &stops, seed, replicas);
    let count = |h: StarHit| runs.iter().filter(|r| r.hit == h).count();
    let times: Vec<f64> = runs.iter().map(|r| r.time).collect();
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let se = if times.len() > 1 {
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (times.len() - 1) as f64;
        Some((var / times.len() as f64).sqrt())
    } else {
        None
    };
    let exact = (stops.reach_l.is_none() && stops.horizon.is_none())
        .then(|| star_mean_absorption(n, lambda).ok())
        .flatten()
        .map(|s| s.expected(init.j, init.center));
    let summary = json!({
        "mean_time": mean,
        "standard_error": se,
        "exact_mean_absorption_time": exact,
        "absorbed": count(StarHit::Absorbed),
        "reached_l": count(StarHit::ReachedL),
        "horizon": count(StarHit::Horizon),
        "event_cap": count(StarHit::EventCap),
    });
    Ok(Output {
        body: report::star_csv(&runs),
        seed: Some(seed),
        params: params(&a),
        summary: Some(summary),
    })
}

pub fn walks(mut a: WalksArgs) -> Result<Output, Failure> {
    let seq = degrees(&a.degrees)?;
    let t = m0_estimates_bounded(
        &seq,
        *a.root_residue.get_or_insert(0),
        *a.nmax.get_or_insert(10),
        *a.max_length.get_or_insert(DEFAULT_MAX_LENGTH),
    )?;
    let summary = json!({
        "supermultiplicativity_violation": t.supermultiplicativity_violation(),
        "running_max": t.running_max().last(),
    });
    Ok(Output {
        body: report::walks_csv(&t),
        seed: None,
        params: params(&a),
        summary: Some(summary),
    })
}

fn parse_edges(text: &str) -> Result<Vec<(u32, u32)>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (u, v) = pair
                .split_once('-')
                .ok_or_else(|| Failure::Usage(format!("edge {pair:?} is not of the form u-v")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Failure::Usage(format!("bad vertex {s:?} in edge {pair:?}")))
            };
            Ok((parse(u)?, parse(v)?))
        })
        .collect()
}

fn contact_csv(g: &ExplicitGraph, lambda: f64) -> Result<(String, Value), Failure> {
    let s = exact_contact_small(g, lambda)?;
    let body = format!(
        "vertices,lambda,mean_extinction_time,mean_root_visits,solve_residual,method\n{},{},{},{},{:e},{}\n",
        s.vertices,
        s.lambda,
        s.mean_extinction_time,
        s.mean_root_visits,
        s.solve_residual,
        if s.dense { "dense" } else { "gauss_seidel" }
    );
    Ok((body, serde_json::to_value(&s).expect("serializable")))
}

pub fn oracle(mut a: OracleArgs) -> Result<Output, Failure> {
    let kind = required(&a.kind, "kind")?;
    let (body, summary) = match kind.as_str() {
        "star" => {
            let s = star_mean_absorption(required(&a.n, "n")?, required(&a.lambda, "lambda")?)?;
            let summary = json!({ "solve_residual": s.solve_residual, "from_0_1": s.expected(0, true) });
            (report::absorption_csv(&s), summary)
        }
        "graph" => {
            let edges = parse_edges(&required(&a.edges, "edges")?)?;
            let implied = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(1);
            let vertices = *a.vertices.get_or_insert(implied);
            let g = ExplicitGraph::from_edges(vertices, &edges, *a.root.get_or_insert(0))?;
            contact_csv(&g, required(&a.lambda, "lambda")?)?
        }
        "truncation" => {
            let seq = degrees(&a.degrees)?;
            let g = ExplicitGraph::rooted_truncation(
                &seq,
                *a.root_residue.get_or_insert(0),
                required(&a.depth, "depth")?,
            )?;
            contact_csv(&g, required(&a.lambda, "lambda")?)?
        }
        "walks" => {
            let seq = degrees(&a.degrees)?;
            let r = *a.root_residue.get_or_insert(0);
            let length = required(&a.length, "length")?;
            let enumerated = enumerate_closed_walks(&seq, r, length)?;
            let dp = closed_walk_count(&seq, r, length)?;
            let body = format!("two_n,enumerated,dp,agree\n{length},{enumerated},{dp},{}\n", enumerated == dp);
            (body, json!({ "agree": enumerated == dp }))
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown oracle {other:?}; expected star, graph, truncation or walks"
            )))
        }
    };
    Ok(Output {
        body,
        seed: None,
        params: params(&a),
        summary: Some(summary),
    })
}

pub fn lambda2(mut a: Lambda2Args) -> Result<Output, Failure> {
    let seq = degrees(&a.degrees)?;
    let prediction = lambda2_asymptotic(&seq, None).ok().map(|p| p.prediction);
    let scaled = |factor: f64, flag: &str| {
        prediction
            .map(|p| factor * p)
            .ok_or_else(|| Failure::Usage(format!("--{flag} is required when no asymptotic prediction exists")))
    };
    let protocol = Lambda2Protocol {
        horizon: *a.horizon.get_or_insert(50.0),
        replicas: *a.replicas.get_or_insert(400),
        target: *a.target.get_or_insert(0.05),
        tolerance: match a.tolerance {
            Some(t) => t,
            None => *a.tolerance.insert(scaled(0.05, "tolerance")?),
        },
        seed: *a.seed.get_or_insert(0),
        lambda_lo: match a.lambda_lo {
            Some(l) => l,
            None => *a.lambda_lo.insert(scaled(0.5, "lambda-lo")?),
        },
        lambda_hi: match a.lambda_hi {
            Some(h) => h,
            None => *a.lambda_hi.insert(scaled(2.5, "lambda-hi")?),
        },
        root_residue: a.root_residue,
        max_events: *a.max_events.get_or_insert(500_000),
        max_vertices: *a.max_vertices.get_or_insert(1_000_000),
        local_window: *a.local_window.get_or_insert(0.5),
        radius: a.radius,
    };
    let est = estimate_lambda2(&seq, &protocol)?;
    let summary = json!({
        "lo": est.lo,
        "hi": est.hi,
        "midpoint": est.midpoint(),
        "prediction": prediction,
        "ratio": prediction.map(|p| est.midpoint() / p),
    });
    Ok(Output {
        body: report::sweep_csv(&est.evaluations),
        seed: Some(protocol.seed),
        params: params(&a),
        summary: Some(summary),
    })
}
