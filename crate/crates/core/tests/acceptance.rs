//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cptree::analytic_bounds::cubic::discriminant_exact;
use cptree::analytic_bounds::{
    growth_eigenvalue, growth_eigenvalue_closed_form, harmonic_weights_period2, harmonic_weights_period3,
    harmonicity_residual, lambda1_upper, lambda2_asymptotic, lambda_ell_lower_period3, lambda_ell_period2, lambda_g,
    pemantle_weights_period2, period3_d_coefficients, period3_d_exact, HarmonicWeights,
};
use cptree::exact_oracle::{
    enumerate_closed_walks, exact_contact_small, star_mean_absorption, MAX_ENUMERATION_LENGTH,
};
use cptree::report::{replicas_csv, star_csv, sweep_csv};
use cptree::simulator::{
    estimate_lambda2, replica_rng, run_on, star_replicas, survival_from_outcomes, Criterion, ExplicitGraph,
    Lambda2Protocol, Mode, SimConfig, StarState, StarStops, StopRule,
};
use cptree::walk_counts::{closed_walk_count, level_return_count, m0_estimates};
use cptree::PeriodicDegreeSequence;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn seq(degrees: &[u32]) -> PeriodicDegreeSequence {
    PeriodicDegreeSequence::new(degrees.to_vec()).unwrap()
}

fn binom(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::from(1u8), |acc, i| acc * (n - i) / (i + 1))
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

fn golden_period_two() -> Verdict {
    let s = seq(&[3, 4]);
    let g = lambda_g(&s).unwrap();
    let l1 = lambda1_upper(&s).unwrap();
    let ell = lambda_ell_period2(3, 4);
    verdict(
        within(g, 0.223607, 1e-6) && within(l1, 0.405827, 1e-6) && within(ell, 0.267949, 1e-6),
        format!("(3,4): lambda_g={g:.7} lambda1_upper={l1:.7} lambda_ell={ell:.7}"),
    )
}

fn golden_period_three() -> Verdict {
    let rows = [
        ([2, 3, 4], 11.847, 0.2905, 0.5306),
        ([3, 4, 5], 15.887, 0.2509, 0.3430),
        ([4, 6, 8], 23.693, 0.2054, 0.2097),
        ([6, 8, 10], 31.774, 0.1774, 0.1464),
    ];
    let mut pass = true;
    let mut cells = Vec::new();
    for (d, x0, lower, l1) in rows {
        let p3 = lambda_ell_lower_period3(d[0], d[1], d[2]).unwrap();
        let up = lambda1_upper(&seq(&d)).unwrap();
        pass &= within(p3.x0, x0, 1e-3) && within(p3.bound, lower, 1e-4) && within(up, l1, 1e-4);
        cells.push(format!("{d:?}:{:.3}/{:.4}/{:.4}", p3.x0, p3.bound, up));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d: Vec<u32> = (0..3).map(|_| rng.random_range(1..=100)).collect();
        let s = seq(&d);
        let power = 1.0 / growth_eigenvalue(&s).unwrap();
        let closed = 1.0 / growth_eigenvalue_closed_form(&s).unwrap().unwrap();
        worst = worst.max((power - closed).abs());
    }
    pass &= worst <= 1e-10;
    verdict(
        pass,
        format!("x0/lower/lambda1 {}; lambda_g power vs polynomial max diff {worst:.1e} on 100 triples", cells.join(" ")),
    )
}

fn cubic_structure() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut equal, mut bad) = (0, 0, Vec::new());
    while checked < 1000 {
        let [a, b, c]: [u32; 3] = std::array::from_fn(|_| rng.random_range(1..=100));
        if a == b && b == c {
            // D = (x - a)^2 (x - 4a): a double root.
            equal += 1;
            continue;
        }
        checked += 1;
        let [c3, c2, c1, c0] = period3_d_coefficients(a, b, c);
        let sigma = (a + b + c) as i128;
        let p3 = lambda_ell_lower_period3(a, b, c).unwrap();
        let roots = &p3.roots.roots;
        let ok = discriminant_exact(c3, c2, c1, c0) > 0
            && roots.len() == 3
            && roots.iter().all(|&r| r > 0.0)
            && p3.x0 >= sigma as f64
            && period3_d_exact(a, b, c, sigma) == -4 * (a * b * c) as i128;
        if !ok {
            bad.push((a, b, c));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        bad.is_empty() && elapsed < 1.0,
        format!("{checked} triples, {} violations {bad:?}, {equal} all-equal draws skipped, {elapsed:.3}s", bad.len()),
    )
}

fn weights_ok(w: &HarmonicWeights, s: &PeriodicDegreeSequence, lambda: f64) -> bool {
    w.g_values.iter().all(|&g| g > 0.0)
        && harmonicity_residual(s, lambda, w).unwrap().iter().all(|r| r.abs() < 1e-10)
}

fn harmonic_boundary() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let (a, b) = (rng.random_range(1..=100), rng.random_range(1..=100));
        let s = seq(&[a, b]);
        let bound = lambda_ell_period2(a, b);
        let below = bound * (1.0 - 1e-6);
        let inside = harmonic_weights_period2(a, b, below).is_ok_and(|w| weights_ok(&w, &s, below));
        let outside = harmonic_weights_period2(a, b, bound * (1.0 + 1e-6)).is_err();
        let pemantle = [0.3, 0.9, 1.0 - 1e-6].iter().all(|f| {
            let lambda = f * bound;
            let w = pemantle_weights_period2(a, b, lambda);
            harmonicity_residual(&s, lambda, &w).unwrap().iter().all(|&r| r <= 0.0)
        });
        if !(inside && outside && pemantle) {
            failures.push(format!("({a},{b})"));
        }
        let [a, b, c]: [u32; 3] = std::array::from_fn(|_| rng.random_range(1..=100));
        let s = seq(&[a, b, c]);
        let bound = lambda_ell_lower_period3(a, b, c).unwrap().bound;
        let below = bound * (1.0 - 1e-6);
        let inside = harmonic_weights_period3(a, b, c, below).is_ok_and(|w| weights_ok(&w, &s, below));
        let outside = harmonic_weights_period3(a, b, c, bound * (1.0 + 1e-6)).is_err();
        if !(inside && outside) {
            failures.push(format!("({a},{b},{c})"));
        }
    }
    verdict(
        failures.is_empty(),
        format!("100 pairs + 100 triples at bound*(1 -/+ 1e-6), Pemantle weights superharmonic; failures {failures:?}"),
    )
}

fn walk_suite() -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();
    for d in [[1, 1], [3, 4], [1, 10]] {
        let t = m0_estimates(&seq(&d), 0, 20).unwrap();
        if let Some(v) = t.supermultiplicativity_violation() {
            problems.push(format!("{d:?} supermultiplicativity at {v:?}"));
        }
        let rm = t.running_max();
        let limit = (d[0] as f64).sqrt() + (d[1] as f64).sqrt();
        if rm.windows(2).any(|w| w[1] < w[0]) || rm.iter().any(|&m| m > limit) {
            problems.push(format!("{d:?} running max"));
        }
    }
    let mut enumerated = 0;
    for d in [vec![1], vec![2], vec![3], vec![1, 2], vec![3, 4], vec![1, 3, 2], vec![2, 1, 1, 3]] {
        let s = seq(&d);
        for r in 0..d.len() {
            for two_n in (0..=MAX_ENUMERATION_LENGTH).step_by(2) {
                enumerated += 1;
                if enumerate_closed_walks(&s, r, two_n).unwrap() != closed_walk_count(&s, r, two_n).unwrap() {
                    problems.push(format!("{d:?} residue {r} length {two_n} enumeration"));
                }
            }
        }
    }
    for d in 1..=6u32 {
        for n in 1..=15u32 {
            if level_return_count(d, d, n).total != binom(2 * n as u64, n as u64) * BigUint::from(d).pow(n) {
                problems.push(format!("homogeneous identity d={d} n={n}"));
            }
        }
    }
    for d in [2u32, 3] {
        for n in 1..=10u32 {
            let m0 = closed_walk_count(&seq(&[d]), 0, 2 * n).unwrap();
            // M0 * 2n >= binom(2n, n) d^n, in integers.
            if m0 * BigUint::from(2 * n) < binom(2 * n as u64, n as u64) * BigUint::from(d).pow(n) {
                problems.push(format!("good-path bound d={d} n={n}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        problems.is_empty() && elapsed < 10.0,
        format!("{enumerated} enumeration cross-checks; problems {problems:?}; {elapsed:.2}s"),
    )
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

const ORACLE_REPLICAS: u64 = 100_000;

fn small_graph_fixtures() -> Vec<(&'static str, ExplicitGraph, f64)> {
    let edge = ExplicitGraph::from_edges(2, &[(0, 1)], 0).unwrap();
    let tree = ExplicitGraph::rooted_truncation(&seq(&[1, 3]), 1, 2).unwrap();
    vec![
        ("edge", edge, 1.0),
        ("(1,3) depth 2", tree.clone(), 0.3),
        ("(1,3) depth 2", tree, 0.8),
    ]
}

/// Simulated contact-process extinction times on a fixed graph.
fn graph_outcomes(graph: &ExplicitGraph, lambda: f64, seed: u64) -> Vec<cptree::simulator::SimOutcome> {
    let mut cfg = SimConfig::new(seq(&[1]), lambda);
    cfg.horizon = 1e9;
    cfg.mode = Mode::Contact;
    (0..ORACLE_REPLICAS)
        .into_par_iter()
        .map(|r| {
            let mut g = graph.clone();
            run_on(&mut g, &cfg, &mut replica_rng(seed, r, 0), StopRule::Full)
        })
        .collect()
}

fn simulator_vs_oracle(csvs: &mut Vec<String>) -> Verdict {
    let start = Instant::now();
    let mut cells = Vec::new();
    let mut pass = true;
    for n in [3u32, 5, 10] {
        for lambda in [0.3, 0.5, 1.0] {
            let exact = star_mean_absorption(n, lambda).unwrap().expected(0, true);
            let init = StarState::new(n, 0, true).unwrap();
            let runs = star_replicas(lambda, init, &StarStops::default(), 60 + n as u64, ORACLE_REPLICAS);
            let (mean, se) = mean_and_se(&runs.iter().map(|r| r.time).collect::<Vec<_>>());
            let z = (mean - exact) / se;
            pass &= z.abs() <= 3.0;
            cells.push(format!("star({n},{lambda}) z={z:+.2}"));
            csvs.push(star_csv(&runs));
        }
    }
    for (i, (name, graph, lambda)) in small_graph_fixtures().into_iter().enumerate() {
        let exact = exact_contact_small(&graph, lambda).unwrap();
        let outcomes = graph_outcomes(&graph, lambda, 70 + i as u64);
        let times: Vec<f64> = outcomes.iter().map(|o| o.extinction_time.expect("finite graphs die out")).collect();
        let (mean, se) = mean_and_se(&times);
        let z = (mean - exact.mean_extinction_time) / se;
        let visits: Vec<f64> = outcomes.iter().map(|o| o.root_visit_times.len() as f64).collect();
        let (vmean, vse) = mean_and_se(&visits);
        let zv = (vmean - exact.mean_root_visits) / vse;
        pass &= z.abs() <= 3.0;
        cells.push(format!("{name}@{lambda} z={z:+.2} (root visits z={zv:+.2})"));
        csvs.push(replicas_csv(&outcomes));
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        pass && elapsed < 120.0,
        format!("{ORACLE_REPLICAS} replicas each, |z| <= 3: {}; {elapsed:.1}s", cells.join(", ")),
    )
}

fn brw_local(lambda: f64) -> (cptree::simulator::SurvivalEstimate, Vec<cptree::simulator::SimOutcome>) {
    let cfg = SimConfig {
        mode: Mode::Brw,
        horizon: 100.0,
        replicas: 1000,
        brw_population_cap: 100_000,
        seed: 11,
        ..SimConfig::new(seq(&[3, 4]), lambda)
    };
    let outcomes: Vec<_> = cptree::simulator::run_replicas(&cfg, StopRule::LocalSuccess);
    (survival_from_outcomes(lambda, &outcomes, Criterion::Local), outcomes)
}

fn lambda2_protocol(n: u32, prediction: f64) -> Lambda2Protocol {
    Lambda2Protocol {
        horizon: 50.0,
        replicas: 400,
        target: 0.05,
        tolerance: 0.05 * prediction,
        seed: 100 + n as u64,
        lambda_lo: 0.5 * prediction,
        lambda_hi: 2.5 * prediction,
        root_residue: Some(1),
        max_events: 500_000,
        max_vertices: 1_000_000,
        local_window: 0.5,
        radius: Some(5),
    }
}

fn threshold_sanity(csvs: &mut Vec<String>, lambda2_sizes: &[u32]) -> Verdict {
    let start = Instant::now();
    let ell = lambda_ell_period2(3, 4);
    let (sub, sub_runs) = brw_local(0.8 * ell);
    let (sup, sup_runs) = brw_local(1.3 * ell);
    csvs.push(replicas_csv(&sub_runs));
    csvs.push(replicas_csv(&sup_runs));
    let brw_pass = 1.0 - sub.probability > 0.95 && sup.probability > 0.2 && sub.ci_high < sup.ci_low;
    let mut pass = brw_pass;
    let mean_visits = |runs: &[cptree::simulator::SimOutcome], capped: bool| {
        let picked: Vec<f64> = runs
            .iter()
            .filter(|o| o.truncated.is_some() == capped)
            .map(|o| o.root_visit_times.len() as f64)
            .collect();
        picked.iter().sum::<f64>() / picked.len().max(1) as f64
    };
    let mut cells = vec![format!(
        "(i) BRW (3,4) local extinction {:.3} at 0.8*lambda_ell (mean root visits {:.2}), local survival {:.3} [{:.3},{:.3}] at 1.3*lambda_ell ({} population-capped, mean root visits {:.1} before the cap vs {:.2} in uncapped runs)",
        1.0 - sub.probability,
        mean_visits(&sub_runs, false),
        sup.probability,
        sup.ci_low,
        sup.ci_high,
        sup.truncated,
        mean_visits(&sup_runs, true),
        mean_visits(&sup_runs, false)
    )];
    let mut ratios = Vec::new();
    for &n in lambda2_sizes {
        let s = seq(&[1, n]);
        let prediction = lambda2_asymptotic(&s, None).unwrap().prediction;
        match estimate_lambda2(&s, &lambda2_protocol(n, prediction)) {
            Ok(est) => {
                let ratio = est.midpoint() / prediction;
                pass &= (0.5..=2.5).contains(&ratio);
                ratios.push(format!("n={n} {ratio:.3}"));
                csvs.push(sweep_csv(&est.evaluations));
            }
            Err(e) => {
                pass = false;
                ratios.push(format!("n={n} error: {e}"));
            }
        }
    }
    cells.push(format!("(ii) lambda2_hat/prediction: {}", ratios.join(", ")));
    let elapsed = start.elapsed().as_secs_f64();
    verdict(pass && elapsed < 900.0, format!("{}; {elapsed:.0}s", cells.join("; ")))
}

fn determinism(first: &[String]) -> Verdict {
    let mut again = Vec::new();
    simulator_vs_oracle(&mut again);
    threshold_sanity(&mut again, &[50, 100, 200]);
    let same = first.len() == again.len() && first.iter().zip(&again).all(|(a, b)| a == b);
    let bytes: usize = first.iter().map(String::len).sum();
    verdict(same, format!("{} CSV outputs ({bytes} bytes) rerun byte-identical: {same}", first.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, title: &str, v: Verdict| {
        println!("{} criterion {id} ({title}): {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += !v.pass as u32;
    };
    report(1, "golden bounds, period 2", golden_period_two());
    report(2, "golden bounds, period 3", golden_period_three());
    report(3, "cubic structure", cubic_structure());
    report(4, "harmonic weight boundary", harmonic_boundary());
    report(5, "walk counts", walk_suite());
    let mut csvs = Vec::new();
    report(6, "simulator vs oracle", simulator_vs_oracle(&mut csvs));
    report(7, "threshold sanity", threshold_sanity(&mut csvs, &[50, 100, 200]));
    report(8, "determinism", determinism(&csvs));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
