//! Replica-parallel survival estimates and threshold bisection.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tree_model::PeriodicDegreeSequence;

use super::engine::run_replica;
use super::{Mode, SimConfig, SimError, SimOutcome, StopRule};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub const MIN_SURVIVAL_REPLICAS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Still occupied at the horizon.
    Global,
    /// Root occupied at some time in the window ending at the horizon.
    Local,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Global => "global",
            Criterion::Local => "local",
        })
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(Criterion::Global),
            "local" => Ok(Criterion::Local),
            other => Err(format!("unknown criterion {other:?}; expected global or local")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub lambda: f64,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: u64,
    pub survivors: u64,
    /// Survivors that were labelled so because a cap was hit.
    pub truncated: u64,
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// All replicas of `cfg`, in replica order regardless of scheduling.
pub fn run_replicas(cfg: &SimConfig, stop: StopRule) -> Vec<SimOutcome> {
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, r, stop))
        .collect()
}

pub fn survival_from_outcomes(lambda: f64, outcomes: &[SimOutcome], criterion: Criterion) -> SurvivalEstimate {
    let survivors = outcomes.iter().filter(|o| o.survived(criterion)).count() as u64;
    let truncated = outcomes.iter().filter(|o| o.truncated.is_some()).count() as u64;
    let replicas = outcomes.len() as u64;
    let (ci_low, ci_high) = wilson_interval(survivors, replicas, Z95);
    SurvivalEstimate {
        lambda,
        probability: if replicas == 0 { 0.0 } else { survivors as f64 / replicas as f64 },
        ci_low,
        ci_high,
        replicas,
        survivors,
        truncated,
    }
}

/// Survival frequency of `cfg.replicas` independent runs. Under the local
/// criterion a replica stops as soon as its outcome is decided.
pub fn survival_curve(cfg: &SimConfig, criterion: Criterion) -> Result<SurvivalEstimate, SimError> {
    cfg.validate()?;
    if cfg.replicas < MIN_SURVIVAL_REPLICAS {
        return Err(SimError::InvalidConfig(format!(
            "survival estimates need at least {MIN_SURVIVAL_REPLICAS} replicas"
        )));
    }
    let stop = match criterion {
        Criterion::Global => StopRule::Full,
        Criterion::Local => StopRule::LocalSuccess,
    };
    Ok(survival_from_outcomes(cfg.lambda, &run_replicas(cfg, stop), criterion))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lambda2Protocol {
    pub horizon: f64,
    pub replicas: u64,
    #[serde(default = "default_target")]
    pub target: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Residue of the root; the residue with the most children when absent.
    #[serde(default)]
    pub root_residue: Option<usize>,
    pub max_events: u64,
    pub max_vertices: usize,
    #[serde(default = "default_window")]
    pub local_window: f64,
    /// Simulate on the ball of this radius around the root instead of the
    /// whole tree.
    #[serde(default)]
    pub radius: Option<u32>,
}

fn default_target() -> f64 {
    0.05
}

fn default_window() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lambda2Estimate {
    pub lo: f64,
    pub hi: f64,
    /// Every survival estimate computed, in evaluation order.
    pub evaluations: Vec<SurvivalEstimate>,
}

impl Lambda2Estimate {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisects on the local-survival probability crossing `protocol.target`. The
/// same seed is used at every rate, so the replicas share random streams
/// across rates.
pub fn estimate_lambda2(seq: &PeriodicDegreeSequence, protocol: &Lambda2Protocol) -> Result<Lambda2Estimate, SimError> {
    let (mut lo, mut hi) = (protocol.lambda_lo, protocol.lambda_hi);
    if !(lo >= 0.0 && hi >= lo) {
        return Err(SimError::BracketFailure {
            lo,
            hi,
            p_lo: f64::NAN,
            p_hi: f64::NAN,
        });
    }
    if !(protocol.tolerance > 0.0) || !(0.0..1.0).contains(&protocol.target) {
        return Err(SimError::InvalidConfig("tolerance must be positive and target in [0, 1)".into()));
    }
    let root_residue = protocol.root_residue.unwrap_or_else(|| {
        let d = seq.degrees();
        (0..d.len()).fold(0, |best, i| if d[i] > d[best] { i } else { best })
    });
    let mut evaluations = Vec::new();
    let mut probe = |lambda: f64| -> Result<f64, SimError> {
        let cfg = SimConfig {
            root_residue,
            horizon: protocol.horizon,
            max_events: protocol.max_events,
            max_vertices: protocol.max_vertices,
            seed: protocol.seed,
            replicas: protocol.replicas,
            mode: Mode::Contact,
            local_window: protocol.local_window,
            radius: protocol.radius,
            ..SimConfig::new(seq.clone(), lambda)
        };
        let est = survival_curve(&cfg, Criterion::Local)?;
        let p = est.probability;
        evaluations.push(est);
        Ok(p)
    };
    let p_lo = probe(lo)?;
    let p_hi = probe(hi)?;
    if p_lo > protocol.target || p_hi < protocol.target {
        return Err(SimError::BracketFailure { lo, hi, p_lo, p_hi });
    }
    while hi - lo > protocol.tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? >= protocol.target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Lambda2Estimate { lo, hi, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(degrees: &str, lambda: f64) -> SimConfig {
        SimConfig::new(degrees.parse().unwrap(), lambda)
    }

    #[test]
    fn wilson_matches_hand_values() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5);
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.01);
        let (lo, hi) = wilson_interval(1000, 1000, Z95);
        assert!(lo > 0.99 && hi == 1.0);
    }

    #[test]
    fn no_births_never_survives() {
        let mut cfg = config("3,4", 0.0);
        cfg.replicas = 1000;
        for criterion in [Criterion::Global, Criterion::Local] {
            let est = survival_curve(&cfg, criterion).unwrap();
            assert_eq!(est.probability, 0.0);
            assert!(est.ci_high < 0.01);
        }
    }

    #[test]
    fn huge_rate_survives() {
        let mut cfg = config("3,4", 10.0);
        cfg.replicas = 200;
        cfg.max_events = 200_000;
        let est = survival_curve(&cfg, Criterion::Global).unwrap();
        assert!(est.probability > 0.95);
        assert!(est.ci_low <= est.probability && est.probability <= est.ci_high);
    }

    #[test]
    fn too_few_replicas_rejected() {
        let mut cfg = config("2", 0.5);
        cfg.replicas = 10;
        assert!(survival_curve(&cfg, Criterion::Global).is_err());
    }

    #[test]
    fn replicas_are_ordered_and_reproducible() {
        let mut cfg = config("1,6", 0.3);
        cfg.replicas = 64;
        cfg.horizon = 20.0;
        let a = run_replicas(&cfg, StopRule::Full);
        let b = run_replicas(&cfg, StopRule::Full);
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| run_replicas(&cfg, StopRule::Full));
        assert_eq!(a, c);
        assert_eq!(a[5], run_replica(&cfg, 5, StopRule::Full));
    }

    fn protocol(lo: f64, hi: f64) -> Lambda2Protocol {
        Lambda2Protocol {
            horizon: 20.0,
            replicas: 200,
            target: 0.05,
            tolerance: 0.05,
            seed: 3,
            lambda_lo: lo,
            lambda_hi: hi,
            root_residue: None,
            max_events: 200_000,
            max_vertices: 200_000,
            local_window: 0.5,
            radius: None,
        }
    }

    #[test]
    fn inverted_bracket_fails() {
        let seq = "1,1".parse().unwrap();
        assert!(matches!(
            estimate_lambda2(&seq, &protocol(2.0, 1.0)),
            Err(SimError::BracketFailure { .. })
        ));
        // Both ends far above the threshold.
        assert!(matches!(
            estimate_lambda2(&seq, &protocol(5.0, 6.0)),
            Err(SimError::BracketFailure { .. })
        ));
    }

    #[test]
    fn line_estimate_is_far_above_tree_bounds() {
        let seq = "1,1".parse().unwrap();
        let long = Lambda2Protocol {
            horizon: 100.0,
            ..protocol(0.1, 4.0)
        };
        let est = estimate_lambda2(&seq, &long).unwrap();
        assert!(est.hi - est.lo <= 0.05);
        assert!(est.lo > 1.0, "{est:?}");
        assert_eq!(est, estimate_lambda2(&seq, &long).unwrap());
    }
}
