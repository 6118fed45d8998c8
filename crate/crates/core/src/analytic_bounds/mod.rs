//! Closed-form critical-value bounds for periodic trees.
//!
//! Everything here is a pure function of the degree sequence (and, for the
//! weight constructions, of `lambda`).

pub mod cubic;
pub mod harmonic;
pub mod perron;

use serde::Serialize;
use thiserror::Error;

use crate::tree_model::PeriodicDegreeSequence;

pub use cubic::{cubic_real_roots, CubicRoots};
pub use harmonic::{
    harmonic_weights_period2, harmonic_weights_period3, harmonicity_residual,
    pemantle_weights_period2, Branch, HarmonicWeights,
};

/// Default `epsilon` in the side condition `max a_i <= n^(1 - epsilon)`.
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("power iteration did not converge in {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("power iteration ({power}) and characteristic polynomial ({closed_form}) disagree")]
    CrossCheck { power: f64, closed_form: f64 },
    #[error("sequence is subcritical for oriented branching: geometric mean {geometric_mean} <= 1")]
    Subcritical { geometric_mean: f64 },
    #[error("leading coefficient of the cubic is zero")]
    DegenerateLeadingCoefficient,
    #[error("no real harmonic weights at lambda = {lambda} (bound {bound})")]
    NoRealSolution { lambda: f64, bound: f64 },
    #[error("no positive harmonic weights at lambda = {lambda} (bound {bound})")]
    NoPositiveSolution { lambda: f64, bound: f64 },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("invalid infection rate {0}")]
    InvalidRate(f64),
    #[error("invalid shape for the asymptotic prediction: {0}")]
    InvalidShape(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Perron eigenvalue `Lambda` of the residue path-counting matrix; the number
/// of length-`n` paths grows like `Lambda^n`.
pub fn growth_eigenvalue(seq: &PeriodicDegreeSequence) -> Result<f64, BoundsError> {
    let power = perron::perron_eigenvalue(&perron::residue_matrix(seq))?.eigenvalue;
    if let Some(closed_form) = growth_eigenvalue_closed_form(seq)? {
        if (power - closed_form).abs() > 1e-9 * closed_form {
            return Err(BoundsError::CrossCheck { power, closed_form });
        }
    }
    Ok(power)
}

/// `d + 1` for k = 1, `sqrt((a+1)(b+1))` for k = 2, and the largest root of
/// `x^3 - (a+b+c) x - (abc + 1)` for k = 3.
pub fn growth_eigenvalue_closed_form(
    seq: &PeriodicDegreeSequence,
) -> Result<Option<f64>, BoundsError> {
    let d: Vec<f64> = seq.degrees().iter().map(|&x| x as f64).collect();
    Ok(match d.as_slice() {
        [d] => Some(d + 1.0),
        [a, b] => Some(((a + 1.0) * (b + 1.0)).sqrt()),
        [a, b, c] => Some(cubic_real_roots(1.0, 0.0, -(a + b + c), -(a * b * c + 1.0))?.largest()),
        _ => None,
    })
}

/// `lambda_g = 1 / Lambda`, the global-survival critical value of the
/// branching random walk.
pub fn lambda_g(seq: &PeriodicDegreeSequence) -> Result<f64, BoundsError> {
    Ok(1.0 / growth_eigenvalue(seq)?)
}

/// `1 / (G - 1)` with `G` the geometric mean of the children counts.
pub fn lambda1_upper(seq: &PeriodicDegreeSequence) -> Result<f64, BoundsError> {
    let geometric_mean = seq.geometric_mean();
    if geometric_mean <= 1.0 + 1e-12 {
        return Err(BoundsError::Subcritical { geometric_mean });
    }
    Ok(1.0 / (geometric_mean - 1.0))
}

/// `lambda_ell = 1 / (sqrt a + sqrt b)` on the `(a, b)` tree.
pub fn lambda_ell_period2(a: u32, b: u32) -> f64 {
    1.0 / ((a as f64).sqrt() + (b as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Period3Bound {
    /// Largest root of `x^3 - 2(a+b+c) x^2 + (a+b+c)^2 x - 4abc`.
    pub x0: f64,
    /// `1 / sqrt(x0)`, a lower bound on `lambda_ell` and hence on `lambda_2`.
    pub bound: f64,
    pub roots: CubicRoots,
}

/// Coefficients of `D(x)` for the `(a, b, c)` tree, exactly.
pub fn period3_d_coefficients(a: u32, b: u32, c: u32) -> [i128; 4] {
    let s = a as i128 + b as i128 + c as i128;
    [1, -2 * s, s * s, -4 * a as i128 * b as i128 * c as i128]
}

/// `D(x)` evaluated exactly at an integer point.
pub fn period3_d_exact(a: u32, b: u32, c: u32, x: i128) -> i128 {
    let [c3, c2, c1, c0] = period3_d_coefficients(a, b, c);
    ((c3 * x + c2) * x + c1) * x + c0
}

pub fn lambda_ell_lower_period3(a: u32, b: u32, c: u32) -> Result<Period3Bound, BoundsError> {
    let coefficients = period3_d_coefficients(a, b, c);
    let [c3, c2, c1, c0] = coefficients.map(|x| x as f64);
    let roots = cubic_real_roots(c3, c2, c1, c0)?;
    let x0 = roots.largest();
    let sigma = a as i128 + b as i128 + c as i128;
    let product = a as i128 * b as i128 * c as i128;
    if period3_d_exact(a, b, c, sigma) != -4 * product {
        return Err(BoundsError::Invariant(format!(
            "D(a+b+c) != -4abc for ({a},{b},{c})"
        )));
    }
    if x0 < sigma as f64 {
        return Err(BoundsError::Invariant(format!(
            "x0 = {x0} below a+b+c = {sigma}"
        )));
    }
    Ok(Period3Bound {
        x0,
        bound: 1.0 / x0.sqrt(),
        roots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lambda2Prediction {
    /// The unique maximum degree.
    pub n: u32,
    /// Number of non-maximal entries.
    pub k: usize,
    /// `log(prod a_i) / log(n)`.
    pub b: f64,
    /// `(k - b) / 2`.
    pub c: f64,
    /// `sqrt(c log(n) / n)`.
    pub prediction: f64,
    pub warnings: Vec<String>,
}

pub fn lambda2_asymptotic(
    seq: &PeriodicDegreeSequence,
    n_override: Option<u32>,
) -> Result<Lambda2Prediction, BoundsError> {
    lambda2_asymptotic_with(seq, n_override, DEFAULT_EPSILON)
}

/// Asymptotic `lambda_2 ~ sqrt(c log n / n)` for an `(a_1, ..., a_k, n)` tree.
///
/// With `n_override` the unique maximal entry is replaced by `n` before the
/// shape is evaluated.
pub fn lambda2_asymptotic_with(
    seq: &PeriodicDegreeSequence,
    n_override: Option<u32>,
    epsilon: f64,
) -> Result<Lambda2Prediction, BoundsError> {
    let unique_max = |d: &[u32]| -> Result<usize, BoundsError> {
        let max = *d.iter().max().expect("non-empty");
        let mut hits = d.iter().enumerate().filter(|(_, &x)| x == max);
        let (index, _) = hits.next().expect("max exists");
        if hits.next().is_some() {
            return Err(BoundsError::InvalidShape(format!(
                "maximum degree {max} is not unique in ({})",
                seq
            )));
        }
        Ok(index)
    };
    let mut degrees = seq.degrees().to_vec();
    let index = unique_max(&degrees)?;
    if let Some(n) = n_override {
        degrees[index] = n;
        if unique_max(&degrees)? != index {
            return Err(BoundsError::InvalidShape(format!(
                "override n = {n} is not the unique maximum"
            )));
        }
    }
    let n = degrees[index];
    if degrees.len() < 2 {
        return Err(BoundsError::InvalidShape(
            "need at least one degree besides the maximum".into(),
        ));
    }
    let others: Vec<u32> = degrees
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, &d)| d)
        .collect();
    let log_n = (n as f64).ln();
    let k = others.len();
    let b = others.iter().map(|&a| (a as f64).ln()).sum::<f64>() / log_n;
    let c = (k as f64 - b) / 2.0;
    if c <= 0.0 {
        return Err(BoundsError::InvalidShape(format!("c = {c} is not positive")));
    }
    let mut warnings = Vec::new();
    let largest_other = *others.iter().max().expect("k >= 1");
    let limit = (n as f64).powf(1.0 - epsilon);
    if largest_other as f64 > limit {
        warnings.push(format!(
            "max a_i = {largest_other} exceeds n^(1-{epsilon}) = {limit:.4}"
        ));
    }
    Ok(Lambda2Prediction {
        n,
        k,
        b,
        c,
        prediction: (c * log_n / n as f64).sqrt(),
        warnings,
    })
}

/// `r = max(2, ceil(j / ln n))`.
pub fn pemantle_r(j: u64, n: u32) -> u64 {
    let ln_n = (n as f64).ln();
    ((j as f64 / ln_n).ceil() as u64).max(2)
}

/// `c4 sqrt(r ln(r) ln(n) / n)` with `j = j1 + j2`.
pub fn pemantle_upper(j1: u64, j2: u64, n: u32, c4: f64) -> f64 {
    let r = pemantle_r(j1 + j2, n) as f64;
    let n = n as f64;
    c4 * (r * r.ln() * n.ln() / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub degrees: PeriodicDegreeSequence,
    pub lambda_g: f64,
    pub lambda1_upper: Option<f64>,
    pub lambda_ell_lower: Option<f64>,
    pub x0: Option<f64>,
    #[serde(rename = "c")]
    pub lambda2_asymptotic_c: Option<f64>,
    pub prediction: Option<f64>,
    pub notes: Vec<String>,
}

/// Every bound that applies to `seq`.
pub fn bounds_report(seq: &PeriodicDegreeSequence) -> Result<BoundsReport, BoundsError> {
    let mut notes = Vec::new();
    let lambda_g = lambda_g(seq)?;
    let lambda1_upper = match lambda1_upper(seq) {
        Ok(v) => Some(v),
        Err(BoundsError::Subcritical { geometric_mean }) => {
            notes.push(format!(
                "lambda1_upper unavailable: oriented branching is subcritical (geometric mean {geometric_mean})"
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let (lambda_ell_lower, x0) = match *seq.degrees() {
        [d] => {
            notes.push("lambda_ell_lower is exact: 1/(2 sqrt d)".into());
            (Some(lambda_ell_period2(d, d)), None)
        }
        [a, b] => {
            notes.push("lambda_ell_lower is exact: 1/(sqrt a + sqrt b)".into());
            (Some(lambda_ell_period2(a, b)), None)
        }
        [a, b, c] => {
            let p3 = lambda_ell_lower_period3(a, b, c)?;
            (Some(p3.bound), Some(p3.x0))
        }
        _ => {
            notes.push("lambda_ell_lower is only available for period <= 3".into());
            (None, None)
        }
    };
    let (c, prediction) = match lambda2_asymptotic(seq, None) {
        Ok(p) => {
            notes.extend(p.warnings.iter().cloned());
            (Some(p.c), Some(p.prediction))
        }
        Err(BoundsError::InvalidShape(why)) => {
            notes.push(format!("no asymptotic lambda_2 prediction: {why}"));
            (None, None)
        }
        Err(e) => return Err(e),
    };
    Ok(BoundsReport {
        degrees: seq.clone(),
        lambda_g,
        lambda1_upper,
        lambda_ell_lower,
        x0,
        lambda2_asymptotic_c: c,
        prediction,
        notes,
    })
}

/// A published row for the period-3 tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedPeriod3Row {
    pub degrees: [u32; 3],
    /// Printed `lambda_g` column; inconsistent with the characteristic
    /// polynomial and kept only for annotation.
    pub lambda_g: f64,
    pub lambda1_upper: f64,
    pub x0: f64,
    pub lambda_ell_lower: f64,
}

pub const PUBLISHED_PERIOD3: [PublishedPeriod3Row; 4] = [
    PublishedPeriod3Row {
        degrees: [2, 3, 4],
        lambda_g: 0.1711,
        lambda1_upper: 0.5306,
        x0: 11.847,
        lambda_ell_lower: 0.2905,
    },
    PublishedPeriod3Row {
        degrees: [3, 4, 5],
        lambda_g: 0.1270,
        lambda1_upper: 0.3430,
        x0: 15.887,
        lambda_ell_lower: 0.2509,
    },
    PublishedPeriod3Row {
        degrees: [4, 6, 8],
        lambda_g: 0.0865,
        lambda1_upper: 0.2097,
        x0: 23.693,
        lambda_ell_lower: 0.2054,
    },
    PublishedPeriod3Row {
        degrees: [6, 8, 10],
        lambda_g: 0.0638,
        lambda1_upper: 0.1464,
        x0: 31.774,
        lambda_ell_lower: 0.1774,
    },
];
