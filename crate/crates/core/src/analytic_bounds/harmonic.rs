//! Harmonic weight functions for the branching random walk.
//!
//! A weight `h` with `h(x+) = g(residue of x+) h(x)` is harmonic when, at every
//! vertex of residue `i` with `d_i` children,
//! `d_i g(i+1) + 1/g(i) = 1/lambda`. Positive solutions exist exactly up to
//! the local-survival lower bound, which is why construction failure above the
//! bound is reported as an error rather than clamped.

use serde::Serialize;

use crate::tree_model::PeriodicDegreeSequence;

use super::{lambda_ell_lower_period3, lambda_ell_period2, BoundsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Smaller root of the defining quadratic.
    Smaller,
    /// Discriminant zero: both roots coincide.
    Double,
    /// User-supplied weights, not solved for.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicWeights {
    /// Children counts per residue.
    pub degrees: Vec<u32>,
    /// Multiplier `g(i)` applied when stepping up onto a residue-`i` vertex.
    pub g_values: Vec<f64>,
    pub lambda: f64,
    pub branch: Branch,
    /// Both roots of the quadratic solved for `g(0)`, ascending.
    pub quadratic_roots: [f64; 2],
}

fn check_rate(lambda: f64) -> Result<(), BoundsError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::InvalidRate(lambda))
    }
}

/// Clamps a discriminant that is negative only through rounding.
fn settle_discriminant(disc: f64, scale: f64) -> Option<f64> {
    if disc >= 0.0 {
        Some(disc)
    } else if -disc <= 1e-12 * scale {
        Some(0.0)
    } else {
        None
    }
}

pub fn harmonic_weights_period2(a: u32, b: u32, lambda: f64) -> Result<HarmonicWeights, BoundsError> {
    check_rate(lambda)?;
    let (af, bf) = (a as f64, b as f64);
    let bound = lambda_ell_period2(a, b);
    let linear = (bf - af) * lambda + 1.0 / lambda;
    let disc = settle_discriminant(linear * linear - 4.0 * bf, linear * linear)
        .filter(|_| lambda <= bound * (1.0 + 1e-12))
        .ok_or(BoundsError::NoRealSolution { lambda, bound })?;
    let root = disc.sqrt();
    // b g^2 - linear g + 1 = 0; the smaller root via the product of roots 1/b.
    let small = 2.0 / (linear + root);
    let large = (linear + root) / (2.0 * bf);
    let ga = small;
    let gb = (bf * ga + lambda * (af - bf)) / af;
    if !(ga > 0.0 && gb > 0.0 && gb.is_finite()) {
        return Err(BoundsError::NoPositiveSolution { lambda, bound });
    }
    Ok(HarmonicWeights {
        degrees: vec![a, b],
        g_values: vec![ga, gb],
        lambda,
        branch: if disc == 0.0 {
            Branch::Double
        } else {
            Branch::Smaller
        },
        quadratic_roots: [small, large],
    })
}

/// The fixed choice `g(a) = 1/sqrt(b)`, `g(b) = 1/sqrt(a)`, superharmonic for
/// every `lambda` below `1/(sqrt a + sqrt b)`.
pub fn pemantle_weights_period2(a: u32, b: u32, lambda: f64) -> HarmonicWeights {
    let ga = 1.0 / (b as f64).sqrt();
    let gb = 1.0 / (a as f64).sqrt();
    HarmonicWeights {
        degrees: vec![a, b],
        g_values: vec![ga, gb],
        lambda,
        branch: Branch::Fixed,
        quadratic_roots: [ga, ga],
    }
}

/// Coefficients `(alpha, beta, gamma)` of the quadratic for `g(a)` on the
/// `(a, b, c)` tree.
pub fn period3_quadratic(a: u32, b: u32, c: u32, lambda: f64) -> (f64, f64, f64) {
    let (af, bf, cf) = (a as f64, b as f64, c as f64);
    let inv = 1.0 / lambda;
    let x = inv * inv;
    let alpha = cf * (x - af);
    let beta = (af + bf - cf) * inv - x * inv;
    let gamma = x - bf;
    (alpha, beta, gamma)
}

pub fn harmonic_weights_period3(
    a: u32,
    b: u32,
    c: u32,
    lambda: f64,
) -> Result<HarmonicWeights, BoundsError> {
    check_rate(lambda)?;
    let bound = lambda_ell_lower_period3(a, b, c)?.bound;
    let fail = BoundsError::NoPositiveSolution { lambda, bound };
    if lambda > bound * (1.0 + 1e-12) {
        return Err(fail);
    }
    let (alpha, beta, gamma) = period3_quadratic(a, b, c, lambda);
    let disc = settle_discriminant(beta * beta - 4.0 * alpha * gamma, beta * beta).ok_or(fail.clone())?;
    if !(alpha > 0.0 && beta < 0.0 && gamma > 0.0) {
        return Err(fail);
    }
    let root = disc.sqrt();
    let small = 2.0 * gamma / (-beta + root);
    let large = (-beta + root) / (2.0 * alpha);
    let inv = 1.0 / lambda;
    let ga = small;
    let gc = 1.0 / (inv - c as f64 * ga);
    let gb = 1.0 / (inv - b as f64 * gc);
    if ![ga, gb, gc].iter().all(|g| *g > 0.0 && g.is_finite()) {
        return Err(fail);
    }
    Ok(HarmonicWeights {
        degrees: vec![a, b, c],
        g_values: vec![ga, gb, gc],
        lambda,
        branch: if disc == 0.0 {
            Branch::Double
        } else {
            Branch::Smaller
        },
        quadratic_roots: [small, large],
    })
}

/// Per residue `i`: `g(i) * (d_i g(i+1) + 1/g(i) - 1/lambda)`.
///
/// All zero certifies harmonicity; all non-positive certifies superharmonicity.
pub fn harmonicity_residual(
    seq: &PeriodicDegreeSequence,
    lambda: f64,
    weights: &HarmonicWeights,
) -> Result<Vec<f64>, BoundsError> {
    let k = seq.period();
    if weights.g_values.len() != k {
        return Err(BoundsError::WeightCount {
            expected: k,
            got: weights.g_values.len(),
        });
    }
    let g = &weights.g_values;
    Ok(seq
        .degrees()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let next = g[(i + 1) % k];
            g[i] * (d as f64 * next + 1.0 / g[i] - 1.0 / lambda)
        })
        .collect())
}
