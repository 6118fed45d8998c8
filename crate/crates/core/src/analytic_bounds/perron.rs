//! Perron eigenvalue of the residue path-counting matrix.

use crate::tree_model::PeriodicDegreeSequence;

use super::BoundsError;

pub const MAX_ITERATIONS: usize = 100_000;
pub const RELATIVE_TOLERANCE: f64 = 1e-12;

/// `A[i][i+1] += g(i)` for up moves, `A[i][i-1] += 1` for down moves, with
/// indices taken mod k. Entries are summed when both moves land in the same
/// column, so for k = 2 the matrix is `[[0, a+1], [b+1, 0]]` and for k = 1 it
/// is `[d+1]`.
pub fn residue_matrix(seq: &PeriodicDegreeSequence) -> Vec<Vec<f64>> {
    let k = seq.period();
    let mut a = vec![vec![0.0; k]; k];
    for (i, &g) in seq.degrees().iter().enumerate() {
        a[i][(i + 1) % k] += g as f64;
        a[i][(i + k - 1) % k] += 1.0;
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronEstimate {
    pub eigenvalue: f64,
    /// Collatz-Wielandt bracket `[min (Av)_i / v_i, max (Av)_i / v_i]`.
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

/// Power iteration on the shifted matrix `A + sI`.
///
/// The residue matrix is irreducible (up moves cycle through every residue),
/// so the shift makes it primitive and the Collatz-Wielandt ratios of a
/// positive iterate bracket the Perron root from both sides.
pub fn perron_eigenvalue(matrix: &[Vec<f64>]) -> Result<PerronEstimate, BoundsError> {
    let k = matrix.len();
    let shift = matrix
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let mut v = vec![1.0; k];
    let mut w = vec![0.0; k];
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    let mut stalled = 0usize;
    for iteration in 1..=MAX_ITERATIONS {
        for (i, row) in matrix.iter().enumerate() {
            w[i] = shift * v[i] + row.iter().zip(&v).map(|(a, x)| a * x).sum::<f64>();
        }
        let (lo, hi) = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| wi / vi)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            });
        let lower = (lo - shift).max(best.0);
        let upper = (hi - shift).min(best.1);
        if upper - lower < best.1 - best.0 {
            best = (lower, upper);
            stalled = 0;
        } else {
            stalled += 1;
        }
        let (lower, upper) = best;
        let width = upper - lower;
        let eigenvalue = 0.5 * (lower + upper);
        if width <= 1e-2 * RELATIVE_TOLERANCE * eigenvalue
            || (stalled >= 32 && width <= RELATIVE_TOLERANCE * eigenvalue)
        {
            return Ok(PerronEstimate {
                eigenvalue,
                lower,
                upper,
                iterations: iteration,
            });
        }
        let norm = w.iter().fold(0.0, |m: f64, x| m.max(*x));
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    Err(BoundsError::NonConvergence {
        iterations: MAX_ITERATIONS,
    })
}
