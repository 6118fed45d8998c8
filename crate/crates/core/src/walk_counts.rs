//! Exact closed-walk counts on periodic trees.
//!
//! A walk started at `v` is tracked by `(j, u)`: the walk currently sits `u`
//! steps above the ancestor `v_j` that is `j` steps below `v`, inside a branch
//! of `v_j` that avoids `v_{j-1}`. Subtrees rooted at equal residues are
//! isomorphic, so this state determines both the local degree and every
//! possible continuation, and the walk is back at `v` exactly when `(j, u) =
//! (0, 0)`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::tree_model::PeriodicDegreeSequence;

/// Default cap on the walk length `2n`.
pub const DEFAULT_MAX_LENGTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("walk length {two_n} exceeds the configured maximum {max}")]
    LimitExceeded { two_n: u32, max: u32 },
    #[error("walk length {0} is odd; closed walks on a tree have even length")]
    OddLength(u32),
}

fn check_length(two_n: u32, max: u32) -> Result<(), WalkError> {
    if two_n % 2 == 1 {
        return Err(WalkError::OddLength(two_n));
    }
    if two_n > max {
        return Err(WalkError::LimitExceeded { two_n, max });
    }
    Ok(())
}

/// Closed-walk counts `M_0(v, s)` for `s = 0..=max_len` at a vertex of residue
/// `root_residue`.
fn closed_walk_profile(seq: &PeriodicDegreeSequence, root_residue: usize, max_len: u32) -> Vec<BigUint> {
    let half = (max_len / 2) as usize;
    let side = half + 1;
    let idx = |j: usize, u: usize| j * side + u;
    let mut cur = vec![BigUint::zero(); side * side];
    let mut next = cur.clone();
    cur[idx(0, 0)] = BigUint::one();
    let mut profile = Vec::with_capacity(max_len as usize + 1);
    profile.push(BigUint::one());
    for step in 1..=max_len as usize {
        // A state at distance j + u is useful only if it can still get home.
        let budget = (max_len as usize - step).min(half);
        for x in next.iter_mut() {
            x.set_zero();
        }
        for j in 0..side {
            for u in 0..side - j {
                let count = &cur[idx(j, u)];
                if count.is_zero() {
                    continue;
                }
                let kids = seq.degree_at(root_residue as i64 + u as i64 - j as i64);
                let mut push = |j2: usize, u2: usize, mult: u32| {
                    if j2 + u2 <= budget && mult > 0 {
                        let slot = &mut next[idx(j2, u2)];
                        if mult == 1 {
                            *slot += count;
                        } else {
                            *slot += count * mult;
                        }
                    }
                };
                if u >= 1 {
                    push(j, u - 1, 1);
                    push(j, u + 1, kids);
                } else if j >= 1 {
                    push(j - 1, 0, 1);
                    push(j, 1, kids - 1);
                    push(j + 1, 0, 1);
                } else {
                    push(0, 1, kids);
                    push(1, 0, 1);
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        profile.push(cur[idx(0, 0)].clone());
    }
    profile
}

/// Number of walks of length `two_n` that start and end at a fixed vertex of
/// residue `root_residue`.
pub fn closed_walk_count(
    seq: &PeriodicDegreeSequence,
    root_residue: usize,
    two_n: u32,
) -> Result<BigUint, WalkError> {
    closed_walk_count_bounded(seq, root_residue, two_n, DEFAULT_MAX_LENGTH)
}

pub fn closed_walk_count_bounded(
    seq: &PeriodicDegreeSequence,
    root_residue: usize,
    two_n: u32,
    max: u32,
) -> Result<BigUint, WalkError> {
    check_length(two_n, max)?;
    let profile = closed_walk_profile(seq, root_residue % seq.period(), two_n);
    Ok(profile[two_n as usize].clone())
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelReturnCount {
    /// `pi_n(m)` for `0 <= m <= n/2`.
    pub per_m: Vec<BigUint>,
    pub total: BigUint,
}

/// Length-`2n` paths on the `(a, b)` tree from a residue-0 vertex to any
/// vertex at the same height, split by the number `m` of double-up pairs:
/// `pi_n(m) = n! / (m! (n-2m)! m!) (a+b)^(n-2m) (ab)^m`.
pub fn level_return_count(a: u32, b: u32, n: u32) -> LevelReturnCount {
    let sum = BigUint::from(a as u64 + b as u64);
    let product = BigUint::from(a as u64 * b as u64);
    let n64 = n as u64;
    let per_m: Vec<BigUint> = (0..=n64 / 2)
        .map(|m| {
            binomial(n64, 2 * m) * binomial(2 * m, m) * sum.pow((n64 - 2 * m) as u32) * product.pow(m as u32)
        })
        .collect();
    let total = per_m.iter().sum();
    LevelReturnCount { per_m, total }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkCountTable {
    pub degrees: PeriodicDegreeSequence,
    pub root_residue: usize,
    /// `M_0(v, 2n)` for `n = 1..=n_max`, as decimal strings when serialized.
    #[serde(serialize_with = "serialize_decimal")]
    pub counts: Vec<BigUint>,
    /// `M_0(v, 2n)^(1/2n)`.
    pub roots: Vec<f64>,
}

fn serialize_decimal<S: serde::Serializer>(counts: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(counts.iter().map(|c| c.to_str_radix(10)))
}

/// `x^(1/k)` for a big integer, through its logarithm when it overflows `f64`.
fn big_root(x: &BigUint, k: u32) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v.powf(1.0 / k as f64),
        _ => {
            let bits = x.bits();
            let shift = bits.saturating_sub(64);
            let mantissa = (x >> shift).to_f64().expect("fits in 64 bits");
            ((mantissa.ln() + shift as f64 * std::f64::consts::LN_2) / k as f64).exp()
        }
    }
}

pub fn m0_estimates(
    seq: &PeriodicDegreeSequence,
    root_residue: usize,
    n_max: u32,
) -> Result<WalkCountTable, WalkError> {
    m0_estimates_bounded(seq, root_residue, n_max, DEFAULT_MAX_LENGTH)
}

pub fn m0_estimates_bounded(
    seq: &PeriodicDegreeSequence,
    root_residue: usize,
    n_max: u32,
    max: u32,
) -> Result<WalkCountTable, WalkError> {
    check_length(2 * n_max, max)?;
    let root_residue = root_residue % seq.period();
    let profile = closed_walk_profile(seq, root_residue, 2 * n_max);
    let counts: Vec<BigUint> = (1..=n_max as usize).map(|n| profile[2 * n].clone()).collect();
    let roots = counts
        .iter()
        .zip(1..)
        .map(|(c, n)| big_root(c, 2 * n))
        .collect();
    Ok(WalkCountTable {
        degrees: seq.clone(),
        root_residue,
        counts,
        roots,
    })
}

impl WalkCountTable {
    pub fn n_max(&self) -> usize {
        self.counts.len()
    }

    /// Running maximum of the roots; nondecreasing by construction and
    /// converging to `M_0`.
    pub fn running_max(&self) -> Vec<f64> {
        self.roots
            .iter()
            .scan(f64::NEG_INFINITY, |m, &r| {
                *m = m.max(r);
                Some(*m)
            })
            .collect()
    }

    /// First `(m, n)` with `counts[m] * counts[n] > counts[m + n]`, if any.
    pub fn supermultiplicativity_violation(&self) -> Option<(usize, usize)> {
        let c = |n: usize| &self.counts[n - 1];
        for m in 1..=self.n_max() {
            for n in m..=self.n_max() - m {
                if c(m) * c(n) > *c(m + n) {
                    return Some((m, n));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> PeriodicDegreeSequence {
        s.parse().unwrap()
    }

    /// Independent count of length-2n height trajectories returning to level 0
    /// with weight g(h) per up step and 1 per down step.
    fn height_dp(a: u32, b: u32, n: u32) -> BigUint {
        let s = seq(&format!("{a},{b}"));
        let len = 2 * n as i64;
        let offset = len;
        let mut cur = vec![BigUint::zero(); (2 * len + 1) as usize];
        cur[offset as usize] = BigUint::one();
        for _ in 0..len {
            let mut next = vec![BigUint::zero(); cur.len()];
            for (i, c) in cur.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let h = i as i64 - offset;
                if i + 1 < cur.len() {
                    next[i + 1] += c * s.degree_at(h);
                }
                if i > 0 {
                    next[i - 1] += c;
                }
            }
            cur = next;
        }
        cur[offset as usize].clone()
    }

    #[test]
    fn binary_tree_length_two() {
        assert_eq!(closed_walk_count(&seq("2"), 0, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(closed_walk_count(&seq("3,4"), 1, 0).unwrap(), BigUint::one());
    }

    #[test]
    fn length_errors() {
        assert_eq!(
            closed_walk_count(&seq("2"), 0, 42),
            Err(WalkError::LimitExceeded { two_n: 42, max: 40 })
        );
        assert_eq!(closed_walk_count(&seq("2"), 0, 3), Err(WalkError::OddLength(3)));
        assert!(m0_estimates(&seq("2"), 0, 21).is_err());
    }

    #[test]
    fn line_counts_are_central_binomials() {
        let table = m0_estimates(&seq("1,1"), 0, 10).unwrap();
        for (n, c) in (1..).zip(&table.counts) {
            assert_eq!(*c, binomial(2 * n, n));
        }
        let roots = &table.roots;
        assert!(roots.windows(2).all(|w| w[0] < w[1]));
        assert!(roots.iter().all(|&r| r < 2.0));
    }

    #[test]
    fn level_returns_small_cases() {
        let r = level_return_count(3, 4, 1);
        assert_eq!(r.total, BigUint::from(7u32));
        let r = level_return_count(3, 4, 2);
        assert_eq!(r.per_m, vec![BigUint::from(49u32), BigUint::from(24u32)]);
        assert_eq!(r.total, BigUint::from(73u32));
        for n in 1..=8 {
            assert_eq!(level_return_count(3, 4, n).total, height_dp(3, 4, n));
            assert_eq!(level_return_count(1, 6, n).total, height_dp(1, 6, n));
        }
    }

    #[test]
    fn level_returns_homogeneous_identity() {
        for d in 1..=5u32 {
            for n in 1..=12u32 {
                let want = binomial(2 * n as u64, n as u64) * BigUint::from(d).pow(n);
                assert_eq!(level_return_count(d, d, n).total, want);
            }
        }
    }

    #[test]
    fn closed_walks_bounded_by_level_returns() {
        for n in 1..=10u32 {
            let closed = closed_walk_count(&seq("3,4"), 0, 2 * n).unwrap();
            assert!(closed <= level_return_count(3, 4, n).total);
        }
    }

    #[test]
    fn three_four_running_max_below_limit() {
        let table = m0_estimates(&seq("3,4"), 0, 10).unwrap();
        let limit = 3f64.sqrt() + 2.0;
        let rm = table.running_max();
        assert!(rm.iter().all(|&r| r <= limit));
        assert!(table.roots.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(table.supermultiplicativity_violation(), None);
    }

    #[test]
    fn big_root_handles_huge_values() {
        let x = BigUint::from(10u32).pow(400);
        assert!((big_root(&x, 400) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn residue_choice_is_respected() {
        // On the (1, n) tree the two residues see different local structure.
        let a = closed_walk_count(&seq("1,5"), 0, 2).unwrap();
        let b = closed_walk_count(&seq("1,5"), 1, 2).unwrap();
        assert_eq!(a, BigUint::from(2u32));
        assert_eq!(b, BigUint::from(6u32));
    }
}
