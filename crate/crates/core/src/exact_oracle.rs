//! Exact answers for small instances: the lumped star chain, the full subset
//! chain of the contact process on tiny graphs, and brute-force walk counts.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::simulator::{ExplicitGraph, StarChain, StarState, Topology};
use crate::tree_model::{PeriodicDegreeSequence, TreeArena, VertexId};
use crate::walk_counts::WalkError;

pub const MAX_STAR_LEAVES: u32 = 2000;
pub const MAX_SMALL_GRAPH: usize = 14;
/// Largest subset chain factored densely; bigger ones use Gauss-Seidel.
pub const DENSE_STATE_LIMIT: usize = 1 << 10;
pub const MAX_ENUMERATION_LENGTH: u32 = 8;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{what} of size {size} exceeds the oracle cap {cap}")]
    TooLarge { what: &'static str, size: usize, cap: usize },
    #[error("linear solve failed: relative residual {residual:e}")]
    SolveFailure { residual: f64 },
    #[error("invalid rate {0}")]
    InvalidRate(f64),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

fn check_rate(lambda: f64) -> Result<(), OracleError> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(OracleError::InvalidRate(lambda))
    }
}

/// Square matrix with `lower` subdiagonals and `upper` superdiagonals, stored
/// row by row as `lower + upper + 1` entries.
#[derive(Clone)]
struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn new(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(j + self.lower >= i && j <= i + self.upper);
        let w = self.width();
        &mut self.data[i * w + j + self.lower - i]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper {
            return 0.0;
        }
        self.data[i * self.width() + j + self.lower - i]
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.width()..(i + 1) * self.width()].iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gaussian elimination without pivoting; the star generator is
    /// diagonally dominant, so no pivot is ever small.
    fn solve(mut self, mut b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            for i in k + 1..(k + self.lower + 1).min(n) {
                let factor = self.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..(k + self.upper + 1).min(n) {
                    let v = self.get(k, j);
                    *self.at(i, j) -= factor * v;
                }
                b[i] -= factor * b[k];
            }
        }
        for k in (0..n).rev() {
            let hi = (k + self.upper).min(n - 1);
            let s: f64 = (k + 1..=hi).map(|j| self.get(k, j) * b[j]).sum();
            b[k] = (b[k] - s) / self.get(k, k);
        }
        b
    }
}

/// `||r||_inf / (||A||_inf ||x||_inf + ||b||_inf)`.
fn relative_residual(ax: &[f64], b: &[f64], norm_a: f64, x: &[f64]) -> f64 {
    let r = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let nx = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let nb = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let scale = norm_a * nx + nb;
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionSolve {
    pub n: u32,
    pub lambda: f64,
    /// `E[T_{0,0}]` from state `(j, center)` at index `2j + center`.
    pub expected_time: Vec<f64>,
    pub solve_residual: f64,
}

impl AbsorptionSolve {
    pub fn expected(&self, j: u32, center: bool) -> f64 {
        self.expected_time[2 * j as usize + center as usize]
    }

    pub fn states(&self) -> impl Iterator<Item = (StarState, f64)> + '_ {
        self.expected_time.iter().enumerate().map(|(i, &t)| {
            (
                StarState {
                    n: self.n,
                    j: (i / 2) as u32,
                    center: i % 2 == 1,
                },
                t,
            )
        })
    }
}

/// Expected time to reach `(0, 0)` from every state of the `n`-leaf star chain.
pub fn star_mean_absorption(n: u32, lambda: f64) -> Result<AbsorptionSolve, OracleError> {
    check_rate(lambda)?;
    if n > MAX_STAR_LEAVES {
        return Err(OracleError::TooLarge {
            what: "star",
            size: n as usize,
            cap: MAX_STAR_LEAVES as usize,
        });
    }
    // Unknowns are states 1..2(n+1); state index 2j + c moves by +-2 (leaf)
    // or +-1 (center), so the system has bandwidth 2.
    let size = 2 * (n as usize + 1) - 1;
    let mut a = BandMatrix::new(size, 2, 2);
    for row in 0..size {
        let index = row + 1;
        let s = StarState {
            n,
            j: (index / 2) as u32,
            center: index % 2 == 1,
        };
        let rates = StarChain::rates_at(lambda, s);
        *a.at(row, row) = rates.iter().sum();
        let targets = [index + 2, index.wrapping_sub(2), index.wrapping_sub(1), index + 1];
        for (&rate, &target) in rates.iter().zip(&targets) {
            if rate > 0.0 && target != 0 {
                *a.at(row, target - 1) -= rate;
            }
        }
    }
    let b = vec![1.0; size];
    let x = a.clone().solve(b.clone());
    let residual = relative_residual(&a.mul(&x), &b, a.norm_inf(), &x);
    if !(residual < RESIDUAL_TOLERANCE) || x.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::SolveFailure { residual });
    }
    let mut expected_time = vec![0.0];
    expected_time.extend(x);
    Ok(AbsorptionSolve {
        n,
        lambda,
        expected_time,
        solve_residual: residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactSolve {
    pub vertices: usize,
    pub lambda: f64,
    pub root: VertexId,
    pub mean_extinction_time: f64,
    /// Expected number of vacant-to-occupied transitions of the root.
    pub mean_root_visits: f64,
    pub solve_residual: f64,
    pub dense: bool,
}

/// Generator of the subset chain restricted to the nonempty sets, as sparse
/// rows `(diagonal, [(column, rate)])`, with state `S` at row `S - 1`.
fn subset_generator(adjacency: &[Vec<VertexId>], lambda: f64) -> Vec<(f64, Vec<(usize, f64)>)> {
    let v = adjacency.len();
    let mut masks = vec![0u32; v];
    for (i, nbrs) in adjacency.iter().enumerate() {
        for &w in nbrs {
            masks[i] |= 1 << w;
        }
    }
    (1..1usize << v)
        .map(|s| {
            let mut off = Vec::new();
            let mut total = 0.0;
            for i in 0..v {
                let bit = 1usize << i;
                if s & bit != 0 {
                    total += 1.0;
                    off.push((s ^ bit, 1.0));
                } else {
                    let k = (masks[i] as usize & s).count_ones();
                    if k > 0 && lambda > 0.0 {
                        let r = lambda * k as f64;
                        total += r;
                        off.push((s | bit, r));
                    }
                }
            }
            (total, off)
        })
        .collect()
}

fn dense_lu_solve(mut a: Vec<f64>, n: usize, rhs: &mut [Vec<f64>]) -> bool {
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .expect("nonempty");
        if a[p * n + k] == 0.0 {
            return false;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            for b in rhs.iter_mut() {
                b.swap(k, p);
            }
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            for b in rhs.iter_mut() {
                b[i] -= f * b[k];
            }
        }
    }
    for b in rhs.iter_mut() {
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
            b[k] = (b[k] - s) / a[k * n + k];
        }
    }
    true
}

fn gauss_seidel(rows: &[(f64, Vec<(usize, f64)>)], b: &[f64], max_sweeps: usize) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (i, (diag, off)) in rows.iter().enumerate() {
            let s: f64 = off
                .iter()
                .filter(|(c, _)| *c != 0)
                .map(|&(c, r)| r * x[c - 1])
                .sum();
            let new = (b[i] + s) / diag;
            change = change.max((new - x[i]).abs());
            size = size.max(new.abs());
            x[i] = new;
        }
        if change <= 1e-15 * size {
            break;
        }
    }
    x
}

/// Expected extinction time and expected root reinfections of the contact
/// process on `graph` started from its root alone.
pub fn exact_contact_small(graph: &ExplicitGraph, lambda: f64) -> Result<ContactSolve, OracleError> {
    check_rate(lambda)?;
    let v = graph.len();
    if v > MAX_SMALL_GRAPH {
        return Err(OracleError::TooLarge {
            what: "graph",
            size: v,
            cap: MAX_SMALL_GRAPH,
        });
    }
    let root = graph.root();
    let root_bit = 1usize << root;
    let rows = subset_generator(graph.adjacency(), lambda);
    let n = rows.len();
    let times = vec![1.0; n];
    let visits: Vec<f64> = (1..=n)
        .map(|s| {
            if s & root_bit != 0 {
                return 0.0;
            }
            rows[s - 1].1.iter().filter(|(t, _)| t & root_bit != 0).map(|(_, r)| r).sum()
        })
        .collect();
    let dense = n <= DENSE_STATE_LIMIT;
    let solutions = if dense {
        let mut a = vec![0.0; n * n];
        for (i, (diag, off)) in rows.iter().enumerate() {
            a[i * n + i] = *diag;
            for &(c, r) in off {
                if c != 0 {
                    a[i * n + c - 1] -= r;
                }
            }
        }
        let mut rhs = vec![times.clone(), visits.clone()];
        if !dense_lu_solve(a, n, &mut rhs) {
            return Err(OracleError::SolveFailure { residual: f64::INFINITY });
        }
        rhs
    } else {
        vec![gauss_seidel(&rows, &times, 100_000), gauss_seidel(&rows, &visits, 100_000)]
    };
    let norm_a = rows
        .iter()
        .map(|(d, off)| d + off.iter().filter(|(c, _)| *c != 0).map(|(_, r)| r).sum::<f64>())
        .fold(0.0, f64::max);
    let mut residual: f64 = 0.0;
    for (x, b) in solutions.iter().zip([&times, &visits]) {
        let ax: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, (d, off))| {
                d * x[i]
                    - off
                        .iter()
                        .filter(|(c, _)| *c != 0)
                        .map(|&(c, r)| r * x[c - 1])
                        .sum::<f64>()
            })
            .collect();
        residual = residual.max(relative_residual(&ax, b, norm_a, x));
    }
    if !(residual < RESIDUAL_TOLERANCE) {
        return Err(OracleError::SolveFailure { residual });
    }
    Ok(ContactSolve {
        vertices: v,
        lambda,
        root,
        mean_extinction_time: solutions[0][root_bit - 1],
        mean_root_visits: solutions[1][root_bit - 1],
        solve_residual: residual,
        dense,
    })
}

/// Number of closed walks of length `two_n` at a residue-`root_residue`
/// vertex, by explicit recursion over the materialized tree.
pub fn enumerate_closed_walks(
    seq: &PeriodicDegreeSequence,
    root_residue: usize,
    two_n: u32,
) -> Result<BigUint, OracleError> {
    if two_n % 2 == 1 {
        return Err(WalkError::OddLength(two_n).into());
    }
    if two_n > MAX_ENUMERATION_LENGTH {
        return Err(WalkError::LimitExceeded {
            two_n,
            max: MAX_ENUMERATION_LENGTH,
        }
        .into());
    }
    let mut arena = TreeArena::new(seq.clone(), root_residue, usize::MAX >> 1);
    // The geodesic from the root to the current vertex.
    let mut path = vec![arena.root()];
    Ok(walk(&mut arena, &mut path, two_n))
}

fn walk(arena: &mut TreeArena, path: &mut Vec<VertexId>, remaining: u32) -> BigUint {
    let depth = path.len() - 1;
    if depth as u32 > remaining {
        return BigUint::zero();
    }
    if remaining == 0 {
        return BigUint::one();
    }
    let v = *path.last().expect("path holds the root");
    let mut total = BigUint::zero();
    for slot in 0..arena.graph_degree(v) {
        let w = Topology::neighbor(arena, v, slot)
            .expect("uncapped arena")
            .expect("trees have every edge");
        if depth >= 1 && path[depth - 1] == w {
            path.pop();
            total += walk(arena, path, remaining - 1);
            path.push(v);
        } else {
            path.push(w);
            total += walk(arena, path, remaining - 1);
            path.pop();
        }
    }
    total
}
