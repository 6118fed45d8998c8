//! Real roots of cubic polynomials.
//!
//! Three distinct real roots are found with the trigonometric (Viète) form of
//! the depressed cubic; a single real root with the real branch of Cardano's
//! radical. Every root is Newton-polished on the original polynomial.

use std::f64::consts::PI;

use serde::Serialize;

use super::BoundsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicRoots {
    /// `(c3, c2, c1, c0)` for `c3 x^3 + c2 x^2 + c1 x + c0`.
    pub coefficients: [f64; 4],
    /// `18abcd - 4b^3 d + b^2 c^2 - 4ac^3 - 27a^2 d^2`; reported as exactly 0
    /// when the polynomial was classified as having a repeated root.
    pub discriminant: f64,
    /// Real roots in ascending order, with multiplicity when `repeated`.
    pub roots: Vec<f64>,
    pub complex_pair: bool,
    pub repeated: bool,
}

impl CubicRoots {
    pub fn largest(&self) -> f64 {
        *self.roots.last().expect("a real cubic has at least one real root")
    }

    pub fn smallest(&self) -> f64 {
        self.roots[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }

    /// Largest `|p(r)| / max(1, |c0|)` over the returned roots.
    pub fn max_relative_residual(&self) -> f64 {
        let scale = self.coefficients[3].abs().max(1.0);
        self.roots
            .iter()
            .map(|&r| self.eval(r).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Discriminant of `a x^3 + b x^2 + c x + d`.
pub fn discriminant(a: f64, b: f64, c: f64, d: f64) -> f64 {
    18.0 * a * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c
        - 4.0 * a * c.powi(3)
        - 27.0 * a * a * d * d
}

/// Exact discriminant for integer coefficients.
pub fn discriminant_exact(a: i128, b: i128, c: i128, d: i128) -> i128 {
    18 * a * b * c * d - 4 * b.pow(3) * d + b * b * c * c - 4 * a * c.pow(3) - 27 * a * a * d * d
}

fn horner(coefficients: &[f64; 4], x: f64) -> f64 {
    let [c3, c2, c1, c0] = *coefficients;
    ((c3 * x + c2) * x + c1) * x + c0
}

fn derivative(coefficients: &[f64; 4], x: f64) -> f64 {
    let [c3, c2, c1, _] = *coefficients;
    (3.0 * c3 * x + 2.0 * c2) * x + c1
}

fn polish(coefficients: &[f64; 4], mut x: f64) -> f64 {
    let mut fx = horner(coefficients, x).abs();
    for _ in 0..16 {
        if fx == 0.0 {
            break;
        }
        let slope = derivative(coefficients, x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - horner(coefficients, x) / slope;
        let f_next = horner(coefficients, next).abs();
        if !(f_next < fx) {
            break;
        }
        let step = (next - x).abs();
        x = next;
        fx = f_next;
        if step <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<CubicRoots, BoundsError> {
    if c3 == 0.0 || !c3.is_finite() {
        return Err(BoundsError::DegenerateLeadingCoefficient);
    }
    let coefficients = [c3, c2, c1, c0];
    let (b, c, d) = (c2 / c3, c1 / c3, c0 / c3);
    let shift = b / 3.0;
    // Depressed cubic t^3 + p t + q with x = t - b/3.
    let p = c - b * b / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - b * c / 3.0 + d;

    let cube_term = 4.0 * p.powi(3);
    let square_term = 27.0 * q * q;
    let depressed_disc = -(cube_term + square_term);
    let scale = cube_term.abs().max(square_term.abs());
    let near_zero = depressed_disc.abs() <= 1e-12 * scale;

    let (mut depressed_roots, discriminant, complex_pair, repeated) = if scale == 0.0 {
        (vec![0.0; 3], 0.0, false, true)
    } else if near_zero {
        let double = -1.5 * q / p;
        let simple = 3.0 * q / p;
        (vec![double, double, simple], 0.0, false, true)
    } else if depressed_disc > 0.0 {
        let radius = 2.0 * (-p / 3.0).sqrt();
        let arg = (1.5 * q / p * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let roots = (0..3)
            .map(|k| radius * (phi - 2.0 * PI * k as f64 / 3.0).cos())
            .collect();
        (roots, discriminant(c3, c2, c1, c0), false, false)
    } else {
        let sqrt_d = (q * q / 4.0 + p.powi(3) / 27.0).sqrt();
        let u = (-q / 2.0 - q.signum() * sqrt_d).cbrt();
        let v = if u == 0.0 { 0.0 } else { -p / (3.0 * u) };
        (vec![u + v], discriminant(c3, c2, c1, c0), true, false)
    };

    let mut roots: Vec<f64> = depressed_roots
        .drain(..)
        .map(|t| polish(&coefficients, t - shift))
        .collect();
    roots.sort_by(f64::total_cmp);
    // Classification and the raw discriminant must agree in sign.
    let discriminant = match (complex_pair, repeated) {
        (true, _) if discriminant >= 0.0 => -f64::MIN_POSITIVE,
        (false, false) if discriminant <= 0.0 => f64::MIN_POSITIVE,
        _ => discriminant,
    };
    Ok(CubicRoots {
        coefficients,
        discriminant,
        roots,
        complex_pair,
        repeated,
    })
}
