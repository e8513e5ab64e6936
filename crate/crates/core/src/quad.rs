//! Gauss–Legendre quadrature, fixed and adaptive.

use crate::error::{Error, Result};

/// Positive nodes and weights of the 8-point Gauss–Legendre rule on [-1, 1].
const GL8: [(f64, f64); 4] = [
    (0.18343464249564978, 0.36268378337836177),
    (0.525532409916329, 0.31370664587788705),
    (0.7966664774136267, 0.22238103445337434),
    (0.9602898564975362, 0.10122853629037669),
];

/// 8-point Gauss–Legendre rule on `[a, b]`. Exact for polynomials of degree 15.
#[inline]
pub fn gauss_legendre_8(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in &GL8 {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Adaptive bisection on top of [`gauss_legendre_8`].
///
/// A panel is accepted when the whole-panel estimate and the sum over its two
/// halves agree within `max(abs_tol, rel_tol * |estimate|)`. Fails after
/// `MAX_PANELS` subdivisions instead of recursing without bound.
pub fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    const MAX_DEPTH: u32 = 40;
    let whole = gauss_legendre_8(f, a, b);
    let mut budget = MAX_PANELS;
    recurse(f, a, b, whole, abs_tol, rel_tol, MAX_DEPTH, &mut budget)
}

const MAX_PANELS: usize = 20_000;

fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
    budget: &mut usize,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = gauss_legendre_8(f, a, mid);
    let right = gauss_legendre_8(f, mid, b);
    let split = left + right;
    let err = (split - whole).abs();
    if !err.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if err <= abs_tol.max(rel_tol * split.abs()) {
        return Ok(split);
    }
    if depth == 0 || *budget == 0 || !(mid > a && mid < b) {
        return Err(Error::Numerical(format!(
            "adaptive quadrature did not converge on [{a}, {b}] (error estimate {err:e})"
        )));
    }
    *budget -= 1;
    let l = recurse(f, a, mid, left, 0.5 * abs_tol, rel_tol, depth - 1, budget)?;
    let r = recurse(f, mid, b, right, 0.5 * abs_tol, rel_tol, depth - 1, budget)?;
    Ok(l + r)
}
