//! Small numerical kernels shared across modules: turn-based trigonometry,
//! safeguarded root finding and periodic quadrature.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// `(sin 2πx, cos 2πx)`, exact at multiples of a quarter turn.
pub fn sincos_turns(x: f64) -> (f64, f64) {
    let t = x - x.round();
    let u = 4.0 * t;
    let q = u.round();
    let r = u - q;
    let (s, c) = (r * FRAC_PI_2).sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance on R/Z.
pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = frac(x - y);
    d.min(1.0 - d)
}

pub const ROOT_MAX_ITER: usize = 200;

/// Solves `f(x) = target` for a strictly increasing `f` on a bracket
/// `[lo, hi]` with `f(lo) <= target <= f(hi)`. Newton steps are taken when they
/// stay inside the bracket, bisection otherwise.
pub fn solve_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let (flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    if flo > target || fhi < target {
        return Err(Error::NumericFailure {
            iterations: 0,
            lo,
            hi,
            target,
        });
    }
    let mut x = if fhi > flo {
        lo + (hi - lo) * (target - flo) / (fhi - flo)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..ROOT_MAX_ITER {
        let (fx, dfx) = f(x)?;
        let r = fx - target;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let width_tol = 1e-15 * x.abs().max(1.0);
        if hi - lo <= width_tol {
            return Ok(x);
        }
        let newton = if dfx > 0.0 && dfx.is_finite() {
            x - r / dfx
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 0.25 * width_tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NumericFailure {
        iterations: ROOT_MAX_ITER,
        lo,
        hi,
        target,
    })
}

/// Cumulative integral of periodic samples `f[0..n]` (node `n` omitted, it
/// equals node 0) with the fourth-order rule
/// `∫_{x_i}^{x_{i+1}} ≈ h/24 (-f_{i-1} + 13 f_i + 13 f_{i+1} - f_{i+2})`.
/// Returns `n + 1` values starting at 0.
pub fn cumulative_periodic(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let at = |i: isize| f[i.rem_euclid(n as isize) as usize];
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..n as isize {
        acc += h / 24.0 * (-at(i - 1) + 13.0 * at(i) + 13.0 * at(i + 1) - at(i + 2));
        out.push(acc);
    }
    out
}

pub(crate) const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
pub(crate) const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Four-point Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre4<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    GL4_NODES
        .iter()
        .zip(GL4_WEIGHTS.iter())
        .map(|(x, w)| w * f(m + r * x))
        .sum::<f64>()
        * r
}

pub const TAU: f64 = 2.0 * PI;
