//! The Cantor function and a circle diffeomorphism whose log-derivative has a
//! Cantor-function component:
//!
//! ```text
//! log Df(x) = c (G(x) - x) + a cos 2πx - log Z
//! ```
//!
//! `Df` is continuous and of bounded variation but not absolutely
//! continuous when `c ≠ 0`. The lift is tabulated on the triadic grid of
//! depth `D`; inside a cell the integral uses the self-similarity of `G`.

use crate::error::{Error, Result};
use crate::numeric::{frac, gauss_legendre4, sincos_turns};

/// Digits used by [`cantor_function`].
pub const CANTOR_DIGITS: usize = 40;

/// Cantor function on `[0, 1]` by the base-3 digit algorithm.
pub fn cantor_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut x = x;
    let mut scale = 0.5;
    let mut acc = 0.0;
    for _ in 0..CANTOR_DIGITS {
        x *= 3.0;
        let d = x.floor();
        x -= d;
        if d >= 2.0 {
            acc += scale;
        } else if d >= 1.0 {
            return acc + scale;
        }
        scale *= 0.5;
    }
    acc
}

/// Endpoints of the removed middle thirds of level `1..=depth`, sorted.
pub fn cantor_gap_endpoints(depth: usize) -> Vec<f64> {
    let mut out = Vec::new();
    // left endpoints of surviving intervals at the previous level, in units of 3^-level
    let mut lefts: Vec<u64> = vec![0];
    let mut pow = 1u64;
    for _ in 0..depth {
        pow *= 3;
        let mut next = Vec::with_capacity(lefts.len() * 2);
        for &l in &lefts {
            let a = 3 * l;
            out.push((a + 1) as f64 / pow as f64);
            out.push((a + 2) as f64 / pow as f64);
            next.push(a);
            next.push(a + 2);
        }
        lefts = next;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// `∫₀¹ e^{λ G(u)} du` through `I(λ) = (I(λ/2)(1 + e^{λ/2}) + e^{λ/2}) / 3`.
fn cantor_exp_integral(lambda: f64) -> f64 {
    if lambda.abs() < 1e-6 {
        return 1.0 + 0.5 * lambda + 3.0 / 16.0 * lambda * lambda;
    }
    let e = (0.5 * lambda).exp();
    (cantor_exp_integral(0.5 * lambda) * (1.0 + e) + e) / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorDiffeo {
    weight: f64,
    amplitude: f64,
    shift: f64,
    depth: u32,
    cells: usize,
    /// Unnormalized cumulative integral at `k / 3^D`.
    table: Vec<f64>,
    log_norm: f64,
    /// `I(c 2^{-D-j})` for `j = 0, 1, ...`.
    piece_integrals: Vec<f64>,
}

enum Cell {
    /// Inside a removed gap; `G` is constant.
    Gap(f64),
    /// Surviving interval of level `D`; `G = g0 + 2^{-D} G(3^D (x - a))`.
    Piece(f64),
}

impl CantorDiffeo {
    pub const MAX_WEIGHT: f64 = 20.0;

    /// `weight` is `c`, `amplitude` the coefficient of the smooth cosine term,
    /// `shift` the value `F(0)`, `depth` the triadic table depth.
    pub fn new(weight: f64, amplitude: f64, shift: f64, depth: u32) -> Result<Self> {
        if !(weight.is_finite() && amplitude.is_finite() && shift.is_finite()) {
            return Err(Error::InvalidMap("non-finite Cantor-map parameter".into()));
        }
        if weight.abs() > Self::MAX_WEIGHT || amplitude.abs() > Self::MAX_WEIGHT {
            return Err(Error::InvalidMap(format!(
                "Cantor-map parameters exceed {}: weight {weight}, amplitude {amplitude}",
                Self::MAX_WEIGHT
            )));
        }
        if !(1..=14).contains(&depth) {
            return Err(Error::InvalidMap(format!("table depth {depth} not in 1..=14")));
        }
        let cells = 3usize.pow(depth);
        let base_lambda = weight / 2f64.powi(depth as i32);
        let piece_integrals: Vec<f64> = (0..64)
            .map(|j| cantor_exp_integral(base_lambda / 2f64.powi(j)))
            .collect();
        let mut f = Self {
            weight,
            amplitude,
            shift,
            depth,
            cells,
            table: Vec::new(),
            log_norm: 0.0,
            piece_integrals,
        };
        let mut table = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 0..cells {
            acc += f.cell_integral(k, 1.0);
            table.push(acc);
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(Error::InvalidMap(format!("normalizer is not positive: {acc}")));
        }
        f.log_norm = acc.ln();
        f.table = table;
        Ok(f)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    fn smooth_weight(&self, s: f64) -> f64 {
        (-self.weight * s + self.amplitude * sincos_turns(s).1).exp()
    }

    fn classify(&self, k: usize) -> Cell {
        let mut g = 0.0;
        let mut scale = 0.5;
        let mut pow = self.cells / 3;
        let mut rem = k;
        while pow > 0 {
            let d = rem / pow;
            rem %= pow;
            match d {
                1 => return Cell::Gap(g + scale),
                2 => g += scale,
                _ => {}
            }
            scale *= 0.5;
            pow /= 3;
        }
        Cell::Piece(g)
    }

    /// Integral over cell `k` from its left end to fraction `u` of its width.
    fn cell_integral(&self, k: usize, u: f64) -> f64 {
        let width = 1.0 / self.cells as f64;
        let a = k as f64 * width;
        match self.classify(k) {
            Cell::Gap(g) => {
                (self.weight * g).exp() * gauss_legendre4(|s| self.smooth_weight(s), a, a + u * width)
            }
            Cell::Piece(g0) => {
                // e^{λG} = 1 + O(λ): the smooth part is integrated exactly and
                // the small singular correction at the cell midpoint
                let mid = a + 0.5 * width;
                let smooth = gauss_legendre4(|s| self.smooth_weight(s), a, a + u * width);
                let correction = self.smooth_weight(mid) * width * (self.partial_piece(u) - u);
                (self.weight * g0).exp() * (smooth + correction)
            }
        }
    }

    /// `∫₀ᵘ e^{λ G(v)} dv` for `λ = c 2^{-D}` by recursion on ternary digits.
    fn partial_piece(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return self.piece_integrals[0];
        }
        let lambda0 = self.weight / 2f64.powi(self.depth as i32);
        let mut acc = 0.0;
        let mut mult = 1.0;
        let mut u = u.max(0.0);
        let mut lambda = lambda0;
        for j in 0..self.piece_integrals.len() - 1 {
            let half = self.piece_integrals[j + 1];
            let e = (0.5 * lambda).exp();
            if u < 1.0 / 3.0 {
                mult /= 3.0;
                u *= 3.0;
            } else if u < 2.0 / 3.0 {
                return acc + mult * (half / 3.0 + e * (u - 1.0 / 3.0));
            } else {
                acc += mult * (half + e) / 3.0;
                mult *= e / 3.0;
                u = 3.0 * u - 2.0;
            }
            lambda *= 0.5;
        }
        acc + mult * u
    }

    pub fn log_deriv(&self, x: f64) -> f64 {
        let r = frac(x);
        self.weight * (cantor_function(r) - r) + self.amplitude * sincos_turns(r).1 - self.log_norm
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.log_deriv(x).exp()
    }

    pub fn lift(&self, x: f64) -> f64 {
        let k = x.floor();
        let r = x - k;
        let pos = r * self.cells as f64;
        let cell = (pos.floor() as usize).min(self.cells - 1);
        let u = pos - cell as f64;
        let cum = self.table[cell] + self.cell_integral(cell, u);
        k + self.shift + cum / self.table[self.cells]
    }
}
