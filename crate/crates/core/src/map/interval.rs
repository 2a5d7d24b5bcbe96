//! Diffeomorphisms of `[0, 1]` fixing both endpoints.
//!
//! The parabolic restriction is the translation `w ↦ w + t` in the chart
//! `w = tan(π(x - 1/2))`, i.e. the boundary action of `[[1, t], [0, 1]]`
//! restricted to the complement of its fixed point. In that chart
//!
//! ```text
//! f(x)  = x + atan(t sin²(πx) / (1 - (t/2) sin 2πx)) / π
//! Df(x) = 1 / (1 - t sin 2πx + t² sin² πx)
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{sincos_turns, solve_increasing};

use super::SampledDiffeo;

/// Smooth compactly supported modification `amplitude · width · u β(u)`,
/// `u = (x - center)/width`, `β(u) = exp(1 - 1/(1 - u²))`. Its derivative at
/// the center equals `amplitude` and it vanishes at the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    /// `(g, g', g'')` at `x`.
    pub fn parts(&self, x: f64) -> (f64, f64, f64) {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - u * u;
        let beta = (1.0 - 1.0 / q).exp();
        // β' = β · (-2u/q²),  β'' = β · ((2u/q²)² - (2 q² + 8u² q)/q⁴)
        let b1 = -2.0 * u / (q * q);
        let b2 = b1 * b1 - (2.0 * q + 8.0 * u * u) / (q * q * q);
        let psi = u * beta;
        let dpsi = beta * (1.0 + u * b1);
        let ddpsi = beta * (2.0 * b1 + u * b2);
        (
            self.amplitude * self.width * psi,
            self.amplitude * dpsi,
            self.amplitude * ddpsi / self.width,
        )
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }
}

#[derive(Debug, Clone)]
pub enum IntervalMap {
    /// Parabolic Möbius map with translation parameter `t > 0` in the chart.
    MobiusRestriction { t: f64 },
    /// Parabolic restriction plus a bump.
    SmoothPatch { t: f64, bump: Bump },
    Sampled(Arc<SampledDiffeo>),
}

fn parabolic_parts(t: f64, x: f64) -> (f64, f64, f64) {
    let (s2, c2) = sincos_turns(x);
    let (s1, _) = sincos_turns(0.5 * x);
    let sin_sq = s1 * s1;
    let value = x + (t * sin_sq / (1.0 - 0.5 * t * s2)).atan() / PI;
    let den = 1.0 - t * s2 + t * t * sin_sq;
    let d = 1.0 / den;
    // D log Df = (2πt cos 2πx - πt² sin 2πx) / den
    let affine = (2.0 * PI * t * c2 - PI * t * t * s2) / den;
    (value, d, affine * d)
}

impl IntervalMap {
    pub fn parabolic(t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidMap(format!("parabolic parameter must lie in (0, 1), got {t}")));
        }
        Ok(IntervalMap::MobiusRestriction { t })
    }

    /// Adds `bump` to the parabolic map, rejecting non-positive derivatives
    /// and interior fixed points (checked on a grid of the bump support).
    pub fn patched(t: f64, bump: Bump) -> Result<Self> {
        Self::parabolic(t)?;
        if !(bump.width > 0.0) || !bump.center.is_finite() || !bump.amplitude.is_finite() {
            return Err(Error::InvalidMap("bump needs positive width and finite parameters".into()));
        }
        let (lo, hi) = bump.support();
        if lo <= 0.0 || hi >= 1.0 {
            return Err(Error::InvalidMap("bump support must lie inside (0, 1)".into()));
        }
        let f = IntervalMap::SmoothPatch { t, bump };
        let n = 20_000;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let (v, d, _) = f.parts(x);
            if !(d > 0.0) {
                return Err(Error::InvalidMap(format!("derivative {d} not positive at {x}")));
            }
            if !(v > x) {
                return Err(Error::InvalidMap(format!("fixed point or reversal near {x}")));
            }
        }
        Ok(f)
    }

    /// `(f, Df, D²f)`.
    pub fn parts(&self, x: f64) -> (f64, f64, f64) {
        match self {
            IntervalMap::MobiusRestriction { t } => parabolic_parts(*t, x),
            IntervalMap::SmoothPatch { t, bump } => {
                let (v, d, dd) = parabolic_parts(*t, x);
                let (g, g1, g2) = bump.parts(x);
                (v + g, d + g1, dd + g2)
            }
            IntervalMap::Sampled(s) => {
                let d = s.deriv(x);
                (s.lift(x), d, d * s.affine_deriv(x))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.parts(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.parts(x).1
    }

    pub fn affine_deriv(&self, x: f64) -> f64 {
        let (_, d, dd) = self.parts(x);
        dd / d
    }

    pub fn inverse_eval(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("{y} is outside [0, 1]")));
        }
        match self {
            IntervalMap::MobiusRestriction { t } => Ok(parabolic_parts(-*t, y).0),
            IntervalMap::Sampled(s) => s.lift_inverse(y).map(|x| x.clamp(0.0, 1.0)),
            _ => solve_increasing(
                |x| {
                    let (v, d, _) = self.parts(x);
                    Ok((v, d))
                },
                y,
                0.0,
                1.0,
            ),
        }
    }
}
