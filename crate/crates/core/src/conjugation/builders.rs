use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::map::{Bump, CantorDiffeo, CircleMap, IntervalMap};

/// A parabolic interval map and a bump placed at `b`, inside the fundamental
/// domain `(a, f̂(a))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicBumpSpec {
    /// Chart translation of the parabolic map.
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// Added to `Df` at `b`.
    pub amplitude: f64,
    /// Half-width of the bump; defaults to 90% of the distance from `b` to
    /// the ends of the fundamental domain.
    #[serde(default)]
    pub width: Option<f64>,
}

impl Default for ParabolicBumpSpec {
    fn default() -> Self {
        Self {
            t: 0.005,
            a: 0.5,
            b: 0.5008,
            amplitude: -0.503,
            width: Some(0.0007),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParabolicBumpPair {
    pub fhat: IntervalMap,
    pub f: IntervalMap,
    /// `|log Df̂(b) - log Df(b)|`.
    pub delta: f64,
    pub bump: Option<Bump>,
}

pub fn parabolic_bump_pair(spec: &ParabolicBumpSpec) -> Result<ParabolicBumpPair> {
    let fhat = IntervalMap::parabolic(spec.t)?;
    let (a, b) = (spec.a, spec.b);
    let fa = fhat.eval(a);
    if !(0.0 < a && a < b && b < fa && fa < 1.0) {
        return Err(Error::InvalidMap(format!(
            "need 0 < a < b < f(a) < 1, got a = {a}, b = {b}, f(a) = {fa}"
        )));
    }
    if spec.amplitude == 0.0 {
        return Ok(ParabolicBumpPair {
            f: fhat.clone(),
            fhat,
            delta: 0.0,
            bump: None,
        });
    }
    let room = (b - a).min(fa - b);
    let width = spec.width.unwrap_or(0.9 * room);
    if !(width > 0.0 && width < room) {
        return Err(Error::InvalidMap(format!(
            "bump half-width {width} must lie in (0, {room})"
        )));
    }
    let bump = Bump {
        center: b,
        width,
        amplitude: spec.amplitude,
    };
    let f = IntervalMap::patched(spec.t, bump)?;
    let delta = (fhat.deriv(b).ln() - f.deriv(b).ln()).abs();
    Ok(ParabolicBumpPair {
        fhat,
        f,
        delta,
        bump: Some(bump),
    })
}

/// Circle map with `log Df = c (G(x) - x) + amplitude cos 2πx - log Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorWeightSpec {
    /// Singular weight `c`.
    pub weight: f64,
    pub amplitude: f64,
    /// `F(0)`.
    pub shift: f64,
    #[serde(default = "default_depth")]
    pub depth: u32,
}

fn default_depth() -> u32 {
    12
}

pub fn cantor_weighted_map(spec: &CantorWeightSpec) -> Result<CircleMap> {
    Ok(CircleMap::Cantor(Arc::new(CantorDiffeo::new(
        spec.weight,
        spec.amplitude,
        spec.shift,
        spec.depth,
    )?)))
}
