//! Exact piecewise-affine circle homeomorphisms over arbitrary-precision
//! rationals.
//!
//! A map is stored in canonical form: its breakpoints in `[0, 1)` (points
//! where the slope actually changes), the lift values `F(b_i)` of the lift
//! normalized by `F(0) ∈ [0, 1)`, and the slope on `[b_i, b_{i+1})` with the
//! last interval wrapping around through `b_0 + 1`.

mod jumps;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use jumps::{
    ln_rational, minakawa_predicate, orbit_class_sum, pa_complete_jump, pa_jump,
    pa_var_sequence, pa_variation, JumpReport, MinakawaReport, OrbitClass,
};

pub type Rational = BigRational;

/// Default cap on the number of breakpoints of an iterate.
pub const DEFAULT_BREAKPOINT_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaMap {
    knots: Vec<Rational>,
    values: Vec<Rational>,
    slopes: Vec<Rational>,
    /// `F(0)`, in `[0, 1)`.
    at_zero: Rational,
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn floor_rat(x: &Rational) -> Rational {
    Rational::from_integer(x.numer().div_floor(x.denom()))
}

fn frac_rat(x: &Rational) -> Rational {
    x - floor_rat(x)
}

impl PaMap {
    pub fn rotation(shift: Rational) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            slopes: Vec::new(),
            at_zero: frac_rat(&shift),
        }
    }

    pub fn identity() -> Self {
        Self::rotation(Rational::zero())
    }

    /// Map with slope `slopes[i]` on `[knots[i], knots[i+1])` (the last
    /// interval wraps) and `F(0) = at_zero` (taken mod 1).
    pub fn new(knots: Vec<Rational>, slopes: Vec<Rational>, at_zero: Rational) -> Result<Self> {
        if knots.len() != slopes.len() {
            return Err(Error::InvalidMap(format!(
                "{} breakpoints but {} slopes",
                knots.len(),
                slopes.len()
            )));
        }
        if knots.is_empty() {
            return Ok(Self::rotation(at_zero));
        }
        let zero = Rational::zero();
        let one = Rational::one();
        if knots.iter().any(|k| *k < zero || *k >= one) {
            return Err(Error::InvalidMap("breakpoints must lie in [0, 1)".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMap("breakpoints must be strictly increasing".into()));
        }
        if slopes.iter().any(|s| *s <= zero) {
            return Err(Error::InvalidMap("slopes must be positive".into()));
        }
        let m = knots.len();
        let mut total = Rational::zero();
        for i in 0..m {
            let len = if i + 1 < m {
                &knots[i + 1] - &knots[i]
            } else {
                &knots[0] + &one - &knots[i]
            };
            total += &slopes[i] * len;
        }
        if total != one {
            return Err(Error::InvalidMap(format!(
                "slopes times lengths sum to {total}, not 1"
            )));
        }
        let at_zero = frac_rat(&at_zero);
        let mut values = Vec::with_capacity(m);
        values.push(&at_zero + &slopes[m - 1] * &knots[0]);
        for i in 0..m - 1 {
            let v = &values[i] + &slopes[i] * (&knots[i + 1] - &knots[i]);
            values.push(v);
        }
        Ok(Self {
            knots,
            values,
            slopes,
            at_zero,
        }
        .canonical())
    }

    /// Drops breakpoints whose adjacent slopes agree.
    fn canonical(self) -> Self {
        let m = self.knots.len();
        if m == 0 {
            return self;
        }
        let keep: Vec<usize> = (0..m)
            .filter(|&i| self.slopes[(i + m - 1) % m] != self.slopes[i])
            .collect();
        if keep.is_empty() {
            // slopes all equal, hence equal to 1
            return Self::rotation(self.at_zero);
        }
        if keep.len() == m {
            return self;
        }
        Self {
            knots: keep.iter().map(|&i| self.knots[i].clone()).collect(),
            values: keep.iter().map(|&i| self.values[i].clone()).collect(),
            slopes: keep.iter().map(|&i| self.slopes[i].clone()).collect(),
            at_zero: self.at_zero,
        }
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.knots
    }

    pub fn slopes(&self) -> &[Rational] {
        &self.slopes
    }

    /// Lift values `F(b_i)`.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value_at_zero(&self) -> &Rational {
        &self.at_zero
    }

    pub fn breakpoint_count(&self) -> usize {
        self.knots.len()
    }

    pub fn is_breakpoint(&self, x: &Rational) -> bool {
        self.knots.binary_search(&frac_rat(x)).is_ok()
    }

    /// Index of the interval containing `r ∈ [0, 1)` from the right, with
    /// `m - 1` for the wrapped interval before the first knot.
    fn interval_index(&self, r: &Rational) -> usize {
        let idx = self.knots.partition_point(|k| k <= r);
        if idx == 0 {
            self.knots.len() - 1
        } else {
            idx - 1
        }
    }

    pub fn lift(&self, x: &Rational) -> Rational {
        let k = floor_rat(x);
        let r = x - &k;
        if self.knots.is_empty() {
            return x + &self.at_zero;
        }
        let i = self.interval_index(&r);
        let base = if r < self.knots[0] {
            &self.values[i] - Rational::one() + &self.slopes[i] * (&r - &self.knots[i] + Rational::one())
        } else {
            &self.values[i] + &self.slopes[i] * (&r - &self.knots[i])
        };
        base + k
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        frac_rat(&self.lift(x))
    }

    pub fn right_slope(&self, x: &Rational) -> Rational {
        if self.knots.is_empty() {
            return Rational::one();
        }
        self.slopes[self.interval_index(&frac_rat(x))].clone()
    }

    pub fn left_slope(&self, x: &Rational) -> Rational {
        if self.knots.is_empty() {
            return Rational::one();
        }
        let r = frac_rat(x);
        match self.knots.binary_search(&r) {
            Ok(i) => {
                let m = self.knots.len();
                self.slopes[(i + m - 1) % m].clone()
            }
            Err(_) => self.slopes[self.interval_index(&r)].clone(),
        }
    }

    pub fn lift_inverse(&self, y: &Rational) -> Rational {
        if self.knots.is_empty() {
            return y - &self.at_zero;
        }
        let v0 = &self.values[0];
        let k = floor_rat(&(y - v0));
        let yr = y - &k;
        let i = self.values.partition_point(|v| *v <= yr) - 1;
        &self.knots[i] + (&yr - &self.values[i]) / &self.slopes[i] + k
    }

    pub fn eval_inverse(&self, y: &Rational) -> Rational {
        frac_rat(&self.lift_inverse(y))
    }

    /// Exact inverse map.
    pub fn inverse(&self) -> PaMap {
        if self.knots.is_empty() {
            return Self::rotation(-self.at_zero.clone());
        }
        let m = self.knots.len();
        // breakpoints of the inverse are the images of the breakpoints
        let mut pts: Vec<(Rational, Rational)> = (0..m)
            .map(|i| (frac_rat(&self.values[i]), Rational::one() / &self.slopes[i]))
            .collect();
        pts.sort_by(|a, b| a.0.cmp(&b.0));
        let knots: Vec<Rational> = pts.iter().map(|p| p.0.clone()).collect();
        let slopes: Vec<Rational> = pts.into_iter().map(|p| p.1).collect();
        let at_zero = self.lift_inverse(&Rational::zero());
        PaMap::new(knots, slopes, at_zero).expect("inverse of a valid map is valid")
    }

    pub fn to_f64_parts(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let f = |r: &Rational| r.to_f64().unwrap_or(f64::NAN);
        (
            self.knots.iter().map(f).collect(),
            self.values.iter().map(f).collect(),
            self.slopes.iter().map(f).collect(),
            f(&self.at_zero),
        )
    }

    pub fn to_records(&self) -> Vec<PaRecord> {
        if self.knots.is_empty() {
            return vec![PaRecord {
                breakpoint: "0".into(),
                value: self.at_zero.to_string(),
                slope: "1".into(),
            }];
        }
        (0..self.knots.len())
            .map(|i| PaRecord {
                breakpoint: self.knots[i].to_string(),
                value: self.values[i].to_string(),
                slope: self.slopes[i].to_string(),
            })
            .collect()
    }

    /// Parses records written by [`PaMap::to_records`]. Values must agree
    /// with the slopes; jump-one entries are allowed and removed.
    pub fn from_records(records: &[PaRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Parse("empty breakpoint list".into()));
        }
        let parse = |s: &str| -> Result<Rational> {
            s.trim()
                .parse::<Rational>()
                .map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))
        };
        let mut knots = Vec::new();
        let mut values = Vec::new();
        let mut slopes = Vec::new();
        for r in records {
            knots.push(parse(&r.breakpoint)?);
            values.push(parse(&r.value)?);
            slopes.push(parse(&r.slope)?);
        }
        // F(0) from the first record and the wrapped slope
        let m = knots.len();
        let at_zero = if knots[0].is_zero() {
            values[0].clone()
        } else {
            &values[0] - &slopes[m - 1] * &knots[0]
        };
        let map = PaMap::new(knots.clone(), slopes, at_zero)?;
        let shift = floor_rat(&(&values[0] - map.lift(&knots[0])));
        for (k, v) in knots.iter().zip(values.iter()) {
            if map.lift(k) + &shift != *v {
                return Err(Error::Parse(format!(
                    "value {v} at breakpoint {k} is inconsistent with the slopes"
                )));
            }
        }
        Ok(map)
    }
}

/// One JSON entry of the exchange format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaRecord {
    pub breakpoint: String,
    pub value: String,
    pub slope: String,
}

/// `f ∘ g`, exact.
pub fn pa_compose(f: &PaMap, g: &PaMap) -> PaMap {
    if g.knots.is_empty() && f.knots.is_empty() {
        return PaMap::rotation(&f.at_zero + &g.at_zero);
    }
    let mut cand: Vec<Rational> = g.knots.clone();
    cand.extend(f.knots.iter().map(|b| g.eval_inverse(b)));
    cand.sort();
    cand.dedup();
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut slopes = Vec::new();
    for p in cand {
        let gp = g.lift(&p);
        let right = f.right_slope(&gp) * g.right_slope(&p);
        let left = f.left_slope(&gp) * g.left_slope(&p);
        if left != right {
            values.push(f.lift(&gp));
            knots.push(p);
            slopes.push(right);
        }
    }
    let fg0 = f.lift(&g.lift(&Rational::zero()));
    let shift = floor_rat(&fg0);
    if knots.is_empty() {
        return PaMap::rotation(fg0);
    }
    for v in values.iter_mut() {
        *v -= &shift;
    }
    PaMap {
        knots,
        values,
        slopes,
        at_zero: fg0 - shift,
    }
}

/// `f^n` by repeated composition.
pub fn pa_iterate(f: &PaMap, n: usize, breakpoint_cap: usize) -> Result<PaMap> {
    if n == 0 {
        return Err(Error::Domain("iterate count must be at least 1".into()));
    }
    let mut acc = f.clone();
    for _ in 1..n {
        acc = pa_compose(&acc, f);
        if acc.breakpoint_count() > breakpoint_cap {
            return Err(Error::ResourceCap {
                what: "breakpoints",
                requested: acc.breakpoint_count(),
                cap: breakpoint_cap,
            });
        }
    }
    Ok(acc)
}

/// Floating-point evaluation tables of a PA map.
#[derive(Debug, Clone, PartialEq)]
pub struct PaFloatView {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    at_zero: f64,
}

impl PaFloatView {
    pub fn new(map: &PaMap) -> Self {
        let (knots, values, slopes, at_zero) = map.to_f64_parts();
        Self {
            knots,
            values,
            slopes,
            at_zero,
        }
    }

    fn interval_index(&self, r: f64) -> usize {
        let idx = self.knots.partition_point(|k| *k <= r);
        if idx == 0 {
            self.knots.len() - 1
        } else {
            idx - 1
        }
    }

    pub fn lift(&self, x: f64) -> f64 {
        if self.knots.is_empty() {
            return x + self.at_zero;
        }
        let k = x.floor();
        let r = x - k;
        let i = self.interval_index(r);
        let base = if r < self.knots[0] {
            self.values[i] - 1.0 + self.slopes[i] * (r - self.knots[i] + 1.0)
        } else {
            self.values[i] + self.slopes[i] * (r - self.knots[i])
        };
        base + k
    }

    pub fn deriv_right(&self, x: f64) -> f64 {
        if self.knots.is_empty() {
            return 1.0;
        }
        self.slopes[self.interval_index(x - x.floor())]
    }

    /// Classical derivative; errors exactly at a breakpoint.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        if self.knots.is_empty() {
            return Ok(1.0);
        }
        let r = x - x.floor();
        if let Ok(i) = self.knots.binary_search_by(|k| k.partial_cmp(&r).unwrap()) {
            let m = self.knots.len();
            return Err(Error::Breakpoint {
                point: r,
                left: self.slopes[(i + m - 1) % m],
                right: self.slopes[i],
            });
        }
        Ok(self.deriv_right(r))
    }

    /// One point inside each interval of affinity of `fⁿ`, found by pulling
    /// the breakpoints back in floating point. Midpoints keep the orbits of
    /// the samples away from the breakpoints they straddle.
    pub fn iterate_cell_points(&self, n: usize) -> Vec<f64> {
        let mut cuts: Vec<f64> = Vec::with_capacity(n * self.knots.len());
        let mut layer = self.knots.clone();
        for _ in 0..n {
            cuts.extend(layer.iter().map(|x| x - x.floor()));
            for x in layer.iter_mut() {
                *x = self.lift_inverse(*x);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let m = cuts.len();
        (0..m)
            .map(|i| {
                let next = if i + 1 < m { cuts[i + 1] } else { cuts[0] + 1.0 };
                let mid = 0.5 * (cuts[i] + next);
                mid - mid.floor()
            })
            .collect()
    }

    pub fn lift_inverse(&self, y: f64) -> f64 {
        if self.knots.is_empty() {
            return y - self.at_zero;
        }
        let v0 = self.values[0];
        let k = (y - v0).floor();
        let yr = y - k;
        let i = self.values.partition_point(|v| *v <= yr).max(1) - 1;
        self.knots[i] + (yr - self.values[i]) / self.slopes[i] + k
    }
}

/// A PA map with its floating-point view, as carried by `CircleMap::Pa`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaCircle {
    pub exact: PaMap,
    pub view: PaFloatView,
}

impl PaCircle {
    pub fn new(exact: PaMap) -> Self {
        let view = PaFloatView::new(&exact);
        Self { exact, view }
    }
}

/// Two-interval map with slopes `s0` on `[0, b)` and `s1` on `[b, 1)` and
/// `F(0) = v`; `s1` is determined by `s0` and `b`.
pub fn two_interval_map(s0: Rational, b: Rational, v: Rational) -> Result<PaMap> {
    let one = Rational::one();
    let rest = &one - &s0 * &b;
    if !rest.is_positive() || b <= Rational::zero() || b >= one {
        return Err(Error::InvalidMap("first piece covers the whole circle".into()));
    }
    let s1 = rest / (&one - &b);
    PaMap::new(vec![Rational::zero(), b], vec![s0, s1], v)
}
