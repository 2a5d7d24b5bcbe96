use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::{frac_rat, pa_compose, PaMap, Rational};
use crate::distortion::{DistortionSeries, SeriesSource};
use crate::error::{Error, Result};

/// `J_f(x) = Df₊(x) / Df₋(x)`.
pub fn pa_jump(f: &PaMap, x: &Rational) -> Rational {
    f.right_slope(x) / f.left_slope(x)
}

fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::NAN).abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational without overflow.
pub fn ln_rational(r: &Rational) -> f64 {
    if !r.is_positive() {
        return f64::NAN;
    }
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub point: String,
    pub jump: String,
    pub complete_jump: String,
    pub log_complete_jump: f64,
    pub horizon_used: usize,
    pub certified: bool,
    /// Orbit offsets `n` with `J_f(fⁿ(x)) ≠ 1`.
    pub hits: Vec<i64>,
}

struct OrbitScan {
    product: Rational,
    hits: Vec<(i64, Rational)>,
    certified: bool,
}

fn scan_orbit(f: &PaMap, finv: &PaMap, x: &Rational, horizon: usize) -> OrbitScan {
    let window = horizon.div_ceil(4);
    let mut product = Rational::one();
    let mut hits = Vec::new();
    let mut certified = true;
    let x0 = frac_rat(x);
    let j0 = pa_jump(f, &x0);
    if !j0.is_one() {
        product *= &j0;
        hits.push((0, x0.clone()));
    }
    for (map, sign) in [(f, 1i64), (finv, -1i64)] {
        let mut y = x0.clone();
        for k in 1..=horizon {
            y = map.eval(&y);
            let j = pa_jump(f, &y);
            if !j.is_one() {
                product *= &j;
                hits.push((sign * k as i64, y.clone()));
                if k + window > horizon {
                    certified = false;
                }
            }
        }
    }
    hits.sort_by_key(|h| h.0);
    OrbitScan {
        product,
        hits,
        certified,
    }
}

/// `C_f(x) = Π_{|n| ≤ horizon} J_f(fⁿ(x))`. The result is certified when the
/// last `⌈horizon/4⌉` orbit points on each side meet no breakpoint.
pub fn pa_complete_jump(f: &PaMap, x: &Rational, horizon: usize) -> Result<JumpReport> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let finv = f.inverse();
    let scan = scan_orbit(f, &finv, x, horizon);
    Ok(JumpReport {
        point: x.to_string(),
        jump: pa_jump(f, x).to_string(),
        complete_jump: scan.product.to_string(),
        log_complete_jump: ln_rational(&scan.product),
        horizon_used: horizon,
        certified: scan.certified,
        hits: scan.hits.iter().map(|h| h.0).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    /// Breakpoints of `f` lying on one orbit.
    pub breakpoints: Vec<String>,
    pub complete_jump: String,
    pub log_complete_jump: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinakawaReport {
    /// `C_f ≡ 1` on every breakpoint orbit within the horizon.
    pub holds: bool,
    /// All classes certified.
    pub certified: bool,
    pub classes: Vec<OrbitClass>,
}

/// Groups the breakpoints of `f` into orbit classes (within `horizon`) and
/// reports each class's complete jump.
pub fn minakawa_predicate(f: &PaMap, horizon: usize) -> Result<MinakawaReport> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let finv = f.inverse();
    let bps = f.breakpoints();
    let mut assigned = vec![false; bps.len()];
    let mut classes = Vec::new();
    for i in 0..bps.len() {
        if assigned[i] {
            continue;
        }
        let scan = scan_orbit(f, &finv, &bps[i], horizon);
        let mut members = Vec::new();
        for (_, p) in &scan.hits {
            if let Ok(j) = bps.binary_search(p) {
                assigned[j] = true;
                members.push(p.to_string());
            }
        }
        classes.push(OrbitClass {
            breakpoints: members,
            complete_jump: scan.product.to_string(),
            log_complete_jump: ln_rational(&scan.product),
            certified: scan.certified,
        });
    }
    let holds = classes.iter().all(|c| c.complete_jump == "1");
    let certified = classes.iter().all(|c| c.certified);
    Ok(MinakawaReport {
        holds,
        certified,
        classes,
    })
}

/// `Σ |log C|` over the orbit classes; the candidate limit of `var/n`.
pub fn orbit_class_sum(report: &MinakawaReport) -> f64 {
    report.classes.iter().map(|c| c.log_complete_jump.abs()).sum()
}

/// `var(log Df) = Σ_b |log J_f(b)|` for a PA map.
pub fn pa_variation(f: &PaMap) -> f64 {
    f.breakpoints()
        .iter()
        .map(|b| ln_rational(&pa_jump(f, b)).abs())
        .sum()
}

/// Exact iterates `f, f², …, f^{n_max}` and their log-derivative variation.
pub fn pa_var_sequence(f: &PaMap, n_max: usize, breakpoint_cap: usize) -> Result<DistortionSeries> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let mut acc = f.clone();
    let mut ns = Vec::with_capacity(n_max);
    let mut vars = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            acc = pa_compose(&acc, f);
        }
        if acc.breakpoint_count() > breakpoint_cap {
            return Err(Error::ResourceCap {
                what: "breakpoints",
                requested: acc.breakpoint_count(),
                cap: breakpoint_cap,
            });
        }
        ns.push(n);
        vars.push(pa_variation(&acc));
    }
    Ok(DistortionSeries::new(ns, vars, SeriesSource::ExactPa, vec![true; n_max]))
}

#[cfg(test)]
mod tests {
    use super::super::{rat, two_interval_map};
    use super::*;
    use num_traits::Zero;

    fn two_piece() -> PaMap {
        two_interval_map(rat(2, 1), rat(1, 3), rat(4, 5)).unwrap()
    }

    fn balanced() -> PaMap {
        two_interval_map(rat(3, 1), rat(1, 9), rat(2, 3)).unwrap()
    }

    #[test]
    fn jumps_of_two_piece_map() {
        let f = two_piece();
        assert_eq!(pa_jump(&f, &rat(0, 1)), rat(4, 1));
        assert_eq!(pa_jump(&f, &rat(1, 3)), rat(1, 4));
        assert_eq!(pa_jump(&f, &rat(1, 2)), rat(1, 1));
        let prod: Rational = f.breakpoints().iter().map(|b| pa_jump(&f, b)).product();
        assert!(prod.is_one());
    }

    #[test]
    fn complete_jump_two_piece() {
        let f = two_piece();
        let r = pa_complete_jump(&f, &rat(0, 1), 40).unwrap();
        assert_eq!(r.complete_jump, "4");
        assert!(r.certified);
        let r = pa_complete_jump(&f, &rat(1, 2), 40).unwrap();
        // 1/2 is on neither breakpoint orbit within the horizon
        assert_eq!(r.complete_jump, "1");
    }

    #[test]
    fn minakawa_examples() {
        assert!(minakawa_predicate(&PaMap::rotation(rat(1, 5)), 10).unwrap().holds);
        let rep = minakawa_predicate(&two_piece(), 40).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.classes.len(), 2);
        assert!(rep.classes.iter().any(|c| c.complete_jump == "4"));
        let rep = minakawa_predicate(&balanced(), 40).unwrap();
        assert!(rep.holds && rep.certified);
        assert_eq!(rep.classes.len(), 1);
    }

    #[test]
    fn ln_of_huge_rationals() {
        let big = Rational::new(BigInt::from(3).pow(2000u32), BigInt::from(2).pow(1500u32));
        let expect = 2000.0 * 3f64.ln() - 1500.0 * 2f64.ln();
        assert!((ln_rational(&big) - expect).abs() < 1e-9 * expect.abs());
        assert!(ln_rational(&Rational::zero()).is_nan());
    }

    #[test]
    fn rotation_sequence_is_zero() {
        let s = pa_var_sequence(&PaMap::rotation(rat(1, 3)), 10, 100).unwrap();
        assert!(s.var_values.iter().all(|v| *v == 0.0));
    }
}
