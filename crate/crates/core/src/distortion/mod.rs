//! Asymptotic distortion: the linear growth rate of `var(log Dfⁿ)`.

mod partition;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::map::{CircleMap, Order};
use crate::numeric::circle_dist;
use crate::pa::{pa_iterate, pa_var_sequence, DEFAULT_BREAKPOINT_CAP};

pub use partition::{
    log_deriv_iterates, refine_variation, total_variation_fn, total_variation_log_deriv,
    var_log_deriv_iterate, var_log_deriv_multi, var_log_deriv_table, OrbitMap,
    PartitionEstimate, RefinementSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSource {
    ExactPa,
    ClosedMobius,
    Partition,
}

impl SeriesSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeriesSource::ExactPa => "exact_pa",
            SeriesSource::ClosedMobius => "closed_mobius",
            SeriesSource::Partition => "partition",
        }
    }
}

/// The sequence `n ↦ var(log Dfⁿ)/n` on sampled `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSeries {
    pub n_values: Vec<usize>,
    pub var_values: Vec<f64>,
    pub per_n: Vec<f64>,
    /// `min var_m / m` over the sampled `m`.
    pub fekete_estimate: f64,
    pub source: SeriesSource,
    /// Convergence (partition path) or exactness flag per entry.
    pub certified: Vec<bool>,
}

impl DistortionSeries {
    pub fn new(n_values: Vec<usize>, var_values: Vec<f64>, source: SeriesSource, certified: Vec<bool>) -> Self {
        let per_n: Vec<f64> = n_values
            .iter()
            .zip(var_values.iter())
            .map(|(n, v)| v / *n as f64)
            .collect();
        let fekete_estimate = per_n.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            n_values,
            var_values,
            per_n,
            fekete_estimate,
            source,
            certified,
        }
    }

    pub fn running_infimum(&self) -> Vec<f64> {
        let mut m = f64::INFINITY;
        self.per_n
            .iter()
            .map(|v| {
                m = m.min(*v);
                m
            })
            .collect()
    }

    pub fn last_per_n(&self) -> f64 {
        *self.per_n.last().unwrap_or(&f64::NAN)
    }

    /// Value at a sampled `n`.
    pub fn var_at(&self, n: usize) -> Option<f64> {
        self.n_values.iter().position(|m| *m == n).map(|i| self.var_values[i])
    }

    /// Pairs `(m, n)` with `m + n` sampled that violate
    /// `var_{m+n} ≤ var_m + var_n + slack`.
    pub fn subadditivity_violations(&self, slack: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, &m) in self.n_values.iter().enumerate() {
            for (j, &n) in self.n_values.iter().enumerate().skip(i) {
                if let Some(s) = self.var_at(m + n) {
                    if s > self.var_values[i] + self.var_values[j] + slack {
                        out.push((m, n));
                    }
                }
            }
        }
        out
    }

    pub fn all_certified(&self) -> bool {
        self.certified.iter().all(|c| *c)
    }

    /// Columns `n, var, var_over_n, fekete` (running infimum), reals with 12
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,var,var_over_n,fekete")?;
        for (i, inf) in self.running_infimum().into_iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                self.n_values[i],
                fmt_real(self.var_values[i]),
                fmt_real(self.per_n[i]),
                fmt_real(inf)
            )?;
        }
        Ok(())
    }
}

/// Locale-independent formatting with 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').unwrap();
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// `1, 2, 3, 4, 6, 8, 11, 16, …` (ratio about √2) up to and including `n_max`.
pub fn geometric_grid(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = 1.0f64;
    while (x.round() as usize) <= n_max {
        let n = x.round() as usize;
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= std::f64::consts::SQRT_2;
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Closed-form variation sequence of a Möbius map on the given `n`.
fn mobius_series(m: &crate::mobius::MobiusMap, ns: &[usize]) -> DistortionSeries {
    let vars = ns.iter().map(|&n| m.pow(n as u64).var_log_deriv_closed()).collect();
    DistortionSeries::new(ns.to_vec(), vars, SeriesSource::ClosedMobius, vec![true; ns.len()])
}

/// `var(log Dfⁿ)/n` on a geometric grid of `n ≤ n_max`, dispatching to the
/// exact PA path or the Möbius closed form when the map allows it.
pub fn asymptotic_distortion(
    f: &CircleMap,
    n_max: usize,
    schedule: &RefinementSchedule,
) -> Result<DistortionSeries> {
    if n_max < 2 {
        return Err(Error::Domain("n_max must be at least 2".into()));
    }
    let ns = geometric_grid(n_max);
    match f {
        CircleMap::Mobius(m) => Ok(mobius_series(m, &ns)),
        CircleMap::Pa(p) => {
            let full = pa_var_sequence(&p.exact, n_max, DEFAULT_BREAKPOINT_CAP)?;
            let vars = ns.iter().map(|&n| full.var_values[n - 1]).collect();
            Ok(DistortionSeries::new(ns.clone(), vars, SeriesSource::ExactPa, vec![true; ns.len()]))
        }
        _ => partition_series(f, &ns, schedule),
    }
}

/// Generic orbit path on a given list of `n`.
pub fn partition_series<M: OrbitMap + ?Sized>(
    f: &M,
    ns: &[usize],
    schedule: &RefinementSchedule,
) -> Result<DistortionSeries> {
    let est = var_log_deriv_multi(f, ns, schedule)?;
    Ok(DistortionSeries::new(
        ns.to_vec(),
        est.iter().map(|e| e.value).collect(),
        SeriesSource::Partition,
        est.iter().map(|e| e.converged).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k: usize,
    pub dist_f: f64,
    pub dist_fk: f64,
    /// `dist_fk / dist_f`, absent when `dist_f = 0`.
    pub ratio: Option<f64>,
    pub defect: f64,
    pub source: SeriesSource,
}

/// Compares `dist_∞(f^k)` with `k · dist_∞(f)` on the exact paths (PA and
/// Möbius); rotations are trivially zero on both sides.
pub fn stability_check(f: &CircleMap, k: usize, n_max: usize) -> Result<StabilityReport> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let (dist_f, dist_fk, source) = match f {
        CircleMap::Rotation(_) => (0.0, 0.0, SeriesSource::ClosedMobius),
        CircleMap::Mobius(m) => (
            m.asymptotic_distortion(),
            m.pow(k as u64).asymptotic_distortion(),
            SeriesSource::ClosedMobius,
        ),
        CircleMap::Pa(p) => {
            let m = (n_max / k).max(1);
            let fk = pa_iterate(&p.exact, k, DEFAULT_BREAKPOINT_CAP)?;
            let a = pa_var_sequence(&p.exact, m * k, DEFAULT_BREAKPOINT_CAP)?;
            let b = pa_var_sequence(&fk, m, DEFAULT_BREAKPOINT_CAP)?;
            (a.last_per_n(), b.last_per_n(), SeriesSource::ExactPa)
        }
        other => {
            return Err(Error::Unsupported {
                op: "stability_check",
                variant: other.variant_name(),
            })
        }
    };
    let ratio = if dist_f > 0.0 { Some(dist_fk / dist_f) } else { None };
    Ok(StabilityReport {
        k,
        dist_f,
        dist_fk,
        ratio,
        defect: (dist_fk - k as f64 * dist_f).abs(),
        source,
    })
}

/// Distance of `g` from the rotation `R_ρ` in the `C^{1+bv}` gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    /// `sup |g(x) - x - ρ|` in the circle metric.
    pub c0: f64,
    /// `sup |log Dg|`.
    pub dlog: f64,
    pub var: PartitionEstimate,
}

/// Sup-norm components are taken on `sup_points` uniform points.
pub fn rotation_proximity(
    g: &CircleMap,
    rho: f64,
    schedule: &RefinementSchedule,
    sup_points: usize,
) -> Result<Proximity> {
    if sup_points == 0 {
        return Err(Error::Domain("need at least one sup point".into()));
    }
    let rows: Vec<Result<(f64, f64)>> = (0..sup_points)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / sup_points as f64;
            let j = g.jet(x, Order::RightDeriv)?;
            Ok((circle_dist(j.lift, x + rho), j.deriv.ln().abs()))
        })
        .collect();
    let mut c0 = 0.0f64;
    let mut dlog = 0.0f64;
    for r in rows {
        let (a, b) = r?;
        c0 = c0.max(a);
        dlog = dlog.max(b);
    }
    let var = total_variation_log_deriv(g, schedule)?;
    Ok(Proximity { c0, dlog, var })
}

/// Certified lower bounds of `var(log Dfⁿ)/n` for a map with a Cantor
/// component, on partitions augmented with Cantor-gap endpoints and their
/// preimages `f⁻ᵏ`, `k < max(ns)`. The `k`-th term of `log Dfⁿ` carries its
/// singular part on `f⁻ᵏ(C)`, so the endpoints of `C` alone resolve only `n = 1`.
pub fn mather_lower_bound(
    f: &CircleMap,
    ns: &[usize],
    schedule: &RefinementSchedule,
    gap_depth: usize,
) -> Result<DistortionSeries> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let mut layer = crate::map::cantor::cantor_gap_endpoints(gap_depth);
    let mut s = schedule.clone();
    s.extra_points.reserve(layer.len() * n_max.max(1));
    s.extra_points.extend_from_slice(&layer);
    for _ in 1..n_max {
        layer = layer
            .par_iter()
            .map(|&x| f.lift_inverse(x).map(crate::numeric::frac))
            .collect::<Result<Vec<f64>>>()?;
        s.extra_points.extend_from_slice(&layer);
    }
    partition_series(f, ns, &s)
}

/// `(1/n) ‖Σ_{k<n} φ(fᵏ) · Dfᵏ‖_{L¹}` by the periodic trapezoid rule on
/// `grid` points.
pub fn twisted_birkhoff_l1<P>(f: &CircleMap, phi: P, n: usize, grid: usize) -> Result<f64>
where
    P: Fn(f64) -> f64 + Sync,
{
    if n == 0 || grid == 0 {
        return Err(Error::Domain("n and grid must be positive".into()));
    }
    let rows: Vec<Result<f64>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut x = i as f64 / grid as f64;
            let mut d = 1.0;
            let mut s = 0.0;
            for k in 0..n {
                s += phi(x) * d;
                let j = f.jet(x, Order::RightDeriv).map_err(|e| e.at_step(k))?;
                d *= j.deriv;
                x = crate::numeric::frac(j.lift);
            }
            Ok(s.abs())
        })
        .collect();
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total / grid as f64 / n as f64)
}

/// `‖D²f/Df‖_{L¹}` by the periodic trapezoid rule; equals `var(log Df)` for
/// maps with absolutely continuous derivative.
pub fn affine_l1_norm(f: &CircleMap, points: usize) -> Result<f64> {
    let rows: Vec<Result<f64>> = (0..points)
        .into_par_iter()
        .map(|i| f.affine_deriv(i as f64 / points as f64).map(f64::abs))
        .collect();
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total / points as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::MobiusMap;

    #[test]
    fn formatting_is_twelve_digits() {
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(5.545177444479562), "5.54517744448");
        assert_eq!(fmt_real(-0.001234), "-0.001234");
        assert_eq!(fmt_real(1.5e-9), "1.5e-9");
        assert_eq!(fmt_real(123456789012345.0), "1.23456789012e14");
    }

    #[test]
    fn grid_shape() {
        assert_eq!(geometric_grid(10), vec![1, 2, 3, 4, 6, 8, 10]);
        assert_eq!(*geometric_grid(200).last().unwrap(), 200);
    }

    #[test]
    fn rotation_series_is_zero() {
        let s = asymptotic_distortion(&CircleMap::Rotation(0.4), 20, &RefinementSchedule::default()).unwrap();
        assert!(s.var_values.iter().all(|v| *v == 0.0));
        assert_eq!(s.fekete_estimate, 0.0);
    }

    #[test]
    fn mobius_dispatch() {
        let m = MobiusMap::new([[2.0, 0.0], [0.0, 0.5]]).unwrap();
        let s = asymptotic_distortion(&CircleMap::Mobius(m), 64, &RefinementSchedule::default()).unwrap();
        assert_eq!(s.source, SeriesSource::ClosedMobius);
        assert!((s.last_per_n() - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn stability_of_mobius_and_rotation() {
        let m = CircleMap::Mobius(MobiusMap::new([[2.0, 0.0], [0.0, 0.5]]).unwrap());
        let r = stability_check(&m, 3, 0).unwrap();
        assert!((r.dist_fk - 3.0 * 8.0 * 2f64.ln()).abs() < 1e-12);
        assert!((r.ratio.unwrap() - 3.0).abs() < 1e-12);
        let r = stability_check(&CircleMap::Rotation(0.2), 5, 0).unwrap();
        assert_eq!(r.defect, 0.0);
        assert!(r.ratio.is_none());
    }

    #[test]
    fn subadditivity_detection() {
        let s = DistortionSeries::new(vec![1, 2], vec![1.0, 2.5], SeriesSource::Partition, vec![true; 2]);
        assert_eq!(s.subadditivity_violations(0.0), vec![(1, 1)]);
        assert!(s.subadditivity_violations(0.6).is_empty());
    }

    #[test]
    fn csv_layout() {
        let s = DistortionSeries::new(vec![1, 2], vec![2.0, 3.0], SeriesSource::Partition, vec![true; 2]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,var,var_over_n,fekete\n1,2,2,2\n2,3,1.5,1.5\n");
    }

    #[test]
    fn proximity_of_rotations() {
        let s = RefinementSchedule::default();
        let p = rotation_proximity(&CircleMap::Rotation(0.3), 0.3, &s, 256).unwrap();
        assert_eq!((p.c0, p.dlog, p.var.value), (0.0, 0.0, 0.0));
        let p = rotation_proximity(&CircleMap::Rotation(0.31), 0.3, &s, 256).unwrap();
        assert!((p.c0 - 0.01).abs() < 1e-12);
    }
}
