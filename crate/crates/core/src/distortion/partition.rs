//! Total variation of `log Dfⁿ` over nested dyadic partitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{CircleMap, IntervalMap, Order};
use crate::numeric::frac;

/// Dyadic refinement from `2^min_level` to `2^max_level` points, stopping once
/// successive estimates change by less than `rel_tol`. `extra_points` are
/// merged into every partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSchedule {
    pub min_level: u32,
    pub max_level: u32,
    pub rel_tol: f64,
    #[serde(default)]
    pub extra_points: Vec<f64>,
}

impl Default for RefinementSchedule {
    fn default() -> Self {
        Self {
            min_level: 8,
            max_level: 20,
            rel_tol: 1e-7,
            extra_points: Vec::new(),
        }
    }
}

impl RefinementSchedule {
    pub fn with_max_level(mut self, level: u32) -> Self {
        self.max_level = level;
        self
    }

    pub fn with_extra_points(mut self, pts: Vec<f64>) -> Self {
        self.extra_points = pts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.min_level < 2 || self.max_level < self.min_level || self.max_level > 26 {
            return Err(Error::Domain(format!(
                "refinement levels {}..={} outside 2..=26",
                self.min_level, self.max_level
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain("relative tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A total-variation lower bound with its refinement history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub value: f64,
    pub partition_size: usize,
    /// `(partition size, value)` per level.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
    pub rel_change: f64,
}

/// A map whose iterates can be followed point by point.
pub trait OrbitMap: Sync {
    /// Next point and `log Df` (right derivative where it matters).
    fn step(&self, x: f64) -> Result<(f64, f64)>;
    /// Circle maps wrap; interval maps include both endpoints.
    fn periodic(&self) -> bool;
    /// Points that must join the partition so that every jump of
    /// `log Dfⁿ` is seen. Empty unless the map has breakpoints.
    fn cell_points(&self, _n: usize) -> Vec<f64> {
        Vec::new()
    }
}

impl OrbitMap for CircleMap {
    fn step(&self, x: f64) -> Result<(f64, f64)> {
        let j = self.jet(x, Order::RightDeriv)?;
        Ok((frac(j.lift), j.deriv.ln()))
    }

    fn periodic(&self) -> bool {
        true
    }

    fn cell_points(&self, n: usize) -> Vec<f64> {
        match self {
            CircleMap::Pa(p) => p.view.iterate_cell_points(n),
            _ => Vec::new(),
        }
    }
}

impl OrbitMap for IntervalMap {
    fn step(&self, x: f64) -> Result<(f64, f64)> {
        let (v, d, _) = self.parts(x);
        if !(d > 0.0) {
            return Err(Error::Domain(format!("derivative {d} not positive at {x}")));
        }
        Ok((v.clamp(0.0, 1.0), d.ln()))
    }

    fn periodic(&self) -> bool {
        false
    }
}

/// `log Dfⁿ(x)` for every `n` in the ascending list `ns`, in one orbit pass.
pub fn log_deriv_iterates<M: OrbitMap + ?Sized>(f: &M, x: f64, ns: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ns.len());
    let mut y = x;
    let mut acc = 0.0;
    let mut k = 0;
    for &n in ns {
        while k < n {
            let (next, ld) = f.step(y).map_err(|e| e.at_step(k))?;
            acc += ld;
            y = next;
            k += 1;
        }
        out.push(acc);
    }
    Ok(out)
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "iterate list must be nonempty, positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Sum of `|v_{i+1} - v_i|` in index order (plus the wrap term when
/// periodic) for column `col` of a row-major table with `k` columns.
fn variation_of_column(values: &[f64], k: usize, col: usize, periodic: bool) -> f64 {
    let rows = values.len() / k;
    let mut tv = 0.0;
    for i in 1..rows {
        tv += (values[i * k + col] - values[(i - 1) * k + col]).abs();
    }
    if periodic && rows > 1 {
        tv += (values[col] - values[(rows - 1) * k + col]).abs();
    }
    tv
}

/// Values of a `k`-vector function on a dyadic partition merged with sorted
/// extra points, refined level by level. Reuses the coarse points.
struct NestedPartition {
    periodic: bool,
    k: usize,
    level: u32,
    /// Dyadic points `i / 2^level`, `i = 0..2^level` (plus 1 when not periodic).
    dyadic: Vec<f64>,
    extra: Vec<(f64, Vec<f64>)>,
}

impl NestedPartition {
    fn new<F>(eval: &F, k: usize, periodic: bool, level: u32, extra_points: &[f64]) -> Result<Self>
    where
        F: Fn(f64) -> Result<Vec<f64>> + Sync,
    {
        let n = 1usize << level;
        let count = if periodic { n } else { n + 1 };
        let dyadic = eval_points(eval, k, (0..count).map(|i| i as f64 / n as f64).collect())?;
        let mut pts: Vec<f64> = extra_points
            .iter()
            .map(|p| if periodic { frac(*p) } else { p.clamp(0.0, 1.0) })
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let vals = eval_points(eval, k, pts.clone())?;
        let extra = pts
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, vals[i * k..(i + 1) * k].to_vec()))
            .collect();
        Ok(Self {
            periodic,
            k,
            level,
            dyadic,
            extra,
        })
    }

    fn refine<F>(&mut self, eval: &F) -> Result<()>
    where
        F: Fn(f64) -> Result<Vec<f64>> + Sync,
    {
        let n = 1usize << (self.level + 1);
        let odd: Vec<f64> = (0..n / 2).map(|i| (2 * i + 1) as f64 / n as f64).collect();
        let new_vals = eval_points(eval, self.k, odd)?;
        let k = self.k;
        let old_rows = self.dyadic.len() / k;
        let mut merged = Vec::with_capacity((old_rows + n / 2) * k);
        for i in 0..old_rows {
            merged.extend_from_slice(&self.dyadic[i * k..(i + 1) * k]);
            if i < n / 2 {
                merged.extend_from_slice(&new_vals[i * k..(i + 1) * k]);
            }
        }
        self.dyadic = merged;
        self.level += 1;
        Ok(())
    }

    fn size(&self) -> usize {
        self.dyadic.len() / self.k + self.extra.len()
    }

    fn variations(&self) -> Vec<f64> {
        let k = self.k;
        if self.extra.is_empty() {
            return (0..k)
                .map(|c| variation_of_column(&self.dyadic, k, c, self.periodic))
                .collect();
        }
        let n = 1usize << self.level;
        let rows = self.dyadic.len() / k;
        let mut table = Vec::with_capacity((rows + self.extra.len()) * k);
        let mut e = 0;
        for i in 0..rows {
            let x = i as f64 / n as f64;
            while e < self.extra.len() && self.extra[e].0 < x {
                table.extend_from_slice(&self.extra[e].1);
                e += 1;
            }
            table.extend_from_slice(&self.dyadic[i * k..(i + 1) * k]);
        }
        while e < self.extra.len() {
            table.extend_from_slice(&self.extra[e].1);
            e += 1;
        }
        (0..k)
            .map(|c| variation_of_column(&table, k, c, self.periodic))
            .collect()
    }
}

fn eval_points<F>(eval: &F, k: usize, pts: Vec<f64>) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let rows: Vec<Result<Vec<f64>>> = pts.par_iter().map(|&x| eval(x)).collect();
    let mut out = Vec::with_capacity(pts.len() * k);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Refined total variation of each component of a vector-valued function.
pub fn refine_variation<F>(
    eval: F,
    k: usize,
    periodic: bool,
    schedule: &RefinementSchedule,
) -> Result<Vec<PartitionEstimate>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    schedule.validate()?;
    let mut part = NestedPartition::new(&eval, k, periodic, schedule.min_level, &schedule.extra_points)?;
    let mut est: Vec<PartitionEstimate> = part
        .variations()
        .into_iter()
        .map(|v| PartitionEstimate {
            value: v,
            partition_size: part.size(),
            history: vec![(part.size(), v)],
            converged: false,
            rel_change: f64::INFINITY,
        })
        .collect();
    while part.level < schedule.max_level && est.iter().any(|e| !e.converged) {
        part.refine(&eval)?;
        let size = part.size();
        for (e, v) in est.iter_mut().zip(part.variations()) {
            let prev = e.value;
            e.rel_change = if v == prev {
                0.0
            } else {
                (v - prev).abs() / v.abs().max(f64::MIN_POSITIVE)
            };
            e.value = v;
            e.partition_size = size;
            e.history.push((size, v));
            e.converged = e.rel_change < schedule.rel_tol;
        }
    }
    Ok(est)
}

/// Total variation of a scalar function on the circle (`periodic`) or on `[0, 1]`.
pub fn total_variation_fn<F>(g: F, periodic: bool, schedule: &RefinementSchedule) -> Result<PartitionEstimate>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut v = refine_variation(|x| g(x).map(|y| vec![y]), 1, periodic, schedule)?;
    Ok(v.remove(0))
}

/// `var(log Df)`.
pub fn total_variation_log_deriv<M: OrbitMap + ?Sized>(
    f: &M,
    schedule: &RefinementSchedule,
) -> Result<PartitionEstimate> {
    var_log_deriv_iterate(f, 1, schedule)
}

/// `var(log Dfⁿ)` by orbit accumulation.
pub fn var_log_deriv_iterate<M: OrbitMap + ?Sized>(
    f: &M,
    n: usize,
    schedule: &RefinementSchedule,
) -> Result<PartitionEstimate> {
    let mut v = var_log_deriv_multi(f, &[n], schedule)?;
    Ok(v.remove(0))
}

/// `var(log Dfⁿ)` for each `n` in an ascending list, sharing orbits.
pub fn var_log_deriv_multi<M: OrbitMap + ?Sized>(
    f: &M,
    ns: &[usize],
    schedule: &RefinementSchedule,
) -> Result<Vec<PartitionEstimate>> {
    check_ns(ns)?;
    let cells = f.cell_points(*ns.last().unwrap());
    if cells.is_empty() {
        return refine_variation(|x| log_deriv_iterates(f, x, ns), ns.len(), f.periodic(), schedule);
    }
    let mut schedule = schedule.clone();
    schedule.extra_points.extend(cells);
    refine_variation(|x| log_deriv_iterates(f, x, ns), ns.len(), f.periodic(), &schedule)
}

/// `var(log Dfⁿ)` for every `n = 1..=n_max` on one fixed dyadic partition of
/// `2^level` points. Each entry is a lower bound.
pub fn var_log_deriv_table<M: OrbitMap + ?Sized>(f: &M, n_max: usize, level: u32) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let ns: Vec<usize> = (1..=n_max).collect();
    let schedule = RefinementSchedule {
        min_level: level,
        max_level: level,
        rel_tol: 1.0,
        extra_points: Vec::new(),
    };
    Ok(var_log_deriv_multi(f, &ns, &schedule)?
        .into_iter()
        .map(|e| e.value)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::FourierDiffeo;
    use crate::numeric::TAU;

    #[test]
    fn rotation_has_zero_variation() {
        let e = total_variation_log_deriv(&CircleMap::Rotation(0.3), &RefinementSchedule::default()).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.converged);
        assert_eq!(e.history.len(), 2);
    }

    #[test]
    fn known_function_variation() {
        // var of sin 2πx on the circle is 4
        let s = RefinementSchedule::default();
        let e = total_variation_fn(|x| Ok((TAU * x).sin()), true, &s).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
        // x² on [0, 1] has variation 1
        let e = total_variation_fn(|x| Ok(x * x), false, &s).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_is_monotone() {
        let f: CircleMap = FourierDiffeo::new(0.2, vec![(0.03, 0.05), (0.01, 0.0)]).unwrap().into();
        let s = RefinementSchedule {
            min_level: 4,
            max_level: 14,
            rel_tol: 1e-14,
            extra_points: vec![0.123, 0.777],
        };
        let e = var_log_deriv_iterate(&f, 3, &s).unwrap();
        for w in e.history.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12);
        }
    }

    #[test]
    fn extra_points_capture_narrow_features() {
        // a spike narrower than the coarse grid
        let g = |x: f64| Ok((-((x - 0.3001) / 1e-5).powi(2)).exp());
        let plain = RefinementSchedule {
            min_level: 6,
            max_level: 6,
            rel_tol: 1.0,
            extra_points: vec![],
        };
        let with = plain.clone().with_extra_points(vec![0.3001]);
        assert!(total_variation_fn(g, true, &plain).unwrap().value < 1e-6);
        assert!((total_variation_fn(g, true, &with).unwrap().value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn table_matches_refined_values_on_a_fixed_partition() {
        let f: CircleMap = FourierDiffeo::new(0.31, vec![(0.02, 0.01)]).unwrap().into();
        let t = var_log_deriv_table(&f, 5, 10).unwrap();
        let s = RefinementSchedule {
            min_level: 10,
            max_level: 10,
            rel_tol: 1.0,
            extra_points: vec![],
        };
        for n in 1..=5 {
            let e = var_log_deriv_iterate(&f, n, &s).unwrap();
            assert_eq!(e.value, t[n - 1]);
        }
    }

    #[test]
    fn schedule_validation() {
        let bad = RefinementSchedule {
            min_level: 9,
            max_level: 8,
            ..Default::default()
        };
        assert!(total_variation_fn(Ok, true, &bad).is_err());
        assert!(var_log_deriv_multi(&CircleMap::Rotation(0.1), &[2, 1], &RefinementSchedule::default()).is_err());
    }
}
