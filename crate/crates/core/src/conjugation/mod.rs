//! Explicit conjugators built from Birkhoff-type averages of the derivative
//! cocycle, and builders for the worked examples.

mod builders;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::distortion::{total_variation_fn, PartitionEstimate, Proximity, RefinementSchedule};
use crate::error::{Error, Result};
use crate::map::{CircleMap, Jet, Order, SampledDiffeo};
use crate::numeric::{circle_dist, cumulative_periodic, frac};

pub use builders::{
    parabolic_bump_pair, cantor_weighted_map, ParabolicBumpPair, ParabolicBumpSpec, CantorWeightSpec,
};

/// Default sample count for conjugators.
pub const DEFAULT_GRID: usize = 4096;
/// Largest box `|B(n-1)| = n^k` accepted by [`box_conjugator`].
pub const BOX_BUDGET: usize = 1_000_000;
/// Tolerance of the sampled commutativity check.
pub const COMMUTE_TOL: f64 = 1e-8;
/// Herman averages with a derivative below this are flagged.
pub const HERMAN_DEGENERATE: f64 = 1e-9;

/// `h ∘ f ∘ h⁻¹` as a composite map.
pub fn conjugate(h: &CircleMap, f: &CircleMap) -> CircleMap {
    CircleMap::conjugate(h, f)
}

/// `u(t) = t / (1 - t)`.
pub fn default_schedule(t: f64) -> f64 {
    t / (1.0 - t)
}

/// Samples of `ψ_n = (1/n) Σ_{k<n} D²fᵏ/Dfᵏ` on `i / grid`, `i = 0..=grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiField {
    pub n: usize,
    pub samples: Vec<f64>,
}

impl PsiField {
    pub fn zero(grid: usize) -> Self {
        Self {
            n: 0,
            samples: vec![0.0; grid + 1],
        }
    }

    pub fn grid(&self) -> usize {
        self.samples.len() - 1
    }

    /// Periodic trapezoid mean.
    pub fn mean(&self) -> f64 {
        let g = self.grid();
        self.samples[..g].iter().sum::<f64>() / g as f64
    }
}

/// Per grid point and per requested `n`: `(1/n) Σ_{k<n} log Dfᵏ` and `ψ_n`.
struct BirkhoffRows {
    log_mean: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::Domain(format!("grid must have at least 2 cells, got {grid}")));
    }
    Ok(())
}

fn step_cocycle(f: &CircleMap, x: f64, log_d: f64, affine: f64) -> Result<(f64, f64, f64)> {
    let j = f.jet(x, Order::Affine)?;
    Ok((frac(j.lift), log_d + j.deriv.ln(), affine + j.affine * log_d.exp()))
}

fn birkhoff_rows(f: &CircleMap, ns: &[usize], grid: usize) -> Result<BirkhoffRows> {
    check_grid(grid)?;
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("n values must be positive and strictly increasing".into()));
    }
    let n_max = *ns.last().unwrap();
    let rows: Vec<Result<Vec<(f64, f64)>>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut x = i as f64 / grid as f64;
            let (mut log_d, mut affine) = (0.0, 0.0);
            let (mut sum_l, mut sum_a) = (0.0, 0.0);
            let mut out = Vec::with_capacity(ns.len());
            let mut next = 0;
            for k in 0..n_max {
                sum_l += log_d;
                sum_a += affine;
                if k + 1 == ns[next] {
                    out.push((sum_l / ns[next] as f64, sum_a / ns[next] as f64));
                    next += 1;
                    if next == ns.len() {
                        break;
                    }
                }
                (x, log_d, affine) = step_cocycle(f, x, log_d, affine).map_err(|e| e.at_step(k))?;
            }
            Ok(out)
        })
        .collect();
    let mut log_mean = vec![Vec::with_capacity(grid + 1); ns.len()];
    let mut psi = vec![Vec::with_capacity(grid + 1); ns.len()];
    for r in rows {
        for (j, (l, a)) in r?.into_iter().enumerate() {
            log_mean[j].push(l);
            psi[j].push(a);
        }
    }
    for v in log_mean.iter_mut().chain(psi.iter_mut()) {
        v.push(v[0]);
    }
    Ok(BirkhoffRows { log_mean, psi })
}

/// `ψ_n` by accumulating the affine-derivative cocycle along orbits.
pub fn birkhoff_psi(f: &CircleMap, n: usize, grid: usize) -> Result<PsiField> {
    Ok(birkhoff_psi_multi(f, &[n], grid)?.remove(0))
}

/// `ψ_n` for each `n` of a strictly increasing list, sharing orbits.
pub fn birkhoff_psi_multi(f: &CircleMap, ns: &[usize], grid: usize) -> Result<Vec<PsiField>> {
    let rows = birkhoff_rows(f, ns, grid)?;
    Ok(ns
        .iter()
        .zip(rows.psi)
        .map(|(&n, samples)| PsiField { n, samples })
        .collect())
}

/// `Dh_n ∝ (Π_{k<n} Dfᵏ)^{1/n}`, normalized with `h_n(0) = 0`.
pub fn geometric_mean_conjugator(f: &CircleMap, n: usize, grid: usize) -> Result<SampledDiffeo> {
    let rows = birkhoff_rows(f, &[n], grid)?;
    SampledDiffeo::from_log_derivative(&rows.log_mean[0], &rows.psi[0])
}

/// Same conjugator with `log Dh_n` rebuilt as the cumulative integral of `ψ_n`.
pub fn geometric_mean_conjugator_from_psi(f: &CircleMap, n: usize, grid: usize) -> Result<SampledDiffeo> {
    conjugator_from_psi(&birkhoff_psi(f, n, grid)?.samples)
}

/// `h` with `D log Dh = ψ`, `h(0) = 0`, `h(1) = 1`.
pub fn conjugator_from_psi(psi: &[f64]) -> Result<SampledDiffeo> {
    if psi.len() < 3 {
        return Err(Error::Domain("need at least 3 samples".into()));
    }
    let grid = psi.len() - 1;
    let log_d = cumulative_periodic(&psi[..grid], 1.0 / grid as f64);
    SampledDiffeo::from_log_derivative(&log_d, psi)
}

/// The path `g_t` built from `ψᵗ = (n+1-u)ψ_n + (u-n)ψ_{n+1}`, `n = ⌊u(t)⌋`,
/// with `ψ_0 = 0`, so that `g_0` is the identity.
pub fn linearizing_path<U>(f: &CircleMap, t: f64, u: U, grid: usize) -> Result<SampledDiffeo>
where
    U: Fn(f64) -> f64,
{
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("path parameter {t} outside [0, 1)")));
    }
    let s = u(t);
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("schedule value u({t}) = {s} is not a finite nonnegative number")));
    }
    check_grid(grid)?;
    let n = s.floor() as usize;
    let w = s - n as f64;
    let (lo, hi) = if n == 0 {
        (PsiField::zero(grid), birkhoff_psi(f, 1, grid)?)
    } else {
        let mut v = birkhoff_psi_multi(f, &[n, n + 1], grid)?;
        let hi = v.pop().unwrap();
        (v.pop().unwrap(), hi)
    };
    let psi: Vec<f64> = lo
        .samples
        .iter()
        .zip(hi.samples.iter())
        .map(|(a, b)| (1.0 - w) * a + w * b)
        .collect();
    conjugator_from_psi(&psi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermanConjugator {
    pub map: SampledDiffeo,
    pub min_deriv: f64,
    /// `min Dh < 1e-9`: the average is not a usable diffeomorphism.
    pub degenerate: bool,
}

/// `h*_n = (1/n) Σ_{k<n} (Fᵏ - kρ)`, shifted so that `h*_n(0) = 0`.
pub fn herman_conjugator(f: &CircleMap, n: usize, rho: f64, grid: usize) -> Result<HermanConjugator> {
    check_grid(grid)?;
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !f.is_smooth() {
        return Err(Error::Unsupported {
            op: "herman_conjugator",
            variant: f.variant_name(),
        });
    }
    let rows: Vec<Result<(f64, f64, f64)>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x0 = i as f64 / grid as f64;
            let (mut x, mut lift) = (x0, x0);
            let (mut d, mut affine) = (1.0, 0.0);
            let (mut sv, mut sd, mut sdd) = (0.0, 0.0, 0.0);
            for k in 0..n {
                sv += lift - k as f64 * rho;
                sd += d;
                sdd += d * affine;
                if k + 1 == n {
                    break;
                }
                let j = f.jet(x, Order::Affine).map_err(|e| e.at_step(k))?;
                affine += j.affine * d;
                d *= j.deriv;
                lift += j.lift - x;
                x = frac(j.lift);
            }
            let nf = n as f64;
            Ok((sv / nf, sd / nf, sdd / sd))
        })
        .collect();
    let mut values = Vec::with_capacity(grid + 1);
    let mut dvalues = Vec::with_capacity(grid + 1);
    let mut affine = Vec::with_capacity(grid + 1);
    for r in rows {
        let (v, d, a) = r?;
        values.push(v);
        dvalues.push(d);
        affine.push(a);
    }
    let base = values[0];
    for v in values.iter_mut() {
        *v -= base;
    }
    values.push(1.0);
    dvalues.push(dvalues[0]);
    affine.push(affine[0]);
    let min_deriv = dvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(HermanConjugator {
        map: SampledDiffeo::from_parts(values, dvalues, affine)?,
        min_deriv,
        degenerate: min_deriv < HERMAN_DEGENERATE,
    })
}

/// `sup_x d(h(f(x)), h(x) + ρ)` over `points` uniform points.
pub fn c0_defect(h: &CircleMap, f: &CircleMap, rho: f64, points: usize) -> Result<f64> {
    let rows: Vec<Result<f64>> = (0..points)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / points as f64;
            Ok(circle_dist(h.lift(f.lift(x)?)?, h.lift(x)? + rho))
        })
        .collect();
    rows.into_iter().try_fold(0.0f64, |m, r| Ok(m.max(r?)))
}

/// Largest `|g_i g_j(x) - g_j g_i(x)|` over pairs and `points` sample points,
/// with the worst point.
pub fn commutation_defect(gens: &[CircleMap], points: usize) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            for p in 0..points {
                let x = (p as f64 + 0.5) / points as f64;
                let a = gens[i].lift(gens[j].lift(x)?)?;
                let b = gens[j].lift(gens[i].lift(x)?)?;
                let d = (a - b).abs();
                if d > worst.0 {
                    worst = (d, x);
                }
            }
        }
    }
    Ok(worst)
}

fn box_sums(gens: &[CircleMap], level: usize, n: usize, x: f64, log_d: f64, affine: f64, acc: &mut (f64, f64)) -> Result<()> {
    if level == 0 {
        acc.0 += log_d;
        acc.1 += affine;
        return Ok(());
    }
    let g = &gens[level - 1];
    let (mut x, mut log_d, mut affine) = (x, log_d, affine);
    for m in 0..n {
        box_sums(gens, level - 1, n, x, log_d, affine, acc)?;
        if m + 1 < n {
            (x, log_d, affine) = step_cocycle(g, x, log_d, affine)?;
        }
    }
    Ok(())
}

/// `Dh_n ∝ (Π_{g ∈ B(n-1)} Dg)^{1/|B(n-1)|}` over the box
/// `B(n-1) = {g_1^{n_1} ⋯ g_k^{n_k} : 0 ≤ n_i < n}` of commuting generators.
pub fn box_conjugator(gens: &[CircleMap], n: usize, grid: usize) -> Result<SampledDiffeo> {
    check_grid(grid)?;
    if gens.is_empty() || n == 0 {
        return Err(Error::Domain("need at least one generator and n >= 1".into()));
    }
    let size = (n as u128).checked_pow(gens.len() as u32).unwrap_or(u128::MAX);
    if size > BOX_BUDGET as u128 {
        return Err(Error::ResourceCap {
            what: "box elements",
            requested: size.min(usize::MAX as u128) as usize,
            cap: BOX_BUDGET,
        });
    }
    let (defect, x) = commutation_defect(gens, 64)?;
    if defect > COMMUTE_TOL {
        return Err(Error::NotCommuting { defect, x });
    }
    let size = size as f64;
    let rows: Vec<Result<(f64, f64)>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut acc = (0.0, 0.0);
            box_sums(gens, gens.len(), n, i as f64 / grid as f64, 0.0, 0.0, &mut acc)?;
            Ok((acc.0 / size, acc.1 / size))
        })
        .collect();
    let mut log_d = Vec::with_capacity(grid + 1);
    let mut psi = Vec::with_capacity(grid + 1);
    for r in rows {
        let (l, a) = r?;
        log_d.push(l);
        psi.push(a);
    }
    log_d.push(log_d[0]);
    psi.push(psi[0]);
    SampledDiffeo::from_log_derivative(&log_d, &psi)
}

/// Jet of `h f h⁻¹` at `z = h(y)`, computed from jets of `h` and `f` at `y`
/// (no inversion needed). Returns `(z, jet)`.
pub fn pullback_jet(h: &CircleMap, f: &CircleMap, y: f64, order: Order) -> Result<(f64, Jet)> {
    let jf = f.jet(y, order)?;
    let jh0 = h.jet(y, order)?;
    let jh1 = h.jet(jf.lift, order)?;
    Ok((
        jh0.lift,
        Jet {
            lift: jh1.lift,
            deriv: jh1.deriv * jf.deriv / jh0.deriv,
            affine: (jh1.affine * jf.deriv + jf.affine - jh0.affine) / jh0.deriv,
        },
    ))
}

/// [`rotation_proximity`](crate::distortion::rotation_proximity) of
/// `h f h⁻¹`, sampled in the source coordinate `y` (the total variation is
/// unchanged by the reparametrization `z = h(y)`).
pub fn conjugate_proximity(
    h: &CircleMap,
    f: &CircleMap,
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
            let (z, j) = pullback_jet(h, f, i as f64 / sup_points as f64, Order::RightDeriv)?;
            Ok((circle_dist(j.lift, z + rho), j.deriv.ln().abs()))
        })
        .collect();
    let (mut c0, mut dlog) = (0.0f64, 0.0f64);
    for r in rows {
        let (a, b) = r?;
        c0 = c0.max(a);
        dlog = dlog.max(b);
    }
    let var = conjugate_log_deriv_variation(h, f, schedule)?;
    Ok(Proximity { c0, dlog, var })
}

/// `var(log D(h f h⁻¹))`.
pub fn conjugate_log_deriv_variation(
    h: &CircleMap,
    f: &CircleMap,
    schedule: &RefinementSchedule,
) -> Result<PartitionEstimate> {
    total_variation_fn(
        |y| Ok(pullback_jet(h, f, y, Order::RightDeriv)?.1.deriv.ln()),
        true,
        schedule,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineDecayRow {
    pub n: usize,
    /// `sup |D²(h_n g h_n⁻¹) / D(h_n g h_n⁻¹)|` per generator.
    pub sup_affine: Vec<f64>,
    pub max: f64,
}

/// Sup over `points` sample points of the affine derivative of each
/// box-conjugated generator, for each `n`.
pub fn box_affine_decay(gens: &[CircleMap], ns: &[usize], grid: usize, points: usize) -> Result<Vec<AffineDecayRow>> {
    if points == 0 {
        return Err(Error::Domain("need at least one sample point".into()));
    }
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let h = CircleMap::Sampled(Arc::new(box_conjugator(gens, n, grid)?));
        let mut sup_affine = Vec::with_capacity(gens.len());
        for g in gens {
            let rows: Vec<Result<f64>> = (0..points)
                .into_par_iter()
                .map(|i| Ok(pullback_jet(&h, g, i as f64 / points as f64, Order::Affine)?.1.affine.abs()))
                .collect();
            sup_affine.push(rows.into_iter().try_fold(0.0f64, |m, r| Ok::<_, Error>(m.max(r?)))?);
        }
        let max = sup_affine.iter().cloned().fold(0.0, f64::max);
        out.push(AffineDecayRow { n, sup_affine, max });
    }
    Ok(out)
}
