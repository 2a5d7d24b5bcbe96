use std::sync::Arc;
use std::time::Instant;

use bvlab::conjugation::{
    box_conjugator, c0_defect, conjugate_proximity, default_schedule, geometric_mean_conjugator,
    herman_conjugator, linearizing_path,
};
use bvlab::distortion::{asymptotic_distortion, geometric_grid, partition_series, Proximity};
use bvlab::map::{CircleMap, SampledDiffeo};
use bvlab::numeric::circle_dist;
use bvlab::{DistortionSeries, SeriesSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::{caps, check_cap, check_positive, ApproximateConfig, CheckConfig, DistortionConfig, RotnoConfig, Scheme};
use crate::failure::Failure;
use crate::record::{Cell, Table};

/// What a command produced. `failure` is set when the table is partial or
/// uncertified; the outputs are still written.
pub struct Outcome {
    pub table: Table,
    pub summary: Map<String, Value>,
    pub converged: bool,
    pub failure: Option<Failure>,
}

impl Outcome {
    pub fn new(table: Table, summary: Map<String, Value>, converged: bool) -> Self {
        let failure = (!converged).then(|| Failure::numeric("some entries did not converge; see the certified column"));
        Self {
            table,
            summary,
            converged,
            failure,
        }
    }
}

pub fn summary(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Non-finite reals become JSON null.
pub fn real(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn rotno(cfg: &RotnoConfig) -> Result<Outcome, Failure> {
    check_positive("n_max", cfg.n_max)?;
    check_cap("n_max", cfg.n_max, caps::ROTNO_N)?;
    let f = cfg.map.build()?;
    let mut t = Table::new(&["n", "estimate", "bound", "certified"]);
    let mut last = (f64::NAN, f64::NAN);
    for n in geometric_grid(cfg.n_max) {
        let (est, bound) = f.rotation_number(n)?;
        t.push(vec![n.into(), est.into(), bound.into(), true.into()]);
        last = (est, bound);
    }
    let s = summary(&[("estimate", real(last.0)), ("bound", real(last.1)), ("variant", json!(f.variant_name()))]);
    Ok(Outcome::new(t, s, true))
}

fn series_table(series: &DistortionSeries) -> Table {
    let mut t = Table::new(&["n", "var", "var_over_n", "fekete", "certified"]);
    let inf = series.running_infimum();
    for i in 0..series.n_values.len() {
        t.push(vec![
            series.n_values[i].into(),
            series.var_values[i].into(),
            series.per_n[i].into(),
            inf[i].into(),
            series.certified[i].into(),
        ]);
    }
    t
}

pub fn distortion(cfg: &DistortionConfig) -> Result<Outcome, Failure> {
    if cfg.n_max < 2 {
        return Err(Failure::config("field `n_max` must be at least 2"));
    }
    check_cap("n_max", cfg.n_max, caps::DISTORTION_N)?;
    check_cap("random_points", cfg.random_points, caps::RANDOM_POINTS)?;
    let f = cfg.map.build()?;
    let mut schedule = cfg.schedule.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    schedule
        .extra_points
        .extend((0..cfg.random_points).map(|_| rng.gen_range(0.0..1.0)));
    let exact = matches!(f, CircleMap::Mobius(_) | CircleMap::Pa(_));
    let mut budget_note = None;
    let series = match cfg.time_budget_s {
        Some(limit) if !exact => {
            let start = Instant::now();
            let (mut ns, mut vars, mut cert) = (Vec::new(), Vec::new(), Vec::new());
            for n in geometric_grid(cfg.n_max) {
                if !ns.is_empty() && start.elapsed().as_secs_f64() > limit {
                    budget_note = Some(format!("time budget of {limit} s exhausted before n = {n}"));
                    break;
                }
                let s = partition_series(&f, &[n], &schedule)?;
                ns.push(n);
                vars.push(s.var_values[0]);
                cert.push(s.certified[0]);
            }
            DistortionSeries::new(ns, vars, SeriesSource::Partition, cert)
        }
        _ => asymptotic_distortion(&f, cfg.n_max, &schedule)?,
    };
    let converged = series.all_certified() && budget_note.is_none();
    let s = summary(&[
        ("fekete_estimate", real(series.fekete_estimate)),
        ("last_var_over_n", real(series.last_per_n())),
        ("last_n", json!(series.n_values.last())),
        ("source", json!(series.source.as_str())),
    ]);
    let mut out = Outcome::new(series_table(&series), s, converged);
    if let Some(note) = budget_note {
        out.failure = Some(Failure::numeric(note));
    }
    Ok(out)
}

fn rotation_numbers(maps: &[CircleMap], given: &Option<Vec<f64>>) -> Result<(Vec<f64>, bool), Failure> {
    match given {
        Some(r) if r.len() == maps.len() => Ok((r.clone(), false)),
        Some(r) => Err(Failure::config(format!(
            "field `rho`: {} values for {} maps",
            r.len(),
            maps.len()
        ))),
        None => Ok((
            maps.iter()
                .map(|f| f.rotation_number(100_000).map(|r| r.0))
                .collect::<bvlab::Result<Vec<f64>>>()?,
            true,
        )),
    }
}

fn proximity_cells(p: &Proximity) -> Vec<Cell> {
    vec![p.c0.into(), p.dlog.into(), p.var.value.into(), p.var.converged.into()]
}

pub fn approximate(cfg: &ApproximateConfig) -> Result<Outcome, Failure> {
    if cfg.maps.is_empty() {
        return Err(Failure::config("field `maps` must not be empty"));
    }
    if cfg.scheme != Scheme::Box && cfg.maps.len() != 1 {
        return Err(Failure::config(format!(
            "field `maps`: scheme {:?} takes one map, got {}",
            cfg.scheme,
            cfg.maps.len()
        )));
    }
    check_cap("grid", cfg.grid, caps::GRID)?;
    check_cap("sup_points", cfg.sup_points, caps::SUP_POINTS)?;
    for &n in &cfg.ns {
        check_positive("ns", n)?;
        check_cap("ns", n, caps::APPROXIMATE_N)?;
    }
    let schedule = cfg.schedule.build()?;
    let maps: Vec<CircleMap> = cfg.maps.iter().map(|m| m.build()).collect::<Result<_, _>>()?;
    let (rho, estimated) = rotation_numbers(&maps, &cfg.rho)?;
    let f = &maps[0];
    let sampled = |h: SampledDiffeo| CircleMap::Sampled(Arc::new(h));
    let mut converged = true;
    let table = match cfg.scheme {
        Scheme::Path => {
            if cfg.t_values.is_empty() {
                return Err(Failure::config("field `t_values` must not be empty for the path scheme"));
            }
            let mut t = Table::new(&["t", "c0", "dlog", "var", "certified"]);
            for &tv in &cfg.t_values {
                if default_schedule(tv) > caps::APPROXIMATE_N as f64 {
                    return Err(Failure::cap(format!("t = {tv} needs averages beyond n = {}", caps::APPROXIMATE_N)));
                }
                let h = sampled(linearizing_path(f, tv, default_schedule, cfg.grid)?);
                let p = conjugate_proximity(&h, f, rho[0], &schedule, cfg.sup_points)?;
                converged &= p.var.converged;
                let mut row = vec![tv.into()];
                row.extend(proximity_cells(&p));
                t.push(row);
            }
            t
        }
        scheme => {
            if cfg.ns.is_empty() {
                return Err(Failure::config("field `ns` must not be empty"));
            }
            let mut t = Table::new(&["n", "c0", "dlog", "var", "certified"]);
            for &n in &cfg.ns {
                let row = match scheme {
                    Scheme::GeometricMean => {
                        let h = sampled(geometric_mean_conjugator(f, n, cfg.grid)?);
                        proximity_cells(&conjugate_proximity(&h, f, rho[0], &schedule, cfg.sup_points)?)
                    }
                    Scheme::Herman => {
                        let hc = herman_conjugator(f, n, rho[0], cfg.grid)?;
                        let h = sampled(hc.map);
                        if hc.degenerate {
                            // derivative of the average vanishes somewhere: C⁰ only
                            let c0 = c0_defect(&h, f, rho[0], cfg.sup_points)?;
                            vec![c0.into(), f64::NAN.into(), f64::NAN.into(), false.into()]
                        } else {
                            proximity_cells(&conjugate_proximity(&h, f, rho[0], &schedule, cfg.sup_points)?)
                        }
                    }
                    _ => {
                        let h = sampled(box_conjugator(&maps, n, cfg.grid)?);
                        let mut worst = [0.0f64; 3];
                        let mut ok = true;
                        for (g, r) in maps.iter().zip(rho.iter()) {
                            let p = conjugate_proximity(&h, g, *r, &schedule, cfg.sup_points)?;
                            worst[0] = worst[0].max(p.c0);
                            worst[1] = worst[1].max(p.dlog);
                            worst[2] = worst[2].max(p.var.value);
                            ok &= p.var.converged;
                        }
                        vec![worst[0].into(), worst[1].into(), worst[2].into(), ok.into()]
                    }
                };
                converged &= matches!(row[3], Cell::Flag(true));
                let mut full = vec![n.into()];
                full.extend(row);
                t.push(full);
            }
            t
        }
    };
    let s = summary(&[
        ("scheme", serde_json::to_value(cfg.scheme).unwrap_or(Value::Null)),
        ("rho", json!(rho.iter().map(|r| real(*r)).collect::<Vec<_>>())),
        ("rho_estimated", json!(estimated)),
    ]);
    Ok(Outcome::new(table, s, converged))
}

pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const DERIV_TOL: f64 = 1e-5;
pub const AFFINE_TOL: f64 = 1e-6;

/// Seeded random-point checks of round trips, derivatives and affine
/// derivatives against finite differences.
pub fn check(cfg: &CheckConfig) -> Result<Outcome, Failure> {
    check_positive("points", cfg.points)?;
    check_cap("points", cfg.points, caps::CHECK_POINTS)?;
    let f = cfg.map.build()?;
    let inv = CircleMap::inverse(f.clone());
    let smooth = f.is_smooth();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let mut t = Table::new(&["x", "round_trip", "deriv_rel", "affine_abs", "certified"]);
    let mut worst = [0.0f64; 3];
    let mut all = true;
    for _ in 0..cfg.points {
        let x: f64 = rng.gen_range(0.0..1.0);
        let round = circle_dist(inv.eval(f.eval(x)?)?, x);
        let h = 1e-6;
        let d = f.deriv(x)?;
        let fd = (f.lift(x + h)? - f.lift(x - h)?) / (2.0 * h);
        let deriv_rel = (fd - d).abs() / d;
        let affine = if smooth {
            let h = 1e-5;
            let fd = (f.deriv(x + h)?.ln() - f.deriv(x - h)?.ln()) / (2.0 * h);
            (fd - f.affine_deriv(x)?).abs()
        } else {
            f64::NAN
        };
        let ok = round <= ROUND_TRIP_TOL && deriv_rel <= DERIV_TOL && (!smooth || affine <= AFFINE_TOL);
        all &= ok;
        worst[0] = worst[0].max(round);
        worst[1] = worst[1].max(deriv_rel);
        if smooth {
            worst[2] = worst[2].max(affine);
        }
        t.push(vec![x.into(), round.into(), deriv_rel.into(), affine.into(), ok.into()]);
    }
    let s = summary(&[
        ("max_round_trip", real(worst[0])),
        ("max_deriv_rel", real(worst[1])),
        ("max_affine_abs", if smooth { real(worst[2]) } else { Value::Null }),
        ("all_passed", json!(all)),
    ]);
    Ok(Outcome::new(t, s, all))
}
