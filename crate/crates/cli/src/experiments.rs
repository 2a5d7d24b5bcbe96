use bvlab::conjugation::{
    box_affine_decay, box_conjugator, cantor_weighted_map, conjugate_log_deriv_variation, parabolic_bump_pair,
};
use bvlab::distortion::{geometric_grid, mather_lower_bound, partition_series, total_variation_log_deriv};
use bvlab::map::CircleMap;
use bvlab::mobius::MobiusMap;
use bvlab::pa::{minakawa_predicate, orbit_class_sum, pa_complete_jump, pa_var_sequence, DEFAULT_BREAKPOINT_CAP};
use clap::ValueEnum;
use serde_json::json;
use std::sync::Arc;

use crate::commands::{real, summary, Outcome};
use crate::config::{
    caps, check_cap, check_positive, parse, BoxDecayConfig, MatherConfig, MobiusTableConfig, PaJumpConfig,
    ParabolicBumpConfig,
};
use crate::failure::Failure;
use crate::record::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Parabolic interval map with a derivative bump: lower bound δ/2.
    ParabolicBump,
    /// Cantor-weighted derivative keeps `var/n` away from 0.
    Mather,
    /// Disk-map variation against `4 log((1+r)/(1-r))`.
    MobiusTable,
    /// Complete jumps along breakpoint orbits of a PA map.
    PaJump,
    /// Affine derivative and variation of box conjugates of commuting maps.
    BoxDecay,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ParabolicBump => "parabolic-bump",
            Experiment::Mather => "mather",
            Experiment::MobiusTable => "mobius-table",
            Experiment::PaJump => "pa-jump",
            Experiment::BoxDecay => "box-decay",
        }
    }

    /// The config shipped in `configs/`.
    pub fn canonical_config(self) -> &'static str {
        match self {
            Experiment::ParabolicBump => include_str!("../configs/parabolic-bump.json"),
            Experiment::Mather => include_str!("../configs/mather.json"),
            Experiment::MobiusTable => include_str!("../configs/mobius-table.json"),
            Experiment::PaJump => include_str!("../configs/pa-jump.json"),
            Experiment::BoxDecay => include_str!("../configs/box-decay.json"),
        }
    }
}

/// A parsed experiment config, kept for hashing.
pub enum ExperimentConfig {
    ParabolicBump(ParabolicBumpConfig),
    Mather(MatherConfig),
    MobiusTable(MobiusTableConfig),
    PaJump(PaJumpConfig),
    BoxDecay(BoxDecayConfig),
}

impl ExperimentConfig {
    pub fn parse(which: Experiment, text: &str, origin: &str) -> Result<Self, Failure> {
        Ok(match which {
            Experiment::ParabolicBump => ExperimentConfig::ParabolicBump(parse(text, origin)?),
            Experiment::Mather => ExperimentConfig::Mather(parse(text, origin)?),
            Experiment::MobiusTable => ExperimentConfig::MobiusTable(parse(text, origin)?),
            Experiment::PaJump => ExperimentConfig::PaJump(parse(text, origin)?),
            Experiment::BoxDecay => ExperimentConfig::BoxDecay(parse(text, origin)?),
        })
    }

    pub fn experiment_id(&self) -> &str {
        match self {
            ExperimentConfig::ParabolicBump(c) => &c.experiment,
            ExperimentConfig::Mather(c) => &c.experiment,
            ExperimentConfig::MobiusTable(c) => &c.experiment,
            ExperimentConfig::PaJump(c) => &c.experiment,
            ExperimentConfig::BoxDecay(c) => &c.experiment,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ExperimentConfig::ParabolicBump(c) => json!(c),
            ExperimentConfig::Mather(c) => json!(c),
            ExperimentConfig::MobiusTable(c) => json!(c),
            ExperimentConfig::PaJump(c) => json!(c),
            ExperimentConfig::BoxDecay(c) => json!(c),
        }
    }

    pub fn run(&self) -> Result<Outcome, Failure> {
        match self {
            ExperimentConfig::ParabolicBump(c) => parabolic_bump(c),
            ExperimentConfig::Mather(c) => mather(c),
            ExperimentConfig::MobiusTable(c) => mobius_table(c),
            ExperimentConfig::PaJump(c) => pa_jump(c),
            ExperimentConfig::BoxDecay(c) => box_decay(c),
        }
    }
}

/// Boundary map of `rotation(phi) ∘ diag(k, 1/k)`, which sends the origin of
/// the disk to a point of modulus `r`.
fn disk_map(r: f64, phi: f64) -> Result<MobiusMap, Failure> {
    if !(0.0..1.0).contains(&r) {
        return Err(Failure::config(format!("field `radii`: {r} outside [0, 1)")));
    }
    let k = ((1.0 + r) / (1.0 - r)).sqrt();
    Ok(MobiusMap::rotation_matrix(phi).compose(&MobiusMap::new([[k, 0.0], [0.0, 1.0 / k]])?))
}

fn mobius_table(cfg: &MobiusTableConfig) -> Result<Outcome, Failure> {
    let schedule = cfg.schedule.build()?;
    let mut t = Table::new(&["r", "closed_form", "numeric_tv", "rel_err", "certified"]);
    let mut worst = 0.0f64;
    let mut converged = true;
    for (i, &r) in cfg.radii.iter().enumerate() {
        let m = disk_map(r, 0.37 * (i + 1) as f64)?;
        let closed = 4.0 * ((1.0 + r) / (1.0 - r)).ln();
        let est = total_variation_log_deriv(&CircleMap::Mobius(m), &schedule)?;
        let rel = if closed > 0.0 { (est.value / closed - 1.0).abs() } else { est.value };
        worst = worst.max(rel);
        converged &= est.converged;
        t.push(vec![r.into(), closed.into(), est.value.into(), rel.into(), est.converged.into()]);
    }
    Ok(Outcome::new(t, summary(&[("max_rel_err", real(worst))]), converged))
}

fn parabolic_bump(cfg: &ParabolicBumpConfig) -> Result<Outcome, Failure> {
    check_cap("n_max", cfg.n_max, caps::DISTORTION_N)?;
    check_positive("n_max", cfg.n_max)?;
    let schedule = cfg.schedule.build()?;
    let pair = parabolic_bump_pair(&cfg.bump)?;
    let ns = geometric_grid(cfg.n_max);
    let modified = partition_series(&pair.f, &ns, &schedule)?;
    let plain = partition_series(&pair.fhat, &ns, &schedule)?;
    let bound = pair.delta / 2.0;
    let mut t = Table::new(&["n", "var_over_n", "unmodified_var_over_n", "lower_bound", "certified"]);
    for i in 0..ns.len() {
        t.push(vec![
            ns[i].into(),
            modified.per_n[i].into(),
            plain.per_n[i].into(),
            bound.into(),
            (modified.certified[i] && plain.certified[i]).into(),
        ]);
    }
    let s = summary(&[
        ("delta", real(pair.delta)),
        ("fekete_estimate", real(modified.fekete_estimate)),
        ("unmodified_last_var_over_n", real(plain.last_per_n())),
    ]);
    let converged = modified.all_certified() && plain.all_certified();
    Ok(Outcome::new(t, s, converged))
}

fn mather(cfg: &MatherConfig) -> Result<Outcome, Failure> {
    check_cap("n_max", cfg.n_max, caps::DISTORTION_N)?;
    check_positive("n_max", cfg.n_max)?;
    let schedule = cfg.schedule.build()?;
    let weighted = cantor_weighted_map(&cfg.weighted)?;
    let control = cantor_weighted_map(&cfg.control)?;
    let ns = geometric_grid(cfg.n_max);
    let w = mather_lower_bound(&weighted, &ns, &schedule, cfg.gap_depth)?;
    let c = partition_series(&control, &ns, &schedule)?;
    let mut t = Table::new(&["n", "weighted_var_over_n", "control_var_over_n", "certified"]);
    for i in 0..ns.len() {
        t.push(vec![
            ns[i].into(),
            w.per_n[i].into(),
            c.per_n[i].into(),
            (w.certified[i] && c.certified[i]).into(),
        ]);
    }
    let s = summary(&[
        ("weighted_min_var_over_n", real(w.fekete_estimate)),
        ("control_last_var_over_n", real(c.last_per_n())),
        ("weight", real(cfg.weighted.weight)),
    ]);
    let converged = w.all_certified() && c.all_certified();
    Ok(Outcome::new(t, s, converged))
}

fn pa_jump(cfg: &PaJumpConfig) -> Result<Outcome, Failure> {
    check_positive("horizon", cfg.horizon)?;
    check_cap("horizon", cfg.horizon, caps::HORIZON)?;
    check_positive("n_max", cfg.n_max)?;
    check_cap("n_max", cfg.n_max, caps::DISTORTION_N)?;
    let f = match cfg.map.build()? {
        CircleMap::Pa(p) => p.exact.clone(),
        other => {
            return Err(Failure::config(format!(
                "field `map`: pa-jump needs a piecewise-affine map, got {}",
                other.variant_name()
            )))
        }
    };
    let mut t = Table::new(&["breakpoint", "jump", "complete_jump", "log_complete_jump", "certified"]);
    let mut converged = true;
    for b in f.breakpoints() {
        let r = pa_complete_jump(&f, b, cfg.horizon)?;
        converged &= r.certified;
        t.push(vec![
            r.point.into(),
            r.jump.into(),
            r.complete_jump.into(),
            r.log_complete_jump.into(),
            r.certified.into(),
        ]);
    }
    let report = minakawa_predicate(&f, cfg.horizon)?;
    let seq = pa_var_sequence(&f, cfg.n_max, DEFAULT_BREAKPOINT_CAP)?;
    let s = summary(&[
        ("limit_estimate", real(orbit_class_sum(&report))),
        ("var_over_n_at_n_max", real(seq.last_per_n())),
        ("n_max", json!(cfg.n_max)),
        ("minakawa_holds", json!(report.holds)),
        ("orbit_classes", json!(report.classes.len())),
    ]);
    Ok(Outcome::new(t, s, converged && report.certified))
}

fn box_decay(cfg: &BoxDecayConfig) -> Result<Outcome, Failure> {
    if cfg.maps.is_empty() || cfg.ns.is_empty() {
        return Err(Failure::config("fields `maps` and `ns` must not be empty"));
    }
    check_cap("grid", cfg.grid, caps::GRID)?;
    check_cap("points", cfg.points, caps::SUP_POINTS)?;
    check_positive("points", cfg.points)?;
    let schedule = cfg.schedule.build()?;
    let gens: Vec<CircleMap> = cfg.maps.iter().map(|m| m.build()).collect::<Result<_, _>>()?;
    let rows = box_affine_decay(&gens, &cfg.ns, cfg.grid, cfg.points)?;
    let mut t = Table::new(&["n", "max_sup_affine", "max_var", "certified"]);
    let mut converged = true;
    for row in &rows {
        let h = CircleMap::Sampled(Arc::new(box_conjugator(&gens, row.n, cfg.grid)?));
        let mut max_var = 0.0f64;
        let mut ok = true;
        for g in &gens {
            let v = conjugate_log_deriv_variation(&h, g, &schedule)?;
            max_var = max_var.max(v.value);
            ok &= v.converged;
        }
        converged &= ok;
        t.push(vec![row.n.into(), row.max.into(), max_var.into(), ok.into()]);
    }
    let decreasing = rows.windows(2).all(|w| w[1].max < w[0].max);
    Ok(Outcome::new(t, summary(&[("affine_decreasing", json!(decreasing))]), converged))
}
