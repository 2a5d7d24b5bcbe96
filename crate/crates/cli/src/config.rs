use std::path::Path;
use std::sync::Arc;

use bvlab::conjugation::{CantorWeightSpec, ParabolicBumpSpec};
use bvlab::map::{CantorDiffeo, CircleMap, FourierDiffeo, SampledDiffeo};
use bvlab::mobius::MobiusMap;
use bvlab::pa::{two_interval_map, PaMap, PaRecord, Rational};
use bvlab::RefinementSchedule;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Hard caps on every knob. Configs beyond them fail with exit code 4.
pub mod caps {
    pub const ROTNO_N: usize = 10_000_000;
    pub const DISTORTION_N: usize = 5_000;
    pub const APPROXIMATE_N: usize = 2_000;
    pub const GRID: usize = 1 << 16;
    pub const SUP_POINTS: usize = 1 << 20;
    pub const MAX_LEVEL: u32 = 24;
    pub const RANDOM_POINTS: usize = 1 << 20;
    pub const CHECK_POINTS: usize = 100_000;
    pub const HORIZON: usize = 100_000;
    pub const MAP_DEPTH: usize = 16;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Rotation {
        angle: f64,
    },
    /// `F(x) = x + shift + Σ a_k cos 2πkx + b_k sin 2πkx`.
    Fourier {
        shift: f64,
        #[serde(default)]
        coefficients: Vec<[f64; 2]>,
    },
    Mobius {
        matrix: [[f64; 2]; 2],
    },
    /// Rationals as strings, e.g. `"1/3"`.
    Pa {
        records: Vec<PaRecord>,
    },
    TwoInterval {
        slope: String,
        breakpoint: String,
        at_zero: String,
    },
    Sampled {
        values: Vec<f64>,
        dvalues: Vec<f64>,
        affine: Vec<f64>,
    },
    Cantor {
        weight: f64,
        amplitude: f64,
        shift: f64,
        #[serde(default = "default_cantor_depth")]
        depth: u32,
    },
    /// `outer ∘ inner`.
    Compose {
        outer: Box<MapSpec>,
        inner: Box<MapSpec>,
    },
    Inverse {
        map: Box<MapSpec>,
    },
    /// `by ∘ map ∘ by⁻¹`.
    Conjugate {
        by: Box<MapSpec>,
        map: Box<MapSpec>,
    },
}

fn default_cantor_depth() -> u32 {
    12
}

fn rational(field: &str, s: &str) -> Result<Rational, Failure> {
    s.trim()
        .parse::<Rational>()
        .map_err(|e| Failure::config(format!("{field}: bad rational {s:?}: {e}")))
}

impl MapSpec {
    pub fn build(&self) -> Result<CircleMap, Failure> {
        self.build_at(0)
    }

    fn build_at(&self, depth: usize) -> Result<CircleMap, Failure> {
        if depth > caps::MAP_DEPTH {
            return Err(Failure::cap(format!("map nesting deeper than {}", caps::MAP_DEPTH)));
        }
        let d = depth + 1;
        Ok(match self {
            MapSpec::Rotation { angle } => CircleMap::Rotation(*angle),
            MapSpec::Fourier { shift, coefficients } => {
                FourierDiffeo::new(*shift, coefficients.iter().map(|c| (c[0], c[1])).collect())?.into()
            }
            MapSpec::Mobius { matrix } => MobiusMap::new(*matrix)?.into(),
            MapSpec::Pa { records } => PaMap::from_records(records)?.into(),
            MapSpec::TwoInterval {
                slope,
                breakpoint,
                at_zero,
            } => two_interval_map(
                rational("slope", slope)?,
                rational("breakpoint", breakpoint)?,
                rational("at_zero", at_zero)?,
            )?
            .into(),
            MapSpec::Sampled {
                values,
                dvalues,
                affine,
            } => SampledDiffeo::from_parts(values.clone(), dvalues.clone(), affine.clone())?.into(),
            MapSpec::Cantor {
                weight,
                amplitude,
                shift,
                depth,
            } => CircleMap::Cantor(Arc::new(CantorDiffeo::new(*weight, *amplitude, *shift, *depth)?)),
            MapSpec::Compose { outer, inner } => CircleMap::compose(outer.build_at(d)?, inner.build_at(d)?),
            MapSpec::Inverse { map } => CircleMap::inverse(map.build_at(d)?),
            MapSpec::Conjugate { by, map } => CircleMap::conjugate(&by.build_at(d)?, &map.build_at(d)?),
        })
    }
}

/// Partition refinement knobs; missing fields take the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub min_level: u32,
    pub max_level: u32,
    pub rel_tol: f64,
    pub extra_points: Vec<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let d = RefinementSchedule::default();
        Self {
            min_level: d.min_level,
            max_level: d.max_level,
            rel_tol: d.rel_tol,
            extra_points: d.extra_points,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<RefinementSchedule, Failure> {
        if self.max_level > caps::MAX_LEVEL {
            return Err(Failure::cap(format!(
                "schedule.max_level {} exceeds cap {}",
                self.max_level,
                caps::MAX_LEVEL
            )));
        }
        Ok(RefinementSchedule {
            min_level: self.min_level,
            max_level: self.max_level,
            rel_tol: self.rel_tol,
            extra_points: self.extra_points.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotnoConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub map: MapSpec,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub map: MapSpec,
    pub n_max: usize,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// Seeded uniform points merged into every partition.
    #[serde(default)]
    pub random_points: usize,
    /// Wall-clock budget; the series is computed one `n` at a time when set.
    #[serde(default)]
    pub time_budget_s: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GeometricMean,
    Box,
    Path,
    Herman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximateConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub scheme: Scheme,
    /// One map, or several commuting generators for the box scheme.
    pub maps: Vec<MapSpec>,
    /// Rotation numbers, one per map; estimated when absent.
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    /// Averaging lengths for the geometric-mean, box and herman schemes.
    #[serde(default)]
    pub ns: Vec<usize>,
    /// Path parameters in `[0, 1)` for the path scheme.
    #[serde(default)]
    pub t_values: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_sup_points")]
    pub sup_points: usize,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

fn default_grid() -> usize {
    bvlab::conjugation::DEFAULT_GRID
}

fn default_sup_points() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub map: MapSpec,
    pub points: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobiusTableConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicBumpConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub bump: ParabolicBumpSpec,
    pub n_max: usize,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatherConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub weighted: CantorWeightSpec,
    pub control: CantorWeightSpec,
    pub n_max: usize,
    #[serde(default = "default_gap_depth")]
    pub gap_depth: usize,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

fn default_gap_depth() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaJumpConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub map: MapSpec,
    pub horizon: usize,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDecayConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub maps: Vec<MapSpec>,
    pub ns: Vec<usize>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_sup_points")]
    pub points: usize,
    #[serde(default)]
    pub schedule: ScheduleConfig,
}

/// Parses JSON with field-path diagnostics and checks the schema version.
pub fn parse<T: DeserializeOwned + Versioned>(text: &str, origin: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: T = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Failure::config(format!(
            "{origin}: field `{path}` (line {}, column {}): {inner}",
            inner.line(),
            inner.column()
        ))
    })?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(Failure::config(format!(
            "{origin}: field `schema_version`: expected {SCHEMA_VERSION}, got {}",
            cfg.schema_version()
        )));
    }
    Ok(cfg)
}

pub fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(
    RotnoConfig,
    DistortionConfig,
    ApproximateConfig,
    CheckConfig,
    MobiusTableConfig,
    ParabolicBumpConfig,
    MatherConfig,
    PaJumpConfig,
    BoxDecayConfig
);

pub fn check_cap(what: &str, value: usize, cap: usize) -> Result<(), Failure> {
    if value > cap {
        return Err(Failure::cap(format!("{what} = {value} exceeds cap {cap}")));
    }
    Ok(())
}

pub fn check_positive(what: &str, value: usize) -> Result<(), Failure> {
    if value == 0 {
        return Err(Failure::config(format!("field `{what}` must be positive")));
    }
    Ok(())
}
