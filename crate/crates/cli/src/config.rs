//! Experiment configuration files.
//!
//! The file format is TOML; the grammar is documented in
//! `docs/config.md`. Raw tables are deserialized with unknown keys rejected
//! and then resolved into an [`ExperimentConfig`] with every default filled
//! in and every invariant checked.

use std::path::{Path, PathBuf};

use rdme_core::model::Boundary;
use rdme_core::rates::{h_star, AssocRate, Dim, PhysicalParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    RatesReport,
    Simulate,
    BindingTime,
    Rebind,
    Equilibrium,
    Mapk,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::RatesReport => "rates-report",
            Kind::Simulate => "simulate",
            Kind::BindingTime => "binding-time",
            Kind::Rebind => "rebind",
            Kind::Equilibrium => "equilibrium",
            Kind::Mapk => "mapk",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
pub enum Axis {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "D")]
    Diffusion,
    #[serde(rename = "k_r")]
    Rate,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::H => "h",
            Axis::Diffusion => "D",
            Axis::Rate => "k_r",
        }
    }
}

/// Association rate law used for intrinsic-rate channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Mesh-dependent multiscale rates.
    Hhp,
    /// Collins–Kimball rate over the voxel volume.
    Ck,
}

impl RateMode {
    pub fn name(self) -> &'static str {
        match self {
            RateMode::Hhp => "hhp",
            RateMode::Ck => "ck",
        }
    }
}

/// A number, `"inf"`, or the name of an entry in a `[parameters]` table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrName {
    Number(f64),
    Name(String),
}

/// Placeholder accepted by the parser so that template files stay valid
/// TOML; resolving it is a configuration error.
pub const REQUIRED: &str = "REQUIRED";

impl NumberOrName {
    pub fn resolve(
        &self,
        what: &str,
        params: Option<&toml::Table>,
    ) -> Result<AssocRate<f64>, CliError> {
        match self {
            NumberOrName::Number(x) => Ok(AssocRate::Finite(*x)),
            NumberOrName::Name(s) if s == "inf" => Ok(AssocRate::Infinite),
            NumberOrName::Name(s) if s == REQUIRED => Err(CliError::Config(format!(
                "{what} is a placeholder; fill in a value"
            ))),
            NumberOrName::Name(s) => {
                let v = params.and_then(|p| p.get(s)).ok_or_else(|| {
                    CliError::Config(format!("{what}: unknown parameter {s:?}"))
                })?;
                let inner: NumberOrName = v.clone().try_into().map_err(|_| {
                    CliError::Config(format!("{what}: parameter {s:?} must be a number"))
                })?;
                match inner {
                    NumberOrName::Name(n) if &n == s => {
                        Err(CliError::Config(format!("{what}: parameter {s:?} refers to itself")))
                    }
                    NumberOrName::Name(n) if n != "inf" && n != REQUIRED => Err(CliError::Config(
                        format!("{what}: parameter {s:?} must be a number, not a name"),
                    )),
                    other => other.resolve(&format!("parameter {s:?}"), params),
                }
            }
        }
    }

    /// Like [`resolve`](Self::resolve) but rejects `"inf"`.
    pub fn finite(&self, what: &str, params: Option<&toml::Table>) -> Result<f64, CliError> {
        match self.resolve(what, params)? {
            AssocRate::Finite(x) => Ok(x),
            AssocRate::Infinite => Err(CliError::Config(format!("{what} must be finite"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Kind,
    trajectories: Option<usize>,
    eps: Option<f64>,
    output: Option<PathBuf>,
    model: Option<PathBuf>,
    threads: Option<usize>,
    max_events: Option<u64>,
    rate_mode: Option<RateMode>,
    gnuplot: Option<bool>,
    pair: Option<RawPair>,
    mesh: Option<RawMesh>,
    sweep: Option<RawSweep>,
    micro: Option<RawMicro>,
    simulate: Option<RawSimulate>,
    equilibrium: Option<RawEquilibrium>,
    mapk: Option<RawMapk>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    dim: usize,
    sigma: f64,
    diffusion: f64,
    k_r: NumberOrName,
    #[serde(default)]
    k_d: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    n: Option<usize>,
    h: Option<f64>,
    h_factor: Option<f64>,
    length: Option<f64>,
    boundary: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Axis,
    values: Vec<f64>,
    #[serde(default)]
    relative: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMicro {
    trajectories: Option<usize>,
    cells_per_sigma: Option<usize>,
    dt_factor: Option<f64>,
    max_steps: Option<u64>,
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    horizon: f64,
    interval: f64,
    #[serde(default)]
    event_log: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquilibrium {
    horizon: f64,
    #[serde(default)]
    burn_in: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMapk {
    diffusion: Vec<f64>,
    horizon: f64,
    interval: f64,
    readout: Option<String>,
    steady_from: Option<f64>,
    modes: Option<Vec<RateMode>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairConfig {
    pub dim: usize,
    pub sigma: f64,
    pub diffusion: f64,
    #[serde(serialize_with = "serialize_rate")]
    pub k_r: AssocRate<f64>,
    pub k_d: f64,
}

pub fn serialize_rate<S: serde::Serializer>(k: &AssocRate<f64>, s: S) -> Result<S::Ok, S::Error> {
    match k {
        AssocRate::Finite(v) => s.serialize_f64(*v),
        AssocRate::Infinite => s.serialize_str("inf"),
    }
}

impl PairConfig {
    pub fn params(&self) -> Result<PhysicalParams<f64>, CliError> {
        let dim = match self.dim {
            2 => Dim::Two,
            3 => Dim::Three,
            d => return Err(CliError::Config(format!("pair.dim must be 2 or 3, got {d}"))),
        };
        PhysicalParams::new(self.k_r, self.k_d, self.diffusion, self.sigma, dim)
            .map_err(|e| CliError::Config(format!("pair: {e}")))
    }
}

/// How the voxel width is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Width {
    /// Metres.
    H(f64),
    /// Multiple of `h*_inf`.
    HFactor(f64),
    /// Domain side in metres; `h = length / n`.
    Length(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshConfig {
    pub n: usize,
    pub width: Width,
    #[serde(serialize_with = "serialize_boundary")]
    pub boundary: Boundary,
}

fn serialize_boundary<S: serde::Serializer>(b: &Boundary, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match b {
        Boundary::Periodic => "periodic",
        Boundary::Reflective => "reflective",
    })
}

impl MeshConfig {
    /// Voxel width for a pair, given the critical width reference.
    pub fn h_for(&self, h_star_inf: f64) -> f64 {
        match self.width {
            Width::H(h) => h,
            Width::HFactor(f) => f * h_star_inf,
            Width::Length(l) => l / self.n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// For the `h` axis: values are multiples of `h*_inf`.
    pub relative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroOptions {
    /// Pair-oracle samples per point; 0 disables the micro reference.
    pub trajectories: usize,
    pub cells_per_sigma: usize,
    pub dt_factor: f64,
    pub max_steps: u64,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulateOptions {
    pub horizon: f64,
    pub interval: f64,
    pub event_log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumOptions {
    pub horizon: f64,
    pub burn_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapkOptions {
    pub diffusion: Vec<f64>,
    pub horizon: f64,
    pub interval: f64,
    pub readout: String,
    /// Steady state is averaged over `t >= steady_from * horizon`.
    pub steady_from: f64,
    pub modes: Vec<RateMode>,
}

/// Fully resolved experiment description; echoed into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub trajectories: usize,
    pub eps: f64,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub max_events: u64,
    pub rate_mode: RateMode,
    /// Also write a `plot.gp` stub next to sample tables.
    pub gnuplot: bool,
    pub model: Option<PathBuf>,
    pub pair: Option<PairConfig>,
    pub mesh: Option<MeshConfig>,
    pub sweep: Option<Sweep>,
    pub micro: MicroOptions,
    pub simulate: Option<SimulateOptions>,
    pub equilibrium: Option<EquilibriumOptions>,
    pub mapk: Option<MapkOptions>,
    pub full: bool,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub trajectories: Option<usize>,
    pub threads: Option<usize>,
    pub full: bool,
}

pub const DEFAULT_TRAJECTORIES: usize = 1000;
pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

fn positive(what: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{what} must be positive and finite, got {x}")))
    }
}

/// Merges `patch` into `base`, recursing into tables.
fn merge(base: &mut toml::Table, patch: toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses configuration text. Relative paths are resolved against
/// `base_dir`. With `overrides.full` the optional `[full]` table is merged
/// over the file before parsing.
pub fn parse_config(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    let full = match table.remove("full") {
        Some(toml::Value::Table(t)) => Some(t),
        Some(_) => return Err(CliError::Config("[full] must be a table".into())),
        None => None,
    };
    if overrides.full {
        match full {
            Some(t) => merge(&mut table, t),
            None => log::warn!("--full given but the config has no [full] table"),
        }
    }
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    resolve(raw, base_dir, overrides)
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base, overrides)
}

fn resolve(raw: RawConfig, base_dir: &Path, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let trajectories = o
        .trajectories
        .or(raw.trajectories)
        .unwrap_or(DEFAULT_TRAJECTORIES);
    if trajectories == 0 {
        return Err(CliError::Config("trajectories must be at least 1".into()));
    }
    let eps = raw.eps.unwrap_or(0.05);
    if !(0.0..1.0).contains(&eps) {
        return Err(CliError::Config(format!("eps = {eps} must lie in [0, 1)")));
    }
    let output = match (&o.out, raw.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => base_dir.join(p),
        (None, None) => PathBuf::from("results").join(raw.kind.name()),
    };
    let pair = raw
        .pair
        .map(|p| -> Result<PairConfig, CliError> {
            let c = PairConfig {
                dim: p.dim,
                sigma: p.sigma,
                diffusion: p.diffusion,
                k_r: p.k_r.resolve("pair.k_r", None)?,
                k_d: p.k_d,
            };
            c.params()?;
            Ok(c)
        })
        .transpose()?;
    let mesh = raw.mesh.map(resolve_mesh).transpose()?;
    let sweep = raw
        .sweep
        .map(|s| -> Result<Sweep, CliError> {
            for &v in &s.values {
                positive(&format!("sweep value for {}", s.axis.name()), v)?;
            }
            if s.relative && s.axis != Axis::H {
                return Err(CliError::Config("sweep.relative applies to the h axis only".into()));
            }
            Ok(Sweep {
                axis: s.axis,
                values: s.values,
                relative: s.relative,
            })
        })
        .transpose()?;
    let micro = raw.micro.map_or(
        Ok(MicroOptions {
            trajectories: 0,
            cells_per_sigma: 20,
            dt_factor: 1.0,
            max_steps: 200_000_000,
            cache_dir: None,
        }),
        |m| -> Result<MicroOptions, CliError> {
            Ok(MicroOptions {
                trajectories: m.trajectories.unwrap_or(0),
                cells_per_sigma: m.cells_per_sigma.unwrap_or(20),
                dt_factor: positive("micro.dt_factor", m.dt_factor.unwrap_or(1.0))?,
                max_steps: m.max_steps.unwrap_or(200_000_000),
                cache_dir: m.cache_dir.map(|p| base_dir.join(p)),
            })
        },
    )?;
    let simulate = raw
        .simulate
        .map(|s| -> Result<SimulateOptions, CliError> {
            Ok(SimulateOptions {
                horizon: positive("simulate.horizon", s.horizon)?,
                interval: positive("simulate.interval", s.interval)?,
                event_log: s.event_log,
            })
        })
        .transpose()?;
    let equilibrium = raw
        .equilibrium
        .map(|e| -> Result<EquilibriumOptions, CliError> {
            let horizon = positive("equilibrium.horizon", e.horizon)?;
            if !(e.burn_in >= 0.0 && e.burn_in < horizon) {
                return Err(CliError::Config("equilibrium.burn_in must lie in [0, horizon)".into()));
            }
            Ok(EquilibriumOptions {
                horizon,
                burn_in: e.burn_in,
            })
        })
        .transpose()?;
    let mapk = raw
        .mapk
        .map(|m| -> Result<MapkOptions, CliError> {
            if m.diffusion.is_empty() {
                return Err(CliError::Config("mapk.diffusion needs at least one value".into()));
            }
            for &d in &m.diffusion {
                positive("mapk.diffusion value", d)?;
            }
            let steady_from = m.steady_from.unwrap_or(0.5);
            if !(0.0..1.0).contains(&steady_from) {
                return Err(CliError::Config("mapk.steady_from must lie in [0, 1)".into()));
            }
            Ok(MapkOptions {
                diffusion: m.diffusion,
                horizon: positive("mapk.horizon", m.horizon)?,
                interval: positive("mapk.interval", m.interval)?,
                readout: m.readout.unwrap_or_else(|| "MAPK_pp".into()),
                steady_from,
                modes: m.modes.unwrap_or_else(|| vec![RateMode::Hhp, RateMode::Ck]),
            })
        })
        .transpose()?;

    let cfg = ExperimentConfig {
        kind: raw.kind,
        seed: o.seed,
        trajectories,
        eps,
        output,
        threads: o.threads.or(raw.threads),
        max_events: raw.max_events.unwrap_or(DEFAULT_MAX_EVENTS),
        rate_mode: raw.rate_mode.unwrap_or(RateMode::Hhp),
        gnuplot: raw.gnuplot.unwrap_or(false),
        model: raw.model.map(|p| base_dir.join(p)),
        pair,
        mesh,
        sweep,
        micro,
        simulate,
        equilibrium,
        mapk,
        full: o.full,
    };
    check_sections(&cfg)?;
    Ok(cfg)
}

fn resolve_mesh(m: RawMesh) -> Result<MeshConfig, CliError> {
    let n = m.n.ok_or_else(|| CliError::Config("mesh.n is required".into()))?;
    if n == 0 {
        return Err(CliError::Config("mesh.n must be at least 1".into()));
    }
    let width = match (m.h, m.h_factor, m.length) {
        (Some(h), None, None) => Width::H(positive("mesh.h", h)?),
        (None, Some(f), None) => Width::HFactor(positive("mesh.h_factor", f)?),
        (None, None, Some(l)) => Width::Length(positive("mesh.length", l)?),
        _ => {
            return Err(CliError::Config(
                "mesh needs exactly one of h, h_factor, length".into(),
            ))
        }
    };
    let boundary = match m.boundary.as_deref() {
        None | Some("periodic") => Boundary::Periodic,
        Some("reflective") => Boundary::Reflective,
        Some(b) => return Err(CliError::Config(format!("unknown boundary {b:?}"))),
    };
    Ok(MeshConfig { n, width, boundary })
}

fn check_sections(c: &ExperimentConfig) -> Result<(), CliError> {
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("{} needs {what}", c.kind.name())))
        }
    };
    match c.kind {
        Kind::RatesReport => {
            need(c.pair.is_some(), "a [pair] section")?;
            if c.sweep.as_ref().is_none_or(|s| s.axis == Axis::H) {
                need(c.mesh.is_some() || c.sweep.is_some(), "a [mesh] section or an h sweep")?;
            }
        }
        Kind::BindingTime | Kind::Rebind | Kind::Sweep => {
            need(c.pair.is_some() && c.mesh.is_some(), "[pair] and [mesh] sections")?;
        }
        Kind::Equilibrium => {
            need(
                c.pair.is_some() && c.mesh.is_some() && c.equilibrium.is_some(),
                "[pair], [mesh] and [equilibrium] sections",
            )?;
            need(c.pair.is_some_and(|p| p.k_d > 0.0), "pair.k_d > 0")?;
        }
        Kind::Simulate => {
            need(c.model.is_some() && c.simulate.is_some(), "model = ... and a [simulate] section")?;
            need(c.sweep.is_none(), "no [sweep] section")?;
        }
        Kind::Mapk => {
            need(c.model.is_some() && c.mapk.is_some(), "model = ... and a [mapk] section")?;
            need(c.mesh.is_some(), "a [mesh] section")?;
        }
    }
    if matches!(c.kind, Kind::Rebind | Kind::BindingTime | Kind::Sweep | Kind::Equilibrium) {
        if let Some(p) = c.pair {
            if p.k_r.is_zero() {
                return Err(CliError::Config("pair.k_r must be positive for sampling experiments".into()));
            }
        }
    }
    Ok(())
}

/// `h*_inf` of a pair, for resolving relative widths.
pub fn h_star_inf(p: &PhysicalParams<f64>) -> f64 {
    h_star(p).h_star_inf
}
