//! Experiment drivers. Each returns a complete in-memory [`Bundle`].

mod mapk;
mod pair;
mod rates_report;
mod simulate;

use rdme_core::model::{
    compile_model, ChannelDiagnostics, CompileOptions, CompiledModel, LatticeSpec, RateLaw,
    ReactionChannel, SpeciesSpec,
};
use rdme_core::rates::{AssocRate, PhysicalParams};
use rdme_core::stats::Summary;
use serde::Serialize;
use serde_json::json;

use crate::config::{Axis, ExperimentConfig, Kind, PairConfig, RateMode, Width};
use crate::error::CliError;
use crate::output::{Bundle, CENSOR_LIMIT};

pub use mapk::{tau_res, MapkCurve};
pub use pair::{PairSetup, Start};

pub fn run(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    match cfg.kind {
        Kind::RatesReport => rates_report::run(cfg),
        Kind::BindingTime | Kind::Rebind | Kind::Sweep => pair::run_samples(cfg),
        Kind::Equilibrium => pair::run_equilibrium(cfg),
        Kind::Simulate => simulate::run(cfg),
        Kind::Mapk => mapk::run(cfg),
    }
}

/// Sub-seed for one part of an experiment, so that sweep points and rate
/// modes draw from unrelated streams while staying reproducible.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut z = master;
    for &t in tags {
        z = splitmix(z ^ splitmix(t.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One resolved point of a pair experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Point {
    /// File-name suffix such as `h-1.5hinf`; `None` without a sweep.
    pub label: Option<String>,
    pub value: Option<f64>,
    pub pair: PairConfig,
    pub n: usize,
    pub h: f64,
    pub length: f64,
}

impl Point {
    pub fn params(&self) -> PhysicalParams<f64> {
        self.pair.params().expect("validated")
    }

    pub fn stem(&self, kind: Kind) -> String {
        match &self.label {
            Some(l) => format!("{}-{l}", kind.name()),
            None => kind.name().to_string(),
        }
    }
}

fn value_label(axis: Axis, v: f64, relative: bool) -> String {
    if relative {
        format!("{}-{v}hinf", axis.name())
    } else {
        format!("{}-{v:e}", axis.name())
    }
}

/// Expands the pair, mesh and sweep sections into points. Without a
/// `[mesh]` section (rates reports only) `n` is 1 and `length = h`.
pub fn pair_points(cfg: &ExperimentConfig) -> Result<Vec<Point>, CliError> {
    let base = cfg.pair.ok_or_else(|| CliError::Config("missing [pair]".into()))?;
    let resolve = |pair: PairConfig, h_override: Option<f64>, label, value| -> Result<Point, CliError> {
        let p = pair.params()?;
        let h_inf = crate::config::h_star_inf(&p);
        let (n, h) = match (cfg.mesh, h_override) {
            // A fixed domain keeps its side: the voxel count adapts and h is
            // rounded to the nearest divisor of the side.
            (Some(m), Some(h)) => match m.width {
                Width::Length(l) => {
                    let n = ((l / h).round() as usize).max(1);
                    (n, l / n as f64)
                }
                _ => (m.n, h),
            },
            (Some(m), None) => (m.n, m.h_for(h_inf)),
            (None, Some(h)) => (1, h),
            (None, None) => return Err(CliError::Config("missing [mesh]".into())),
        };
        let length = match cfg.mesh.map(|m| m.width) {
            Some(Width::Length(l)) => l,
            _ => h * n as f64,
        };
        Ok(Point { label, value, pair, n, h, length })
    };
    let Some(sweep) = &cfg.sweep else {
        return Ok(vec![resolve(base, None, None, None)?]);
    };
    sweep
        .values
        .iter()
        .map(|&v| {
            let label = Some(value_label(sweep.axis, v, sweep.relative));
            match sweep.axis {
                Axis::H => {
                    let h = if sweep.relative {
                        v * crate::config::h_star_inf(&base.params()?)
                    } else {
                        v
                    };
                    resolve(base, Some(h), label, Some(v))
                }
                Axis::Diffusion => resolve(PairConfig { diffusion: v, ..base }, None, label, Some(v)),
                Axis::Rate => resolve(
                    PairConfig { k_r: AssocRate::Finite(v), ..base },
                    None,
                    label,
                    Some(v),
                ),
            }
        })
        .collect()
}

/// Species `A`, `B`, `C` and the channel `bind: A + B -> C`, plus
/// `unbind: C -> A + B` when `k_d > 0`. Each molecule carries half of the
/// pair's diffusion constant and radius.
pub fn pair_model(pair: &PairConfig, mode: RateMode) -> (Vec<SpeciesSpec>, Vec<ReactionChannel>) {
    let species = vec![
        SpeciesSpec::new("A", pair.diffusion / 2.0, pair.sigma / 2.0),
        SpeciesSpec::new("B", pair.diffusion / 2.0, pair.sigma / 2.0),
        SpeciesSpec::new("C", 0.0, pair.sigma / 2.0),
    ];
    let law = match mode {
        RateMode::Hhp => RateLaw::Multiscale { k_r: pair.k_r },
        RateMode::Ck => RateLaw::CollinsKimball { k_r: pair.k_r },
    };
    let mut channels = vec![ReactionChannel::new("bind", vec![0, 1], vec![2], law)];
    if pair.k_d > 0.0 {
        channels.push(ReactionChannel::new(
            "unbind",
            vec![2],
            vec![0, 1],
            RateLaw::Dissociation { k_d: pair.k_d, association: 0 },
        ));
    }
    (species, channels)
}

pub fn compile_pair(point: &Point, cfg: &ExperimentConfig, mode: RateMode) -> Result<CompiledModel, CliError> {
    let (species, channels) = pair_model(&point.pair, mode);
    let lattice = LatticeSpec::new(point.pair.dim, point.n, point.length, cfg.mesh.map_or(Default::default(), |m| m.boundary))?;
    Ok(compile_model(&species, &channels, &lattice, CompileOptions { eps: cfg.eps })?)
}

/// Per-channel report of a compiled model: diagnostics of intrinsic-rate
/// channels and the resolved constant of every channel.
pub fn channel_report(model: &CompiledModel, source: &[ReactionChannel]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = model
        .channels
        .iter()
        .zip(source)
        .map(|(c, s)| {
            let mut v = json!({ "channel": c.name, "constant": c.constant });
            if let Some(d) = &c.diagnostics {
                v["diagnostics"] = diagnostics_json(d);
            }
            if let RateLaw::Dissociation { k_d, association } = s.rate {
                v["k_d"] = json!(k_d);
                v["k_d_meso"] = json!(c.constant);
                v["reverse_of"] = json!(model.channels[association].name);
            }
            v
        })
        .collect();
    json!({
        "h": model.lattice.h(),
        "lattice": model.lattice,
        "channels": rows,
        "warnings": model.warnings,
    })
}

fn diagnostics_json(d: &ChannelDiagnostics) -> serde_json::Value {
    let mut v = serde_json::to_value(d).expect("serializable");
    // JSON has no infinity; the bound and k_r carry it as a string.
    for key in ["k_r", "mesh_bound"] {
        if v[key].is_null() {
            v[key] = json!("inf");
        }
    }
    v
}

/// Summary statistics as JSON, with the censoring verdict.
pub fn stats_json(s: &Summary) -> serde_json::Value {
    json!({
        "n": s.n,
        "censored": s.censored,
        "censored_fraction": s.censored_fraction(),
        "mean": finite_or_null(s.mean),
        "std_dev": finite_or_null(s.std_dev),
        "std_err": finite_or_null(s.std_err),
        "unreliable": s.censored_fraction() > CENSOR_LIMIT,
    })
}

pub fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() { json!(x) } else if x.is_nan() { serde_json::Value::Null } else { json!(if x > 0.0 { "inf" } else { "-inf" }) }
}

/// Common head of every summary.
pub fn summary_head(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "config": cfg,
    })
}
