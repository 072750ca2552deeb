//! Trajectories of a model file on a lattice.

use rand::Rng;
use rdme_core::ensemble::run_ensemble;
use rdme_core::model::{compile_model, CompileOptions, CompiledModel, LatticeSpec, SystemState};
use rdme_core::nsm::{self, Engine, EventLog, StopCondition, TimeSeries, TrajectoryResult};
use rdme_core::stats::Summary;
use serde_json::json;

use super::{channel_report, derive_seed, stats_json, summary_head};
use crate::config::{ExperimentConfig, RateMode, Width};
use crate::error::CliError;
use crate::model_file::{max_h_star_inf, BuiltModel, ModelFile};
use crate::output::{num, Bundle, Table, CENSOR_LIMIT};

/// Lattice of a model run: the experiment's `[mesh]` when present, otherwise
/// the model's own `[lattice]`. Relative widths refer to the largest `h*_inf`
/// among the model's bimolecular channels.
pub fn model_lattice(cfg: &ExperimentConfig, file: &ModelFile, built: &BuiltModel) -> Result<LatticeSpec, CliError> {
    let own = file.lattice()?;
    let Some(mesh) = cfg.mesh else {
        return own.ok_or_else(|| CliError::Config("no [mesh] in the experiment and no [lattice] in the model".into()));
    };
    let dim = own.map_or(3, |l| l.dim);
    let length = match mesh.width {
        Width::H(h) => h * mesh.n as f64,
        Width::Length(l) => l,
        Width::HFactor(f) => {
            let h_inf = max_h_star_inf(built, dim)
                .ok_or_else(|| CliError::Config("h_factor needs a bimolecular channel with k_r".into()))?;
            f * h_inf * mesh.n as f64
        }
    };
    Ok(LatticeSpec::new(dim, mesh.n, length, mesh.boundary)?)
}

pub fn load_and_compile(
    cfg: &ExperimentConfig,
    mode: RateMode,
    diffusion: Option<f64>,
) -> Result<(BuiltModel, CompiledModel), CliError> {
    let path = cfg.model.as_ref().expect("checked");
    let file = ModelFile::load(path)?;
    let built = file.build(mode, diffusion)?;
    let lattice = model_lattice(cfg, &file, &built)?;
    let model = compile_model(&built.species, &built.channels, &lattice, CompileOptions { eps: cfg.eps })?;
    Ok((built, model))
}

/// Places each initial molecule in a uniformly random voxel.
pub fn random_initial_state<R: Rng>(model: &CompiledModel, initial: &[u32], rng: &mut R) -> SystemState {
    let k = model.lattice.voxel_count();
    let mut state = SystemState::empty(k, model.species.len());
    for (s, &count) in initial.iter().enumerate() {
        for _ in 0..count {
            state.add(rng.random_range(0..k), s, 1);
        }
    }
    state
}

/// One trajectory sampled on a fixed grid.
pub fn sampled_trajectory<R: Rng>(
    model: &CompiledModel,
    initial: &[u32],
    horizon: f64,
    interval: f64,
    max_events: u64,
    log: Option<&mut EventLog>,
    rng: &mut R,
) -> (TimeSeries, TrajectoryResult) {
    let state = random_initial_state(model, initial, rng);
    let mut series = TimeSeries::new(interval);
    let mut engine = Engine::new(model, state, rng);
    let r = match log {
        Some(log) => nsm::run(&mut engine, StopCondition::Horizon(horizon), Some(max_events), &mut [&mut series, log]),
        None => nsm::run(&mut engine, StopCondition::Horizon(horizon), Some(max_events), &mut [&mut series]),
    };
    (series, r)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let opts = cfg.simulate.expect("checked");
    let (built, model) = load_and_compile(cfg, cfg.rate_mode, None)?;
    let seed = derive_seed(cfg.seed, &[0]);
    let runs = run_ensemble(cfg.trajectories, seed, cfg.threads, |i, rng| {
        let mut log = EventLog::default();
        let want_log = opts.event_log && i == 0;
        let (series, r) = sampled_trajectory(
            &model,
            &built.initial,
            opts.horizon,
            opts.interval,
            cfg.max_events,
            want_log.then_some(&mut log),
            rng,
        );
        (series, r.censored(), r.events, log)
    });

    let names: Vec<&str> = model.species.iter().map(|s| s.name.as_str()).collect();
    let mut header = vec!["trajectory", "time"];
    header.extend(&names);
    let meta = format!("kind=simulate mode={} h={:e} n={} seed={}", cfg.rate_mode.name(), model.lattice.h(), model.lattice.n, cfg.seed);
    let mut series_table = Table::new("simulate.csv", &header).with_metadata(meta.clone());
    let mut tables = Vec::new();
    let mut censored = 0;
    let mut events = Vec::new();
    let mut final_sums = vec![0.0; names.len()];
    for (j, (series, c, n_events, log)) in runs.iter().enumerate() {
        for (t, totals) in series.times.iter().zip(&series.totals) {
            let mut row = vec![j.to_string(), num(*t)];
            row.extend(totals.iter().map(|x| x.to_string()));
            series_table.push(row);
        }
        if *c {
            censored += 1;
        } else {
            events.push(*n_events as f64);
            if let Some(last) = series.totals.last() {
                for (s, x) in final_sums.iter_mut().zip(last) {
                    *s += *x as f64;
                }
            }
        }
        if j == 0 && opts.event_log {
            let mut t = Table::new("simulate-events.csv", &["time", "voxel", "channel", "species_deltas"])
                .with_metadata(meta.clone());
            for e in &log.rows {
                t.push(vec![num(e.time), e.voxel.to_string(), e.channel.clone(), e.species_deltas.clone()]);
            }
            tables.push(t);
        }
    }
    tables.insert(0, series_table);
    let s = Summary::new(&events, censored);
    let kept = events.len().max(1) as f64;
    let final_means: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .zip(&final_sums)
        .map(|(n, s)| (n.to_string(), json!(s / kept)))
        .collect();
    let unreliable = s.censored_fraction() > CENSOR_LIMIT;
    let mut summary = summary_head(cfg);
    summary["model"] = channel_report(&model, &built.channels);
    summary["events"] = stats_json(&s);
    summary["final_mean_counts"] = json!(final_means);
    summary["unreliable"] = json!(unreliable);
    Ok(Bundle { tables, extras: vec![], summary, unreliable })
}
