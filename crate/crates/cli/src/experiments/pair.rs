//! Single-pair experiments: binding times, rebinding times, rate-mode
//! sweeps and the reversible equilibrium.

use rand::Rng;
use rdme_core::ensemble::run_ensemble;
use rdme_core::micro::{BindingDistribution, InitialCondition, MicroConfig, PairSimulator};
use rdme_core::model::{CompiledModel, SystemState};
use rdme_core::nsm::{self, Engine, Observer, StopCondition};
use rdme_core::rates::{self, AssocRate};
use rdme_core::stats::{log_histogram, sup_distance, Ecdf, Summary};
use serde_json::json;

use super::{
    channel_report, compile_pair, derive_seed, finite_or_null, pair_model, pair_points, stats_json,
    summary_head, Point,
};
use crate::config::{ExperimentConfig, Kind, RateMode};
use crate::error::CliError;
use crate::output::{gnuplot_stub, num, Bundle, Table, CENSOR_LIMIT};

/// Initial placement of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Both molecules in the centre voxel, as right after a dissociation.
    Contact,
    /// Each molecule in an independent uniformly random voxel.
    Uniform,
}

/// Mesoscopic sampler for the first firing of `bind` in a pair model.
pub struct PairSetup<'m> {
    pub model: &'m CompiledModel,
    pub start: Start,
    pub max_events: u64,
}

impl PairSetup<'_> {
    pub fn initial_state<R: Rng>(&self, rng: &mut R) -> SystemState {
        let l = &self.model.lattice;
        let mut state = SystemState::empty(l.voxel_count(), self.model.species.len());
        match self.start {
            Start::Contact => {
                let centre = l.index(&vec![l.n / 2; l.dim]);
                state.add(centre, 0, 1);
                state.add(centre, 1, 1);
            }
            Start::Uniform => {
                state.add(rng.random_range(0..l.voxel_count()), 0, 1);
                state.add(rng.random_range(0..l.voxel_count()), 1, 1);
            }
        }
        state
    }

    /// Binding time and whether the sample was censored.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, bool) {
        let state = self.initial_state(rng);
        let bind = self.model.channel_index("bind").expect("pair model");
        let mut engine = Engine::new(self.model, state, rng);
        let r = nsm::run(&mut engine, StopCondition::FirstFiring(bind), Some(self.max_events), &mut []);
        (r.stop_time, r.censored())
    }

    pub fn sample_many(&self, n: usize, seed: u64, threads: Option<usize>) -> Vec<(f64, bool)> {
        run_ensemble(n, seed, threads, |_, rng| self.sample(rng))
    }
}

/// Uncensored times and the censored count.
pub fn split_censored(samples: &[(f64, bool)]) -> (Vec<f64>, usize) {
    let times: Vec<f64> = samples.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let censored = samples.len() - times.len();
    (times, censored)
}

fn sample_table(name: String, meta: String, samples: impl Iterator<Item = (f64, bool)>) -> Table {
    let mut t = Table::new(name, &["time_s", "censored"]).with_metadata(meta);
    for (time, c) in samples {
        t.push(vec![num(time), (c as u8).to_string()]);
    }
    t
}

fn meta(cfg: &ExperimentConfig, pt: &Point, extra: &str) -> String {
    format!(
        "kind={} {extra} dim={} sigma={:e} D={:e} k_r={} k_d={:e} n={} h={:e} L={:e} seed={}",
        cfg.kind.name(),
        pt.pair.dim,
        pt.pair.sigma,
        pt.pair.diffusion,
        crate::model_file::rate_label(pt.pair.k_r),
        pt.pair.k_d,
        pt.n,
        pt.h,
        pt.length,
        cfg.seed
    )
}

fn modes(cfg: &ExperimentConfig, dim: usize) -> Vec<RateMode> {
    match cfg.kind {
        Kind::Sweep if dim == 3 => vec![RateMode::Hhp, RateMode::Ck],
        Kind::Sweep => vec![RateMode::Hhp],
        _ => vec![cfg.rate_mode],
    }
}

fn micro_simulator(cfg: &ExperimentConfig, pt: &Point) -> Result<Option<PairSimulator>, CliError> {
    if cfg.micro.trajectories == 0 {
        return Ok(None);
    }
    if pt.pair.dim != 3 {
        log::warn!("micro reference skipped: the pair oracle is 3D only");
        return Ok(None);
    }
    let micro_err = |e: rdme_core::micro::MicroError| CliError::Config(format!("micro: {e}"));
    let mut mc = MicroConfig::new(&pt.params(), pt.length).map_err(micro_err)?;
    mc.cells_per_sigma = cfg.micro.cells_per_sigma;
    mc.max_steps = cfg.micro.max_steps;
    mc = mc.with_dt(mc.dt * cfg.micro.dt_factor);
    mc.validate().map_err(micro_err)?;
    let sim = match &cfg.micro.cache_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            PairSimulator::with_cache(mc, dir)
        }
        None => PairSimulator::new(mc),
    };
    sim.map(Some).map_err(micro_err)
}

/// Binding-time, rebinding and rate-mode sweep experiments.
pub fn run_samples(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let start = match cfg.kind {
        Kind::BindingTime => Start::Uniform,
        _ => Start::Contact,
    };
    let points = pair_points(cfg)?;
    let mut tables = Vec::new();
    let mut rows = Vec::new();
    let mut unreliable = false;
    for (i, pt) in points.iter().enumerate() {
        let p = pt.params();
        let voxels = (pt.n as f64).powi(pt.pair.dim as i32);
        let volume = pt.length.powi(pt.pair.dim as i32);
        let mut meso_rows = Vec::new();
        let mut ecdfs = Vec::new();
        let mut mode_tables = Vec::new();
        for (m, mode) in modes(cfg, pt.pair.dim).into_iter().enumerate() {
            let model = compile_pair(pt, cfg, mode)?;
            let setup = PairSetup { model: &model, start, max_events: cfg.max_events };
            let samples = setup.sample_many(cfg.trajectories, derive_seed(cfg.seed, &[i as u64, m as u64]), cfg.threads);
            let (times, censored) = split_censored(&samples);
            let s = Summary::new(&times, censored);
            unreliable |= s.censored_fraction() > CENSOR_LIMIT;
            let c = model.channels[0].constant;
            let expected_meso = match start {
                Start::Contact => json!(voxels / c),
                Start::Uniform => serde_json::Value::Null,
            };
            ecdfs.push((mode, Ecdf::new(&times, censored)));
            mode_tables.push((mode, samples));
            let (_, channels) = pair_model(&pt.pair, mode);
            meso_rows.push(json!({
                "mode": mode.name(),
                "stats": stats_json(&s),
                "expected_mean": expected_meso,
                "histogram": log_histogram(&times, censored, 5),
                "model": channel_report(&model, &channels),
            }));
        }
        let stem = pt.stem(cfg.kind);
        if cfg.kind == Kind::Sweep {
            let mut t = Table::new(format!("{stem}.csv"), &["mode", "time_s", "censored"])
                .with_metadata(meta(cfg, pt, ""));
            for (mode, samples) in &mode_tables {
                for &(time, c) in samples {
                    t.push(vec![mode.name().into(), num(time), (c as u8).to_string()]);
                }
            }
            tables.push(t);
        } else {
            let (mode, samples) = &mode_tables[0];
            let extra = format!("mode={}", mode.name());
            tables.push(sample_table(format!("{stem}.csv"), meta(cfg, pt, &extra), samples.iter().copied()));
        }

        let micro_mean_uniform = rates::tau_micro_mean(&p, pt.length).ok().map(|r| r.value);
        let micro_mean_contact = match p.k_r {
            AssocRate::Finite(k) => volume / k,
            AssocRate::Infinite => 0.0,
        };
        let mut row = json!({
            "label": pt.label,
            "value": pt.value,
            "n": pt.n,
            "h": pt.h,
            "length": pt.length,
            "h_star": rates::h_star(&p),
            "meso": meso_rows,
            "micro_estimate": {
                "rebind_mean": finite_or_null(micro_mean_contact),
                "uniform_mean": micro_mean_uniform.map(finite_or_null),
            },
        });
        if let Some(sim) = micro_simulator(cfg, pt)? {
            let init = match start {
                Start::Contact => InitialCondition::Contact,
                Start::Uniform => InitialCondition::Uniform,
            };
            let samples = sim.sample_many(init, cfg.micro.trajectories, derive_seed(cfg.seed, &[i as u64, 1000]), cfg.threads);
            let dist = BindingDistribution::from_samples(&samples);
            let s = dist.summary();
            unreliable |= s.censored_fraction() > CENSOR_LIMIT;
            let t_min = pt.h * pt.h / (2.0 * pt.pair.diffusion);
            let micro_ecdf = dist.ecdf();
            let distances: Vec<_> = ecdfs
                .iter()
                .map(|(mode, e)| json!({ "mode": mode.name(), "t_min": t_min, "sup_distance": sup_distance(e, &micro_ecdf, t_min) }))
                .collect();
            row["micro"] = json!({
                "stats": stats_json(&s),
                "histogram": dist.histogram(5),
                "config": sim.config,
                "ecdf_distance": distances,
            });
            tables.push(sample_table(
                format!("{stem}-micro.csv"),
                meta(cfg, pt, "model=micro"),
                samples.iter().map(|s| (s.time(), s.is_censored())),
            ));
        }
        rows.push(row);
    }
    let mut summary = summary_head(cfg);
    summary["points"] = json!(rows);
    summary["unreliable"] = json!(unreliable);
    let extras = if !cfg.gnuplot || tables.is_empty() { vec![] } else { vec![("plot.gp".to_string(), gnuplot_stub(&tables, "time_s"))] };
    Ok(Bundle { tables, extras, summary, unreliable })
}

/// Time spent with the complex present, after a burn-in.
#[derive(Debug, Default)]
pub struct BoundClock {
    pub burn_in: f64,
    pub complex: usize,
    pub bound: f64,
    pub total: f64,
}

impl Observer for BoundClock {
    fn hold(&mut self, state: &SystemState, from: f64, until: f64) {
        let dt = until - from.max(self.burn_in);
        if dt > 0.0 {
            self.total += dt;
            if state.totals()[self.complex] > 0 {
                self.bound += dt;
            }
        }
    }
}

/// Long-run bound fraction of a single reversible pair, one trajectory.
pub fn bound_fraction_trajectory<R: Rng>(
    model: &CompiledModel,
    horizon: f64,
    burn_in: f64,
    max_events: u64,
    rng: &mut R,
) -> (BoundClock, bool) {
    let setup = PairSetup { model, start: Start::Contact, max_events };
    let state = setup.initial_state(rng);
    let mut clock = BoundClock { burn_in, complex: 2, ..Default::default() };
    let mut engine = Engine::new(model, state, rng);
    let r = nsm::run(&mut engine, StopCondition::Horizon(horizon), Some(max_events), &mut [&mut clock]);
    (clock, r.censored())
}

/// Bound fraction `(1/k_d) / (1/k_d + L^d/k_r)` of a reversible pair.
pub fn equilibrium_bound_fraction(k_r: f64, k_d: f64, volume: f64) -> f64 {
    (1.0 / k_d) / (1.0 / k_d + volume / k_r)
}

pub fn run_equilibrium(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let opts = cfg.equilibrium.expect("checked");
    let points = pair_points(cfg)?;
    let mut tables = Vec::new();
    let mut rows = Vec::new();
    let mut unreliable = false;
    for (i, pt) in points.iter().enumerate() {
        let model = compile_pair(pt, cfg, cfg.rate_mode)?;
        let runs = run_ensemble(cfg.trajectories, derive_seed(cfg.seed, &[i as u64]), cfg.threads, |_, rng| {
            bound_fraction_trajectory(&model, opts.horizon, opts.burn_in, cfg.max_events, rng)
        });
        let mut t = Table::new(format!("{}.csv", pt.stem(cfg.kind)), &["trajectory", "bound_time", "total_time", "bound_fraction"])
            .with_metadata(meta(cfg, pt, &format!("mode={}", cfg.rate_mode.name())));
        let (mut bound, mut total, mut fractions, mut censored) = (0.0, 0.0, Vec::new(), 0);
        for (j, (clock, c)) in runs.iter().enumerate() {
            if *c {
                censored += 1;
                continue;
            }
            bound += clock.bound;
            total += clock.total;
            let f = clock.bound / clock.total;
            fractions.push(f);
            t.push(vec![j.to_string(), num(clock.bound), num(clock.total), num(f)]);
        }
        tables.push(t);
        let s = Summary::new(&fractions, censored);
        unreliable |= s.censored_fraction() > CENSOR_LIMIT;
        let volume = pt.length.powi(pt.pair.dim as i32);
        let predicted = pt.pair.k_r.finite().map(|k| equilibrium_bound_fraction(k, pt.pair.k_d, volume));
        // Stationary law of the compiled chain: bound/unbound = c_bind / (c_unbind K).
        let voxels = model.lattice.voxel_count() as f64;
        let ratio = model.channels[0].constant / (model.channels[1].constant * voxels);
        let (_, channels) = pair_model(&pt.pair, cfg.rate_mode);
        rows.push(json!({
            "label": pt.label,
            "value": pt.value,
            "n": pt.n,
            "h": pt.h,
            "length": pt.length,
            "bound_fraction": bound / total,
            "trajectory_stats": stats_json(&s),
            "predicted": predicted,
            "chain_stationary": ratio / (1.0 + ratio),
            "model": channel_report(&model, &channels),
        }));
    }
    let mut summary = summary_head(cfg);
    summary["points"] = json!(rows);
    summary["unreliable"] = json!(unreliable);
    Ok(Bundle { tables, extras: vec![], summary, unreliable })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_prediction_limits() {
        assert!((equilibrium_bound_fraction(1e-18, 1e4, 1e-22) - 1e-4 / (1e-4 + 1e-4)).abs() < 1e-15);
        assert!(equilibrium_bound_fraction(1e-18, 1e10, 1e-22) < 1e-5);
    }

    #[test]
    fn bound_clock_respects_burn_in() {
        let mut st = SystemState::empty(1, 3);
        let mut c = BoundClock { burn_in: 1.0, complex: 2, ..Default::default() };
        c.hold(&st, 0.0, 0.5);
        c.hold(&st, 0.5, 1.5);
        st.add(0, 2, 1);
        c.hold(&st, 1.5, 2.0);
        assert_eq!((c.bound, c.total), (0.5, 1.0));
    }
}
