//! Half-activation time of a signalling readout against the diffusion
//! constant, for both association rate laws.

use rdme_core::ensemble::run_ensemble;
use serde::Serialize;
use serde_json::json;

use super::simulate::{load_and_compile, sampled_trajectory};
use super::{channel_report, derive_seed, summary_head};
use crate::config::{ExperimentConfig, RateMode};
use crate::error::CliError;
use crate::output::{num, Bundle, Table, CENSOR_LIMIT};

/// Ensemble-mean readout over time for one rate mode and diffusion constant.
#[derive(Debug, Clone, Serialize)]
pub struct MapkCurve {
    pub mode: RateMode,
    pub diffusion: f64,
    pub h: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub mean: Vec<f64>,
    pub steady: f64,
    pub tau_res: Option<f64>,
    pub trajectories: usize,
    pub censored: usize,
}

/// Steady level (mean of the curve for `t >= steady_from`) and the first
/// time the curve reaches half of it, interpolated linearly between grid
/// points.
pub fn tau_res(times: &[f64], mean: &[f64], steady_from: f64) -> (f64, Option<f64>) {
    let tail: Vec<f64> = times
        .iter()
        .zip(mean)
        .filter(|(t, _)| **t >= steady_from)
        .map(|(_, m)| *m)
        .collect();
    if tail.is_empty() {
        return (f64::NAN, None);
    }
    let steady = tail.iter().sum::<f64>() / tail.len() as f64;
    let half = steady / 2.0;
    if half.is_nan() || half <= 0.0 {
        return (steady, None);
    }
    for i in 0..mean.len() {
        if mean[i] >= half {
            if i == 0 {
                return (steady, Some(times[0]));
            }
            let (t0, t1, m0, m1) = (times[i - 1], times[i], mean[i - 1], mean[i]);
            return (steady, Some(t0 + (half - m0) / (m1 - m0) * (t1 - t0)));
        }
    }
    (steady, None)
}

fn relative_gap(hhp: &MapkCurve, ck: &MapkCurve) -> Option<f64> {
    Some((hhp.tau_res? - ck.tau_res?).abs() / ck.tau_res?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let opts = cfg.mapk.clone().expect("checked");
    let mut table = Table::new("mapk.csv", &["mode", "D", "time", "mean_readout"])
        .with_metadata(format!("kind=mapk readout={} seed={}", opts.readout, cfg.seed));
    let mut curves = Vec::new();
    let mut reports = Vec::new();
    let mut unreliable = false;
    for (m, &mode) in opts.modes.iter().enumerate() {
        for (j, &d) in opts.diffusion.iter().enumerate() {
            let (built, model) = load_and_compile(cfg, mode, Some(d))?;
            let readout = model
                .species_index(&opts.readout)
                .ok_or_else(|| CliError::Config(format!("readout species {:?} not in the model", opts.readout)))?;
            let seed = derive_seed(cfg.seed, &[m as u64, j as u64]);
            let runs = run_ensemble(cfg.trajectories, seed, cfg.threads, |_, rng| {
                let (series, r) = sampled_trajectory(&model, &built.initial, opts.horizon, opts.interval, cfg.max_events, None, rng);
                (series, r.censored())
            });
            let kept: Vec<_> = runs.iter().filter(|(_, c)| !c).map(|(s, _)| s).collect();
            let censored = runs.len() - kept.len();
            unreliable |= censored as f64 / runs.len() as f64 > CENSOR_LIMIT;
            let times = kept.first().map(|s| s.times.clone()).unwrap_or_default();
            let mean: Vec<f64> = (0..times.len())
                .map(|k| kept.iter().map(|s| s.totals[k][readout] as f64).sum::<f64>() / kept.len() as f64)
                .collect();
            let (steady, tau) = tau_res(&times, &mean, opts.steady_from * opts.horizon);
            for (t, v) in times.iter().zip(&mean) {
                table.push(vec![mode.name().into(), num(d), num(*t), num(*v)]);
            }
            reports.push(json!({
                "mode": mode.name(),
                "D": d,
                "model": channel_report(&model, &built.channels),
            }));
            curves.push(MapkCurve {
                mode,
                diffusion: d,
                h: model.lattice.h(),
                times,
                mean,
                steady,
                tau_res: tau,
                trajectories: runs.len(),
                censored,
            });
        }
    }
    let find = |mode: RateMode, d: f64| curves.iter().find(|c| c.mode == mode && c.diffusion == d);
    let gaps: Vec<_> = opts
        .diffusion
        .iter()
        .map(|&d| {
            let gap = find(RateMode::Hhp, d).zip(find(RateMode::Ck, d)).and_then(|(h, c)| relative_gap(h, c));
            json!({ "D": d, "relative_gap": gap })
        })
        .collect();
    let d_min = opts.diffusion.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = opts.diffusion.iter().copied().fold(0.0, f64::max);
    let gap_at = |d: f64| find(RateMode::Hhp, d).zip(find(RateMode::Ck, d)).and_then(|(h, c)| relative_gap(h, c));
    let trend = gap_at(d_max).zip(gap_at(d_min)).map(|(hi, lo)| hi / lo);

    let mut summary = summary_head(cfg);
    summary["curves"] = json!(curves);
    summary["models"] = json!(reports);
    summary["gaps"] = json!(gaps);
    summary["gap_ratio_max_over_min_d"] = json!(trend);
    summary["unreliable"] = json!(unreliable);
    Ok(Bundle { tables: vec![table], extras: vec![], summary, unreliable })
}
