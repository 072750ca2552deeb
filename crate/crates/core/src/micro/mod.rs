//! Brownian dynamics of one A–B pair in a periodic cube with a partially
//! absorbing contact sphere, used as the reference for mesoscopic binding
//! and rebinding statistics (3D only).
//!
//! Inside the interaction shell `|r| <= shell * sigma` the relative distance
//! is advanced with a tabulated one-step radial propagator
//! ([`PropagatorTable`]); outside it, free Gaussian steps are taken with a
//! step size proportional to the distance from contact so the sphere cannot
//! be jumped over. Binding is decided against an exponential hazard budget
//! drawn once per sample: each near-field step consumes `-ln S` of it, which
//! is equivalent to a per-step Bernoulli trial with survival `S`.

mod propagator;
pub mod reference;
mod special;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::ensemble::run_ensemble;
use crate::rates::{AssocRate, Dim, PhysicalParams};
use crate::stats::{log_histogram, Ecdf, HistogramBin, Summary};

pub use propagator::{PropagatorTable, FORMAT_VERSION};
pub use special::{erfcx, half_line_robin_density};

#[derive(Debug, Error)]
pub enum MicroError {
    #[error("the pair oracle is 3D only")]
    Unsupported,
    #[error("invalid micro configuration: {0}")]
    InvalidConfig(String),
    #[error("propagator cache: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MicroConfig {
    /// Periodic box side (m).
    pub length: f64,
    /// Near-field propagator step (s).
    pub dt: f64,
    /// Interaction shell radius in units of sigma.
    pub shell: f64,
    #[serde(serialize_with = "serialize_rate")]
    pub k_r: AssocRate<f64>,
    pub k_d: f64,
    pub diffusion: f64,
    pub sigma: f64,
    /// Radial grid resolution of the propagator, cells per sigma.
    pub cells_per_sigma: usize,
    /// Far-field steps have standard deviation `(|r| - sigma) / far_factor`.
    pub far_factor: f64,
    /// Per-sample caps; exceeding either censors the sample.
    pub max_steps: u64,
    pub max_time: f64,
}

fn serialize_rate<S: serde::Serializer>(k: &AssocRate<f64>, s: S) -> Result<S::Ok, S::Error> {
    match k {
        AssocRate::Finite(v) => s.serialize_f64(*v),
        AssocRate::Infinite => s.serialize_str("inf"),
    }
}

impl MicroConfig {
    /// Defaults: `dt = sigma² / (2D)`, shell 5, 20 cells per sigma.
    pub fn new(p: &PhysicalParams<f64>, length: f64) -> Result<Self, MicroError> {
        if p.dim != Dim::Three {
            return Err(MicroError::Unsupported);
        }
        let c = Self {
            length,
            dt: p.sigma * p.sigma / (2.0 * p.diffusion),
            shell: 5.0,
            k_r: p.k_r,
            k_d: p.k_d,
            diffusion: p.diffusion,
            sigma: p.sigma,
            cells_per_sigma: 20,
            far_factor: 5.0,
            max_steps: 200_000_000,
            max_time: f64::INFINITY,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<(), MicroError> {
        let bad = |m: String| Err(MicroError::InvalidConfig(m));
        if !(self.sigma > 0.0 && self.diffusion > 0.0 && self.dt > 0.0) {
            return bad("sigma, D and dt must be positive".into());
        }
        if !(self.shell > 1.0) {
            return bad(format!("shell {} must exceed 1", self.shell));
        }
        if !((2.0 * self.diffusion * self.dt).sqrt() < (self.shell - 1.0) * self.sigma / 3.0) {
            return bad("dt too large: sqrt(2 D dt) must stay below (shell - 1) sigma / 3".into());
        }
        if !(self.length > 2.0 * self.shell * self.sigma) {
            return bad(format!(
                "box side {:e} m must exceed twice the shell radius {:e} m",
                self.length,
                self.shell * self.sigma
            ));
        }
        if self.cells_per_sigma < 2 || !(self.far_factor >= 3.0) {
            return bad("cells_per_sigma >= 2 and far_factor >= 3 required".into());
        }
        if let AssocRate::Finite(k) = self.k_r {
            if !(k >= 0.0 && k.is_finite()) {
                return bad("k_r must be non-negative".into());
            }
        }
        if !(self.k_d >= 0.0 && self.k_d.is_finite()) {
            return bad("k_d must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialCondition {
    /// Relative position uniform over the box outside the contact sphere.
    Uniform,
    /// Just dissociated: `|r| = sigma`.
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState {
    /// Minimum-image relative position (m).
    pub r: [f64; 3],
    pub t: f64,
    pub bound: bool,
    /// Remaining exponential hazard budget before binding.
    pub hazard: f64,
}

impl PairState {
    pub fn distance(&self) -> f64 {
        norm(&self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BindingSample {
    Bound(f64),
    /// Cap reached at this time without binding.
    Censored(f64),
}

impl BindingSample {
    pub fn time(self) -> f64 {
        match self {
            Self::Bound(t) | Self::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, Self::Censored(_))
    }
}

/// Binding-time samples with censoring kept separate.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingDistribution {
    /// Sorted binding times of the uncensored samples.
    pub times: Vec<f64>,
    pub censored: usize,
}

impl BindingDistribution {
    pub fn from_samples(samples: &[BindingSample]) -> Self {
        let mut times: Vec<f64> = samples
            .iter()
            .filter_map(|s| match s {
                BindingSample::Bound(t) => Some(*t),
                BindingSample::Censored(_) => None,
            })
            .collect();
        times.sort_by(f64::total_cmp);
        Self {
            censored: samples.len() - times.len(),
            times,
        }
    }

    pub fn ecdf(&self) -> Ecdf {
        Ecdf::new(&self.times, self.censored)
    }

    pub fn summary(&self) -> Summary {
        Summary::new(&self.times, self.censored)
    }

    pub fn histogram(&self, bins_per_decade: usize) -> Vec<HistogramBin> {
        log_histogram(&self.times, self.censored, bins_per_decade)
    }
}

/// Accumulated times of an alternating unbound/bound renewal trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReversibleTally {
    pub bound_time: f64,
    pub unbound_time: f64,
    pub cycles: usize,
    pub censored: usize,
}

impl ReversibleTally {
    pub fn bound_fraction(&self) -> f64 {
        self.bound_time / (self.bound_time + self.unbound_time)
    }

    fn merge(mut self, other: Self) -> Self {
        self.bound_time += other.bound_time;
        self.unbound_time += other.unbound_time;
        self.cycles += other.cycles;
        self.censored += other.censored;
        self
    }
}

/// Table-driven pair simulator; shareable across threads.
#[derive(Debug, Clone)]
pub struct PairSimulator {
    pub config: MicroConfig,
    pub table: PropagatorTable,
}

pub(crate) fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn wrap(v: &mut [f64; 3], length: f64) {
    for x in v.iter_mut() {
        *x -= length * (*x / length).round();
    }
}

pub(crate) fn gaussian3<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ]
}

/// Folds a point that ended inside the contact sphere back out radially.
pub(crate) fn reflect_out(v: &mut [f64; 3], sigma: f64) {
    let r = norm(v);
    if r < sigma {
        let target = (2.0 * sigma - r).max(sigma);
        if r > 0.0 {
            for x in v.iter_mut() {
                *x *= target / r;
            }
        } else {
            *v = [sigma, 0.0, 0.0];
        }
    }
}

pub(crate) fn initial_state<R: Rng + ?Sized>(
    config: &MicroConfig,
    init: InitialCondition,
    rng: &mut R,
) -> PairState {
    let r = match init {
        InitialCondition::Uniform => loop {
            let v = [
                (rng.random::<f64>() - 0.5) * config.length,
                (rng.random::<f64>() - 0.5) * config.length,
                (rng.random::<f64>() - 0.5) * config.length,
            ];
            if norm(&v) >= config.sigma {
                break v;
            }
        },
        InitialCondition::Contact => {
            let g = gaussian3(rng);
            let n = norm(&g);
            [
                g[0] / n * config.sigma,
                g[1] / n * config.sigma,
                g[2] / n * config.sigma,
            ]
        }
    };
    let u: f64 = rng.random();
    PairState {
        r,
        t: 0.0,
        bound: false,
        hazard: -(-u).ln_1p(),
    }
}

/// Free Gaussian step whose size keeps the contact sphere out of reach.
pub(crate) fn far_step<R: Rng + ?Sized>(config: &MicroConfig, state: &mut PairState, rng: &mut R) {
    let r = state.distance();
    let sd = ((r - config.sigma) / config.far_factor).min(config.length / 4.0);
    let g = gaussian3(rng);
    for (x, gk) in state.r.iter_mut().zip(g) {
        *x += sd * gk;
    }
    wrap(&mut state.r, config.length);
    reflect_out(&mut state.r, config.sigma);
    state.t += sd * sd / (2.0 * config.diffusion);
}

impl PairSimulator {
    pub fn new(config: MicroConfig) -> Result<Self, MicroError> {
        config.validate()?;
        Ok(Self {
            table: PropagatorTable::build(&config),
            config,
        })
    }

    /// Like [`new`](Self::new) with the propagator cached under `dir`.
    pub fn with_cache(config: MicroConfig, dir: &std::path::Path) -> Result<Self, MicroError> {
        config.validate()?;
        Ok(Self {
            table: PropagatorTable::load_or_build(&config, dir)?,
            config,
        })
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, init: InitialCondition, rng: &mut R) -> PairState {
        initial_state(&self.config, init, rng)
    }

    /// Advances an unbound pair by one near-field or far-field step.
    ///
    /// # Panics
    /// If the pair is bound or inside the contact sphere.
    pub fn pair_step<R: Rng + ?Sized>(&self, state: &mut PairState, rng: &mut R) {
        let c = &self.config;
        let r = state.distance();
        assert!(!state.bound, "pair_step on a bound pair");
        assert!(
            r >= c.sigma * (1.0 - 1e-9),
            "pair inside the contact sphere: |r| = {r:e} < sigma = {:e}",
            c.sigma
        );
        if r > c.shell * c.sigma {
            far_step(c, state, rng);
            return;
        }
        let s = self.table.survival(r);
        let hazard = if s > 0.0 { -s.ln() } else { f64::INFINITY };
        if hazard >= state.hazard {
            let frac = if hazard.is_finite() {
                state.hazard / hazard
            } else {
                0.0
            };
            state.t += c.dt * frac;
            state.hazard = 0.0;
            state.bound = true;
            return;
        }
        state.hazard -= hazard;
        let r1 = self.table.sample_radius(r.max(c.sigma), rng);
        let sd = (2.0 * c.diffusion * c.dt).sqrt();
        let g = gaussian3(rng);
        let mut dir = [
            state.r[0] + sd * g[0],
            state.r[1] + sd * g[1],
            state.r[2] + sd * g[2],
        ];
        let n = norm(&dir);
        if n == 0.0 {
            dir = state.r;
        }
        let n = norm(&dir);
        for (x, d) in state.r.iter_mut().zip(dir) {
            *x = d / n * r1;
        }
        wrap(&mut state.r, c.length);
        reflect_out(&mut state.r, c.sigma);
        state.t += c.dt;
    }

    /// First binding time of a pair started from `init`.
    pub fn sample_binding_time<R: Rng + ?Sized>(
        &self,
        init: InitialCondition,
        rng: &mut R,
    ) -> BindingSample {
        if self.config.k_r.is_zero() {
            return BindingSample::Censored(0.0);
        }
        let mut state = self.initial_state(init, rng);
        self.run_to_binding(&mut state, rng)
    }

    fn run_to_binding<R: Rng + ?Sized>(&self, state: &mut PairState, rng: &mut R) -> BindingSample {
        let mut steps = 0u64;
        while !state.bound {
            if steps >= self.config.max_steps || state.t >= self.config.max_time {
                return BindingSample::Censored(state.t);
            }
            self.pair_step(state, rng);
            steps += 1;
        }
        BindingSample::Bound(state.t)
    }

    /// `n` independent binding times, in parallel and ordered by index.
    pub fn sample_many(
        &self,
        init: InitialCondition,
        n: usize,
        seed: u64,
        threads: Option<usize>,
    ) -> Vec<BindingSample> {
        run_ensemble(n, seed, threads, |_, rng| self.sample_binding_time(init, rng))
    }

    /// `n` contact-initialised rebinding times.
    pub fn sample_rebinding_distribution(
        &self,
        n: usize,
        seed: u64,
        threads: Option<usize>,
    ) -> BindingDistribution {
        assert!(n >= 1, "at least one sample");
        BindingDistribution::from_samples(&self.sample_many(InitialCondition::Contact, n, seed, threads))
    }

    /// Alternating rebinding and `Exp(k_d)` bound periods, `cycles` per
    /// trajectory over `trajectories` independent streams.
    pub fn reversible_tally(
        &self,
        trajectories: usize,
        cycles: usize,
        seed: u64,
        threads: Option<usize>,
    ) -> ReversibleTally {
        let k_d = self.config.k_d;
        assert!(k_d > 0.0, "reversible runs need k_d > 0");
        run_ensemble(trajectories, seed, threads, |_, rng| {
            let mut tally = ReversibleTally::default();
            for _ in 0..cycles {
                match self.sample_binding_time(InitialCondition::Contact, rng) {
                    BindingSample::Bound(t) => tally.unbound_time += t,
                    BindingSample::Censored(t) => {
                        tally.unbound_time += t;
                        tally.censored += 1;
                        break;
                    }
                }
                let u: f64 = rng.random();
                tally.bound_time += -(-u).ln_1p() / k_d;
                tally.cycles += 1;
            }
            tally
        })
        .into_iter()
        .fold(ReversibleTally::default(), ReversibleTally::merge)
    }
}
