use rand::Rng;

use super::EventQueue;
use crate::model::{reaction_propensity, CompiledModel, StoichVector, SystemState, NO_NEIGHBOR};

/// How the clocks of voxels touched by an event are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockUpdate {
    /// Fresh exponential for every affected voxel.
    #[default]
    Redraw,
    /// `t + (a_old / a_new) (tau_old - t)` for affected voxels other than the
    /// one that fired; the firing voxel is always redrawn.
    Rescale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Reaction { channel: usize },
    Diffusion { species: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub voxel: usize,
    pub kind: EventKind,
    pub stoich: StoichVector,
}

/// Next Subvolume Method sampler for one trajectory.
pub struct Engine<'m, R> {
    model: &'m CompiledModel,
    state: SystemState,
    rng: R,
    time: f64,
    queue: EventQueue,
    reaction_sum: Vec<f64>,
    diffusion_sum: Vec<f64>,
    clock_update: ClockUpdate,
    events: u64,
}

/// `-ln(1 - u) / a` with `u` uniform on `[0, 1)`; infinite for `a = 0`.
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    if rate > 0.0 {
        let u: f64 = rng.random();
        -(-u).ln_1p() / rate
    } else {
        f64::INFINITY
    }
}

impl<'m, R: Rng> Engine<'m, R> {
    /// # Panics
    /// If `initial` does not match the model's voxel and species counts.
    pub fn new(model: &'m CompiledModel, initial: SystemState, rng: R) -> Self {
        Self::with_clock_update(model, initial, rng, ClockUpdate::default())
    }

    pub fn with_clock_update(
        model: &'m CompiledModel,
        initial: SystemState,
        mut rng: R,
        clock_update: ClockUpdate,
    ) -> Self {
        let k = model.lattice.voxel_count();
        assert_eq!(initial.voxel_count(), k, "state voxel count");
        assert_eq!(initial.species_count(), model.species.len(), "state species count");
        let mut reaction_sum = vec![0.0; k];
        let mut diffusion_sum = vec![0.0; k];
        let mut keys = vec![f64::INFINITY; k];
        for v in 0..k {
            let (r, d) = voxel_propensities(model, &initial, v);
            reaction_sum[v] = r;
            diffusion_sum[v] = d;
            keys[v] = exponential(&mut rng, r + d);
        }
        Self {
            model,
            state: initial,
            rng,
            time: 0.0,
            queue: EventQueue::new(keys),
            reaction_sum,
            diffusion_sum,
            clock_update,
            events: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn into_state(self) -> SystemState {
        self.state
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn model(&self) -> &'m CompiledModel {
        self.model
    }

    /// Time of the next event, infinite once the system is exhausted.
    pub fn peek_time(&self) -> f64 {
        self.queue.peek().map_or(f64::INFINITY, |(_, t)| t)
    }

    /// Total propensity of `voxel` as currently stored.
    pub fn voxel_propensity(&self, voxel: usize) -> f64 {
        self.reaction_sum[voxel] + self.diffusion_sum[voxel]
    }

    /// Fires the earliest event; `None` once every clock is infinite.
    pub fn step(&mut self) -> Option<Event> {
        let (voxel, t) = self.queue.peek()?;
        if !t.is_finite() {
            return None;
        }
        self.time = t;
        let (kind, stoich) = self.choose(voxel);
        let mut affected = self.state.apply(&stoich);
        if !affected.contains(&voxel) {
            affected.push(voxel);
        }
        for &v in &affected {
            let old = self.voxel_propensity(v);
            let (r, d) = voxel_propensities(self.model, &self.state, v);
            self.reaction_sum[v] = r;
            self.diffusion_sum[v] = d;
            let next = match self.clock_update {
                ClockUpdate::Rescale if v != voxel && old > 0.0 && r + d > 0.0 => {
                    t + old / (r + d) * (self.queue.key(v) - t)
                }
                _ => t + exponential(&mut self.rng, r + d),
            };
            self.queue.update(v, next);
        }
        self.events += 1;
        Some(Event {
            time: t,
            voxel,
            kind,
            stoich,
        })
    }

    fn choose(&mut self, voxel: usize) -> (EventKind, StoichVector) {
        let r = self.reaction_sum[voxel];
        let d = self.diffusion_sum[voxel];
        let u = self.rng.random::<f64>() * (r + d);
        let counts = self.state.voxel(voxel);
        if u < r || d == 0.0 {
            let weights = self
                .model
                .channels
                .iter()
                .map(|ch| reaction_propensity(ch, counts));
            let c = categorical(weights, u.min(r));
            let deltas = &self.model.channels[c].deltas;
            (
                EventKind::Reaction { channel: c },
                StoichVector::reaction(voxel, deltas),
            )
        } else {
            let rates = &self.model.jump_rates;
            let weights = counts
                .iter()
                .zip(rates)
                .map(|(&x, &rate)| x as f64 * rate);
            let total: f64 = counts.iter().zip(rates).map(|(&x, &g)| x as f64 * g).sum();
            let s = categorical(weights, self.rng.random::<f64>() * total);
            let open: smallvec::SmallVec<[usize; 6]> = self
                .model
                .neighbors_of(voxel)
                .iter()
                .filter(|&&w| w != NO_NEIGHBOR)
                .map(|&w| w as usize)
                .collect();
            let to = open[self.rng.random_range(0..open.len())];
            (
                EventKind::Diffusion { species: s, to },
                StoichVector::diffusion(s, voxel, to),
            )
        }
    }

    /// Compares stored propensities and clocks against a from-scratch
    /// recomputation.
    pub fn check_integrity(&self) -> Result<(), String> {
        if !self.queue.is_consistent() {
            return Err("event queue heap property violated".into());
        }
        let mut totals = vec![0u64; self.model.species.len()];
        for v in 0..self.model.lattice.voxel_count() {
            let (r, d) = voxel_propensities(self.model, &self.state, v);
            if r != self.reaction_sum[v] || d != self.diffusion_sum[v] {
                return Err(format!(
                    "voxel {v}: stored ({}, {}) recomputed ({r}, {d})",
                    self.reaction_sum[v], self.diffusion_sum[v]
                ));
            }
            let key = self.queue.key(v);
            if key.is_infinite() != (r + d == 0.0) {
                return Err(format!("voxel {v}: clock {key} with propensity {}", r + d));
            }
            if key < self.time {
                return Err(format!("voxel {v}: clock {key} behind time {}", self.time));
            }
            for (s, &x) in self.state.voxel(v).iter().enumerate() {
                totals[s] += x as u64;
            }
        }
        if totals != self.state.totals() {
            return Err("cached species totals out of date".into());
        }
        Ok(())
    }
}

/// Reaction and diffusion propensity sums of one voxel.
pub fn voxel_propensities(model: &CompiledModel, state: &SystemState, voxel: usize) -> (f64, f64) {
    let counts = state.voxel(voxel);
    let reaction: f64 = model
        .channels
        .iter()
        .map(|ch| reaction_propensity(ch, counts))
        .sum();
    let open = model.open_directions(voxel) as f64;
    let diffusion: f64 = counts
        .iter()
        .zip(&model.jump_rates)
        .map(|(&x, &rate)| x as f64 * rate * open)
        .sum();
    (reaction, diffusion)
}

/// Index drawn by scanning cumulative `weights` against `target`; rounding
/// past the end falls back to the last positive weight.
fn categorical(weights: impl Iterator<Item = f64>, target: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    last
}
