//! Next Subvolume Method: exact event-driven sampling of the lattice master
//! equation.
//!
//! Each voxel owns an exponential clock with rate equal to its total
//! reaction plus diffusion propensity. The earliest clock fires; within the
//! voxel a reaction or a jump is chosen proportionally to the propensities,
//! and only the voxels touched by the event have their propensities and
//! clocks refreshed.

mod engine;
mod queue;

use serde::Serialize;

pub use engine::{exponential, voxel_propensities, ClockUpdate, Engine, Event, EventKind};
pub use queue::EventQueue;

use crate::model::{CompiledModel, SystemState};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    /// Run until time `T`; the state is held constant up to `T`.
    Horizon(f64),
    /// Stop at the first firing of this channel.
    FirstFiring(usize),
    /// Stop after this many events.
    EventCount(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Horizon,
    ChannelFired,
    EventCount,
    /// Every clock is infinite and the stop condition cannot be met.
    Exhausted,
    /// The safety cap on events was reached first.
    Censored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub stop_time: f64,
    pub reason: StopReason,
    pub events: u64,
    pub final_state: SystemState,
}

impl TrajectoryResult {
    pub fn censored(&self) -> bool {
        matches!(self.reason, StopReason::Censored | StopReason::Exhausted)
    }
}

/// Callbacks fed by [`run`].
pub trait Observer {
    /// The state is constant on `[from, until)`.
    fn hold(&mut self, _state: &SystemState, _from: f64, _until: f64) {}
    /// Called after `event` has been applied to `state`.
    fn event(&mut self, _model: &CompiledModel, _event: &Event, _state: &SystemState) {}
    /// Final state at the stop time.
    fn finish(&mut self, _state: &SystemState, _time: f64) {}
}

/// Runs `engine` until `stop` or until `max_events` further events fire.
pub fn run<R: Rng>(
    engine: &mut Engine<'_, R>,
    stop: StopCondition,
    max_events: Option<u64>,
    observers: &mut [&mut dyn Observer],
) -> TrajectoryResult {
    let cap = max_events.unwrap_or(u64::MAX);
    let mut fired = 0u64;
    let reason = loop {
        if let StopCondition::EventCount(n) = stop {
            if fired >= n {
                break StopReason::EventCount;
            }
        }
        let next = engine.peek_time();
        if let StopCondition::Horizon(t_end) = stop {
            if next >= t_end {
                for o in observers.iter_mut() {
                    o.hold(engine.state(), engine.time(), t_end);
                }
                break StopReason::Horizon;
            }
        }
        if !next.is_finite() {
            break StopReason::Exhausted;
        }
        if fired >= cap {
            break StopReason::Censored;
        }
        for o in observers.iter_mut() {
            o.hold(engine.state(), engine.time(), next);
        }
        let event = engine.step().expect("finite clock");
        fired += 1;
        for o in observers.iter_mut() {
            o.event(engine.model(), &event, engine.state());
        }
        if let (StopCondition::FirstFiring(c), EventKind::Reaction { channel }) = (stop, event.kind) {
            if c == channel {
                break StopReason::ChannelFired;
            }
        }
    };
    let stop_time = match (reason, stop) {
        (StopReason::Horizon, StopCondition::Horizon(t)) => t,
        _ => engine.time(),
    };
    for o in observers.iter_mut() {
        o.finish(engine.state(), stop_time);
    }
    TrajectoryResult {
        stop_time,
        reason,
        events: fired,
        final_state: engine.state().clone(),
    }
}

/// Species totals sampled on the grid `0, dt, 2 dt, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub interval: f64,
    pub times: Vec<f64>,
    pub totals: Vec<Vec<u64>>,
}

impl TimeSeries {
    pub fn new(interval: f64) -> Self {
        assert!(interval > 0.0, "sampling interval must be positive");
        Self {
            interval,
            times: Vec::new(),
            totals: Vec::new(),
        }
    }

    fn next_time(&self) -> f64 {
        self.times.len() as f64 * self.interval
    }
}

impl Observer for TimeSeries {
    fn hold(&mut self, state: &SystemState, _from: f64, until: f64) {
        while self.next_time() < until {
            self.times.push(self.next_time());
            self.totals.push(state.totals().to_vec());
        }
    }

    fn finish(&mut self, state: &SystemState, time: f64) {
        while self.next_time() <= time {
            self.times.push(self.next_time());
            self.totals.push(state.totals().to_vec());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRow {
    pub time: f64,
    pub voxel: usize,
    /// Channel name, or `diffusion` for jumps.
    pub channel: String,
    /// `name:delta` pairs separated by `;`; jumps add `@voxel`.
    pub species_deltas: String,
}

/// Records every event as an [`EventRow`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub rows: Vec<EventRow>,
}

impl Observer for EventLog {
    fn event(&mut self, model: &CompiledModel, event: &Event, _state: &SystemState) {
        let (channel, deltas) = match event.kind {
            EventKind::Reaction { channel } => (
                model.channels[channel].name.clone(),
                event
                    .stoich
                    .entries
                    .iter()
                    .map(|&(_, s, d)| format!("{}:{:+}", model.species[s].name, d))
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            EventKind::Diffusion { .. } => (
                "diffusion".to_string(),
                event
                    .stoich
                    .entries
                    .iter()
                    .map(|&(v, s, d)| format!("{}:{:+}@{}", model.species[s].name, d, v))
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
        };
        self.rows.push(EventRow {
            time: event.time,
            voxel: event.voxel,
            channel,
            species_deltas: deltas,
        });
    }
}
