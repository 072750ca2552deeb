//! Reaction-diffusion model description and compilation.
//!
//! A model is a list of [`SpeciesSpec`], a list of [`ReactionChannel`] and a
//! [`LatticeSpec`]. [`compile_model`] resolves every channel into a single
//! per-voxel propensity constant for the lattice's voxel width.
//!
//! Bimolecular propensities follow mass action, `c * x_A * x_B`. Homodimer
//! channels `A + A` use the combinatorial `c * x_A (x_A - 1) / 2`, where `c`
//! is the per-pair constant; the multiscale rate derivation formally covers
//! hetero-pairs only and is applied to `A + A` with `D = 2 gamma_A` and
//! `sigma = 2 r_A`.

mod compile;
mod lattice;
mod state;

use serde::Serialize;
use thiserror::Error;

use crate::rates::{AssocRate, RateError};

pub use compile::{
    compile_model, diffusion_propensity, reaction_propensity, ChannelDiagnostics, CompileOptions,
    CompileWarning, CompiledChannel, CompiledModel, Reactants,
};
pub use lattice::{Boundary, LatticeSpec, NO_NEIGHBOR};
pub use state::{StoichVector, SystemState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesSpec {
    pub name: String,
    /// Diffusion coefficient in m²/s.
    pub gamma: f64,
    /// Molecular radius in m.
    pub radius: f64,
}

impl SpeciesSpec {
    pub fn new(name: impl Into<String>, gamma: f64, radius: f64) -> Self {
        Self {
            name: name.into(),
            gamma,
            radius,
        }
    }
}

/// Pair parameters given directly instead of derived from the species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairOverride {
    pub diffusion: f64,
    pub sigma: f64,
}

/// How a channel's mesoscopic constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateLaw {
    /// Mesh-dependent multiscale rate from the intrinsic `k_r` (bimolecular).
    Multiscale { k_r: AssocRate<f64> },
    /// Collins–Kimball rate divided by the voxel volume (bimolecular, 3D).
    CollinsKimball { k_r: AssocRate<f64> },
    /// Constant given directly: per voxel for bimolecular, per molecule for
    /// unimolecular and per voxel for zero-order channels.
    Mesoscopic { rate: f64 },
    /// Unimolecular reverse of the bimolecular channel `association`.
    /// Resolves to the detailed-balance rate when that channel is
    /// multiscale and to `k_d` otherwise.
    Dissociation { k_d: f64, association: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionChannel {
    pub name: String,
    pub reactants: Vec<usize>,
    pub products: Vec<usize>,
    pub rate: RateLaw,
    pub pair: Option<PairOverride>,
}

impl ReactionChannel {
    pub fn new(
        name: impl Into<String>,
        reactants: Vec<usize>,
        products: Vec<usize>,
        rate: RateLaw,
    ) -> Self {
        Self {
            name: name.into(),
            reactants,
            products,
            rate,
            pair: None,
        }
    }

    pub fn with_pair(mut self, pair: PairOverride) -> Self {
        self.pair = Some(pair);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid species {name:?}: {reason}")]
    InvalidSpecies { name: String, reason: String },
    #[error("channel {channel:?}: {reason}")]
    InvalidChannel { channel: String, reason: String },
    #[error("channel {channel:?}: no valid mesoscopic rate at h = {h:e} m (critical width h*_kr = {h_star_kr:e} m)")]
    NoValidRate {
        channel: String,
        h: f64,
        h_star_kr: f64,
    },
    #[error("channel {channel:?}: {reason}")]
    Unsupported { channel: String, reason: String },
    #[error("channel {channel:?}: {source}")]
    Rate {
        channel: String,
        #[source]
        source: RateError,
    },
}
