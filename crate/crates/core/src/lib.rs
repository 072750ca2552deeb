//! Stochastic reaction-diffusion simulation on Cartesian lattices with
//! mesh-dependent mesoscopic reaction rates.
//!
//! * [`rates`]: closed-form association/dissociation constants, critical
//!   mesh sizes and error bounds, generic over the scalar type.
//! * [`model`]: species, reaction channels and lattices compiled into
//!   per-voxel propensity constants.
//! * [`nsm`]: the Next Subvolume Method event-driven sampler.
//! * [`micro`]: a Brownian-dynamics oracle for a single reacting pair with a
//!   partially absorbing contact boundary.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod micro;
pub mod model;
pub mod nsm;
pub mod rates;
pub mod scalar;
pub mod stats;

pub use rates::{AssocRate, Dim, RateError};
pub use scalar::Real;

/// Double-precision aliases used throughout the simulators.
pub type PhysicalParams = rates::PhysicalParams<f64>;
pub type PhysicalParamsF32 = rates::PhysicalParams<f32>;
pub type MeshContext = rates::MeshContext<f64>;
pub type CriticalSizes = rates::CriticalSizes<f64>;
pub type Rated = rates::Rated<f64>;
pub type MeshBound = rates::MeshBound<f64>;
pub type RateK = rates::AssocRate<f64>;
