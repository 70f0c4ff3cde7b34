//! Few-body celestial mechanics workbench.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics:
//!
//! * [`partitions`]: the set-partition lattice of the particle index set,
//!   joins, refinement and the ordered messenger tuples.
//! * [`mass`]: mass-metric geometry, cluster projections and the
//!   external/internal splits of angular momentum, kinetic and potential
//!   energy.
//! * [`graf`]: the Graf max-function, region lookup, cluster timelines and
//!   von Zeipel series.
//! * [`kinmodel`]: the three-particle kinematical collision model and the
//!   verifier for its growth, sign and alignment properties.
//! * [`nbody`]: homogeneous pair potentials, an adaptive 8th order
//!   integrator, messenger-episode extraction and Poincaré surfaces.
//!
//! File formats, configuration and the command line live in the companion
//! `fewbody` crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod graf;
pub mod kinmodel;
pub mod mass;
pub mod nbody;
pub mod partitions;
pub mod path;
pub mod potential;
pub(crate) mod vecops;

pub use error::{Error, Result};
pub use mass::{MassSystem, PhaseState};
pub use partitions::{MessengerTuple, Partition};
pub use potential::PotentialSpec;
