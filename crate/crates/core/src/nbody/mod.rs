//! N-body dynamics for homogeneous pair potentials: scenarios, an adaptive
//! 8th order integrator, messenger-episode extraction and Poincaré surfaces.

pub mod episodes;
pub mod integrator;
pub mod poincare;
pub mod trajectory;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graf::GrafParams;
use crate::mass::{kinetic_energy, MassSystem, PhaseState};
use crate::potential::PotentialSpec;

pub use crate::mass::to_com_frame;
pub use episodes::{detect_episodes, nontrivial_cluster_diagnostics, EpisodeRecord};
pub use integrator::{integrate, IntegratorParams, StopReason};
pub use poincare::{count_crossings, poincare_membership, PoincareSurfaceSpec};
pub use trajectory::{Trajectory, TrajectoryRecord};

/// Poincaré surface parameters used by episode analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareParams {
    /// Surface indices `m ≥ 2` to scan.
    #[serde(default)]
    pub m: Vec<u32>,
    /// Angular-momentum cap `𝔏`.
    #[serde(default = "default_ell")]
    pub ell: f64,
}

fn default_ell() -> f64 {
    10.0
}

impl Default for PoincareParams {
    fn default() -> Self {
        PoincareParams {
            m: Vec::new(),
            ell: default_ell(),
        }
    }
}

/// Complete description of an N-body run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: MassSystem,
    pub potential: PotentialSpec,
    pub initial: PhaseState,
    pub integrator: IntegratorParams,
    pub graf: GrafParams,
    pub poincare: PoincareParams,
    /// Shift the initial state to the centre-of-mass frame before running.
    pub com_frame: bool,
}

impl Scenario {
    pub fn new(system: MassSystem, potential: PotentialSpec, initial: PhaseState, t_end: f64) -> Self {
        Scenario {
            system,
            potential,
            initial,
            integrator: IntegratorParams::until(t_end),
            graf: GrafParams::default(),
            poincare: PoincareParams::default(),
            com_frame: false,
        }
    }

    /// `H = K + V`.
    pub fn energy(&self, state: &PhaseState) -> Result<f64> {
        energy(&self.system, &self.potential, state)
    }

    /// `ṗ = -∇V(q)`.
    pub fn forces(&self, state: &PhaseState) -> Result<Vec<f64>> {
        self.potential.forces(&self.system, &state.q)
    }

    /// Initial state after the optional frame shift.
    pub fn start_state(&self) -> Result<PhaseState> {
        self.initial.check(&self.system)?;
        if self.com_frame {
            to_com_frame(&self.system, &self.initial)
        } else {
            Ok(self.initial.clone())
        }
    }
}

/// `H = Σ ‖p_i‖²/2m_i + Σ_{i<j} V_ij`.
pub fn energy(sys: &MassSystem, potential: &PotentialSpec, state: &PhaseState) -> Result<f64> {
    Ok(kinetic_energy(sys, &state.p)? + potential.energy(sys, &state.q)?)
}
