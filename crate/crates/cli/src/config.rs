//! Run configuration: one JSON document, unknown keys rejected.

use std::path::Path;

use anyhow::anyhow;
use fewbody_core::graf::GrafParams;
use fewbody_core::kinmodel::policy::PolicySpec;
use fewbody_core::kinmodel::KinConfig;
use fewbody_core::nbody::{IntegratorParams, PoincareParams, Scenario};
use fewbody_core::{MassSystem, MessengerTuple, PhaseState, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::read_json;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graf: Option<GrafParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<PoincareSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinmodel: Option<KinSection>,
}

/// Unit labels are recorded as metadata; `G` scales the gravity couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub length: Option<String>,
    #[serde(default)]
    pub mass: Option<String>,
    #[serde(default)]
    pub time: Option<String>,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub dimension: usize,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSection {
    Free,
    /// `V_ij = -G m_i m_j / r`.
    Gravity,
    /// `V_ij = scale · m_i m_j r^{-α}` for every pair.
    Homogeneous { alpha: f64, scale: f64 },
    /// Explicit laws; pairs not listed do not interact.
    Pairs { pairs: Vec<PairEntry> },
}

/// One pair law, 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub alpha: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub com_frame: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSection {
    #[serde(default)]
    pub m: Vec<u32>,
    #[serde(rename = "L", default = "default_ell")]
    pub ell: f64,
    /// Fixed `(C1, C2, C3)`, 1-based; otherwise tuples come from episodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple: Option<MessengerTuple>,
}

fn default_ell() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinSection {
    #[serde(default = "two")]
    pub dimension: usize,
    pub m_min: f64,
    pub m_max: f64,
    #[serde(default = "twenty")]
    pub collisions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Angular spread of the random initial configuration (2D).
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default)]
    pub policy: PolicySpec,
    /// Explicit initial data; drawn from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<KinStart>,
}

fn two() -> usize {
    2
}
fn twenty() -> usize {
    20
}
fn default_spread() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinStart {
    pub masses: [f64; 3],
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

fn missing(section: &str) -> CliError {
    CliError::input(anyhow!("config has no `{section}` section"))
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Config> {
        read_json(path)
    }

    pub fn system(&self) -> CliResult<MassSystem> {
        let s = self.system.as_ref().ok_or_else(|| missing("system"))?;
        MassSystem::new(s.dimension, s.masses.clone()).map_err(CliError::input)
    }

    /// The configured potential, or free motion when none is given.
    pub fn potential(&self, sys: &MassSystem) -> CliResult<PotentialSpec> {
        let g = self.units.as_ref().map_or(1.0, |u| u.g);
        let spec = match self.potential.as_ref() {
            None | Some(PotentialSection::Free) => PotentialSpec::free(sys.n()),
            Some(PotentialSection::Gravity) if g == 1.0 => PotentialSpec::gravity(sys),
            Some(PotentialSection::Gravity) => PotentialSpec::homogeneous(sys, 1.0, -g)?,
            Some(PotentialSection::Homogeneous { alpha, scale }) => PotentialSpec::homogeneous(sys, *alpha, *scale)?,
            Some(PotentialSection::Pairs { pairs }) => {
                let mut spec = PotentialSpec::free(sys.n());
                for e in pairs {
                    if e.i == 0 || e.j == 0 {
                        return Err(CliError::input(anyhow!("pair indices are 1-based")));
                    }
                    spec.set_pair(e.i - 1, e.j - 1, e.alpha, e.coupling)?;
                }
                spec
            }
        };
        Ok(spec)
    }

    pub fn graf(&self) -> CliResult<GrafParams> {
        let g = self.graf.unwrap_or_default();
        g.validate()?;
        Ok(g)
    }

    pub fn poincare(&self) -> PoincareSection {
        self.poincare.clone().unwrap_or(PoincareSection {
            m: Vec::new(),
            ell: default_ell(),
            tuple: None,
        })
    }

    pub fn scenario(&self) -> CliResult<Scenario> {
        let system = self.system()?;
        let potential = self.potential(&system)?;
        let init = self.initial.as_ref().ok_or_else(|| missing("initial"))?;
        let initial = PhaseState::new(init.t, init.q.clone(), init.p.clone());
        initial.check(&system)?;
        let integrator = self.integrator.clone().ok_or_else(|| missing("integrator"))?;
        integrator.validate()?;
        let poincare = self.poincare();
        Ok(Scenario {
            system,
            potential,
            initial,
            integrator,
            graf: self.graf()?,
            poincare: PoincareParams {
                m: poincare.m,
                ell: poincare.ell,
            },
            com_frame: init.com_frame,
        })
    }

    pub fn kin(&self) -> CliResult<&KinSection> {
        self.kinmodel.as_ref().ok_or_else(|| missing("kinmodel"))
    }

    pub fn kin_mut(&mut self) -> CliResult<&mut KinSection> {
        self.kinmodel.as_mut().ok_or_else(|| missing("kinmodel"))
    }
}

impl KinSection {
    /// Model configuration for one run with the given seed.
    pub fn kin_config(&self, seed: u64) -> CliResult<KinConfig> {
        let cfg = match &self.start {
            Some(s) => KinConfig {
                dimension: self.dimension,
                m_min: self.m_min,
                m_max: self.m_max,
                total_mass: None,
                masses: s.masses,
                positions: s.positions.clone(),
                velocities: s.velocities.clone(),
                seed,
                collisions: self.collisions,
            },
            None => KinConfig::random(seed, self.dimension, self.m_min, self.m_max, self.collisions, self.spread)?,
        };
        cfg.validate()?;
        self.policy.validate()?;
        Ok(cfg)
    }
}
