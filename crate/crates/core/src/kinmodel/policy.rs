//! Collision policies: how the next gap and the pair mass split are chosen.

use alloc::boxed::Box;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

use super::KinState;

/// What the policy sees when a collision is resolved.
#[derive(Debug, Clone, Copy)]
pub struct CollisionContext<'a> {
    /// Index of the collision being resolved (1-based).
    pub k: usize,
    /// Retry counter, starting at 0.
    pub attempt: usize,
    /// State at the collision instant, before resolution.
    pub state: &'a KinState,
    /// Colliding pair (0-based); the messenger is always particle 1.
    pub pair: (usize, usize),
    /// Particle the messenger is aimed at next.
    pub target: usize,
    /// Admissible messenger masses given the pair sum and mass bounds.
    pub messenger_mass_range: (f64, f64),
}

/// Next gap `t_{k+1} - t_k` and the messenger mass after the collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub gap: f64,
    pub messenger_mass: f64,
}

pub trait CollisionPolicy {
    fn propose(&mut self, ctx: &CollisionContext<'_>) -> Proposal;
}

/// Constant gap, masses unchanged.
#[derive(Debug, Clone)]
pub struct FixedGap {
    pub gap: f64,
}

impl CollisionPolicy for FixedGap {
    fn propose(&mut self, ctx: &CollisionContext<'_>) -> Proposal {
        Proposal {
            gap: self.gap,
            messenger_mass: ctx.state.masses[1],
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    libm::exp(libm::log(lo) + u * (libm::log(hi) - libm::log(lo)))
}

/// Log-uniform gap in `[gap_min, gap_max]`, masses unchanged.
#[derive(Debug, Clone)]
pub struct RandomGap {
    pub gap_min: f64,
    pub gap_max: f64,
    rng: ChaCha8Rng,
}

impl RandomGap {
    pub fn new(gap_min: f64, gap_max: f64, seed: u64) -> Self {
        RandomGap {
            gap_min,
            gap_max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl CollisionPolicy for RandomGap {
    fn propose(&mut self, ctx: &CollisionContext<'_>) -> Proposal {
        Proposal {
            gap: log_uniform(&mut self.rng, self.gap_min, self.gap_max),
            messenger_mass: ctx.state.masses[1],
        }
    }
}

/// Log-uniform gap and a messenger mass drawn uniformly from the admissible
/// range, so the pair exchanges mass at every collision.
#[derive(Debug, Clone)]
pub struct RandomMassExchange {
    pub gap_min: f64,
    pub gap_max: f64,
    rng: ChaCha8Rng,
}

impl RandomMassExchange {
    pub fn new(gap_min: f64, gap_max: f64, seed: u64) -> Self {
        RandomMassExchange {
            gap_min,
            gap_max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl CollisionPolicy for RandomMassExchange {
    fn propose(&mut self, ctx: &CollisionContext<'_>) -> Proposal {
        let gap = log_uniform(&mut self.rng, self.gap_min, self.gap_max);
        let (lo, hi) = ctx.messenger_mass_range;
        let u: f64 = self.rng.random();
        Proposal {
            gap,
            messenger_mass: lo + u * (hi - lo),
        }
    }
}

/// Serializable policy description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    FixedGap { gap: f64 },
    RandomGap { gap_min: f64, gap_max: f64 },
    RandomMassExchange { gap_min: f64, gap_max: f64 },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::RandomMassExchange {
            gap_min: 0.1,
            gap_max: 10.0,
        }
    }
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            PolicySpec::FixedGap { gap } if !ok(gap) => Err(param("gap must be positive")),
            PolicySpec::RandomGap { gap_min, gap_max }
            | PolicySpec::RandomMassExchange { gap_min, gap_max }
                if !(ok(gap_min) && ok(gap_max) && gap_min <= gap_max) =>
            {
                Err(param("gap range must satisfy 0 < gap_min <= gap_max"))
            }
            _ => Ok(()),
        }
    }

    /// Instantiates the policy with its own generator.
    pub fn build(&self, seed: u64) -> Result<Box<dyn CollisionPolicy>> {
        self.validate()?;
        Ok(match *self {
            PolicySpec::FixedGap { gap } => Box::new(FixedGap { gap }),
            PolicySpec::RandomGap { gap_min, gap_max } => {
                Box::new(RandomGap::new(gap_min, gap_max, seed))
            }
            PolicySpec::RandomMassExchange { gap_min, gap_max } => {
                Box::new(RandomMassExchange::new(gap_min, gap_max, seed))
            }
        })
    }
}

/// Independent seed for run `index` of a batch (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
