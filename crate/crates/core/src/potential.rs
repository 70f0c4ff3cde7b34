//! Homogeneous central pair potentials `V_ij(q) = I_ij ‖q‖^{-α_ij}`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::mass::MassSystem;
use crate::vecops::{dot, norm};

/// Exponent and coupling of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairLaw {
    pub alpha: f64,
    pub coupling: f64,
}

/// Pair exponents and couplings for `n` particles, stored symmetrically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    n: usize,
    laws: Vec<PairLaw>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(param(alloc::format!("exponent {alpha} outside (0,2)")));
    }
    Ok(())
}

impl PotentialSpec {
    /// All couplings zero (free motion).
    pub fn free(n: usize) -> Self {
        PotentialSpec {
            n,
            laws: vec![
                PairLaw {
                    alpha: 1.0,
                    coupling: 0.0
                };
                n * n
            ],
        }
    }

    /// Newtonian gravity with `G = 1`: `α = 1`, `I_ij = -m_i m_j`.
    pub fn gravity(sys: &MassSystem) -> Self {
        let n = sys.n();
        let mut spec = Self::free(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    spec.laws[i * n + j].coupling = -sys.mass(i) * sys.mass(j);
                }
            }
        }
        spec
    }

    /// Same exponent for every pair, couplings `I_ij = scale · m_i m_j`.
    pub fn homogeneous(sys: &MassSystem, alpha: f64, scale: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let mut spec = Self::gravity(sys);
        for law in &mut spec.laws {
            law.alpha = alpha;
            law.coupling *= -scale;
        }
        Ok(spec)
    }

    /// Sets the law of pair `(i, j)` (0-based, `i != j`).
    pub fn set_pair(&mut self, i: usize, j: usize, alpha: f64, coupling: f64) -> Result<()> {
        if i >= self.n || j >= self.n || i == j {
            return Err(param("pair indices must be distinct and in range"));
        }
        check_alpha(alpha)?;
        let law = PairLaw { alpha, coupling };
        self.laws[i * self.n + j] = law;
        self.laws[j * self.n + i] = law;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair(&self, i: usize, j: usize) -> PairLaw {
        self.laws[i * self.n + j]
    }

    /// Largest exponent among interacting pairs (1 if none interact).
    pub fn max_alpha(&self) -> f64 {
        let mut a: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let law = self.pair(i, j);
                if law.coupling != 0.0 {
                    a = a.max(law.alpha);
                }
            }
        }
        if a == 0.0 {
            1.0
        } else {
            a
        }
    }

    fn check(&self, sys: &MassSystem, q: &[f64]) -> Result<()> {
        if self.n != sys.n() {
            return Err(Error::GroundSetMismatch {
                left: self.n,
                right: sys.n(),
            });
        }
        sys.check_config(q)
    }

    /// `V_ij` at separation `r` (`r > 0`).
    pub fn pair_energy(&self, i: usize, j: usize, r: f64) -> f64 {
        let law = self.pair(i, j);
        if law.coupling == 0.0 {
            0.0
        } else {
            law.coupling * libm::pow(r, -law.alpha)
        }
    }

    /// `V_ij(q_i - q_j)`; coincident interacting particles are a singularity.
    pub fn pair_energy_at(&self, sys: &MassSystem, q: &[f64], i: usize, j: usize) -> Result<f64> {
        if self.pair(i, j).coupling == 0.0 {
            return Ok(0.0);
        }
        let r = sys.distance(q, i, j);
        if r == 0.0 {
            return Err(Error::Singularity { i, j });
        }
        Ok(self.pair_energy(i, j, r))
    }

    /// Total potential energy `Σ_{i<j} V_ij`.
    pub fn energy(&self, sys: &MassSystem, q: &[f64]) -> Result<f64> {
        self.check(sys, q)?;
        let mut v = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                v += self.pair_energy_at(sys, q, i, j)?;
            }
        }
        Ok(v)
    }

    /// `-∇V`, i.e. the time derivative of the momenta.
    pub fn forces(&self, sys: &MassSystem, q: &[f64]) -> Result<Vec<f64>> {
        self.check(sys, q)?;
        let d = sys.d();
        let mut f = vec![0.0; q.len()];
        let mut diff = vec![0.0; d];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let law = self.pair(i, j);
                if law.coupling == 0.0 {
                    continue;
                }
                for k in 0..d {
                    diff[k] = q[i * d + k] - q[j * d + k];
                }
                let r2 = dot(&diff, &diff);
                if r2 == 0.0 {
                    return Err(Error::Singularity { i, j });
                }
                let s = law.alpha * law.coupling * libm::pow(r2, -0.5 * law.alpha - 1.0);
                for k in 0..d {
                    f[i * d + k] += s * diff[k];
                    f[j * d + k] -= s * diff[k];
                }
            }
        }
        Ok(f)
    }

    /// Smallest separation among interacting pairs together with the
    /// relative speed of that pair; `None` when nothing interacts.
    pub fn closest_pair(&self, sys: &MassSystem, q: &[f64], v: &[f64]) -> Option<(f64, f64, f64)> {
        let d = sys.d();
        let mut best: Option<(f64, f64, f64)> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let law = self.pair(i, j);
                if law.coupling == 0.0 {
                    continue;
                }
                let r = sys.distance(q, i, j);
                if best.is_none_or(|b| r < b.0) {
                    let dv: Vec<f64> = (0..d).map(|k| v[i * d + k] - v[j * d + k]).collect();
                    best = Some((r, norm(&dv), law.alpha));
                }
            }
        }
        best
    }
}
