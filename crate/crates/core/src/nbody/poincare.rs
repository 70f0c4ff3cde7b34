//! Poincaré surfaces crossed by the messenger cluster.
//!
//! For a tuple `(C1, C2, C3)` and `m ≥ 2` the hyperplane function is
//! `g = ⟨q_{C2} - q_{C1}, q̂_{C1}⟩ + 1/m`; the surface is `g = 0` together with
//! a momentum threshold, a distance condition, the outgoing side and three
//! angular-momentum caps. The normal is oriented toward increasing `g`, so
//! the outgoing side `p(N) < 0` is where `g` decreases.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::mass::{MassSystem, PhaseState};
use crate::partitions::MessengerTuple;
use crate::path::{check_increasing, PhasePath};
use crate::vecops::{dot, norm, perp};

/// Relative hyperplane tolerance for pointwise membership.
pub const HYPERPLANE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareSurfaceSpec {
    pub m: u32,
    #[serde(rename = "L")]
    pub ell: f64,
    pub tuple: MessengerTuple,
    /// Energy of the level set, recorded as metadata.
    #[serde(default)]
    pub energy: Option<f64>,
}

impl PoincareSurfaceSpec {
    pub fn validate(&self, sys: &MassSystem) -> Result<()> {
        if self.m < 2 {
            return Err(param("surface index m must be at least 2"));
        }
        if !(self.ell.is_finite() && self.ell > 0.0) {
            return Err(param("angular momentum cap must be positive"));
        }
        if self.tuple.n() != sys.n() {
            return Err(param("tuple does not partition the particle set"));
        }
        Ok(())
    }
}

/// Values entering the membership decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p_c2_norm: f64,
    pub q_c1_norm: f64,
    pub g: f64,
    /// `dg/dt`; negative on the outgoing side.
    pub g_rate: f64,
    /// `‖q⊥_{C2}‖ ‖p_{C2}‖`.
    pub l_q2_p2: f64,
    /// `‖p⊥_{C2}‖ ‖q_{C2}‖`.
    pub l_p2_q2: f64,
    /// `‖p⊥_{C1}‖ ‖q_{C2}‖`.
    pub l_p1_q2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub momentum_threshold: bool,
    pub distance: bool,
    pub on_hyperplane: bool,
    pub outgoing: bool,
    pub cap_q2_p2: bool,
    pub cap_p2_q2: bool,
    pub cap_p1_q2: bool,
    pub witness: Witness,
}

struct Clusters {
    q1: Vec<f64>,
    v1: Vec<f64>,
    p1: Vec<f64>,
    q2: Vec<f64>,
    v2: Vec<f64>,
    p2: Vec<f64>,
}

fn clusters(sys: &MassSystem, state: &PhaseState, tuple: &MessengerTuple) -> Clusters {
    let d = sys.d();
    let agg = |c: &[usize]| {
        let mut m = 0.0;
        let mut q = alloc::vec![0.0; d];
        let mut p = alloc::vec![0.0; d];
        for &i in c {
            m += sys.mass(i);
            for a in 0..d {
                q[a] += sys.mass(i) * state.q[i * d + a];
                p[a] += state.p[i * d + a];
            }
        }
        let q: Vec<f64> = q.iter().map(|x| x / m).collect();
        let v: Vec<f64> = p.iter().map(|x| x / m).collect();
        (q, v, p)
    };
    let (q1, v1, p1) = agg(&tuple.c1);
    let (q2, v2, p2) = agg(&tuple.c2);
    Clusters { q1, v1, p1, q2, v2, p2 }
}

/// `g` and `dg/dt` for the messenger hyperplane.
pub fn hyperplane(sys: &MassSystem, state: &PhaseState, tuple: &MessengerTuple, m: u32) -> (f64, f64) {
    let c = clusters(sys, state, tuple);
    hyperplane_of(&c, m)
}

fn hyperplane_of(c: &Clusters, m: u32) -> (f64, f64) {
    let r1 = norm(&c.q1);
    let u: Vec<f64> = c.q1.iter().map(|x| x / r1).collect();
    let dq: Vec<f64> = c.q2.iter().zip(&c.q1).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = c.v2.iter().zip(&c.v1).map(|(a, b)| a - b).collect();
    let g = dot(&dq, &u) + 1.0 / m as f64;
    // d/dt q̂ = v⊥ / |q|
    let v1_perp = perp(&c.v1, &c.q1);
    let rate = dot(&dv, &u) + dot(&dq, &v1_perp) / r1;
    (g, rate)
}

/// Evaluates every membership condition at `state`.
pub fn poincare_membership(
    spec: &PoincareSurfaceSpec,
    sys: &MassSystem,
    state: &PhaseState,
) -> Result<Membership> {
    spec.validate(sys)?;
    state.check(sys)?;
    let c = clusters(sys, state, &spec.tuple);
    let m = spec.m as f64;
    let q_c1_norm = norm(&c.q1);
    let p_c2_norm = norm(&c.p2);
    let (g, g_rate) = if q_c1_norm > 0.0 {
        hyperplane_of(&c, spec.m)
    } else {
        (f64::NAN, f64::NAN)
    };
    let q2_perp = perp(&c.q2, &c.q1);
    let p2_perp = perp(&c.p2, &c.q1);
    let p1_perp = perp(&c.p1, &c.q1);
    let q2n = norm(&c.q2);
    let witness = Witness {
        p_c2_norm,
        q_c1_norm,
        g,
        g_rate,
        l_q2_p2: norm(&q2_perp) * p_c2_norm,
        l_p2_q2: norm(&p2_perp) * q2n,
        l_p1_q2: norm(&p1_perp) * q2n,
    };
    let momentum_threshold = p_c2_norm >= m;
    let distance = q_c1_norm >= 1.0;
    let on_hyperplane = g.abs() <= HYPERPLANE_TOL * q_c1_norm.max(1.0);
    let outgoing = g_rate < 0.0;
    let cap_q2_p2 = witness.l_q2_p2 <= spec.ell;
    let cap_p2_q2 = witness.l_p2_q2 <= spec.ell;
    let cap_p1_q2 = witness.l_p1_q2 <= spec.ell;
    Ok(Membership {
        member: momentum_threshold
            && distance
            && on_hyperplane
            && outgoing
            && cap_q2_p2
            && cap_p2_q2
            && cap_p1_q2,
        momentum_threshold,
        distance,
        on_hyperplane,
        outgoing,
        cap_q2_p2,
        cap_p2_q2,
        cap_p1_q2,
        witness,
    })
}

/// A root of the hyperplane function where full membership holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub m: u32,
    pub membership: Membership,
}

fn g_at<P: PhasePath + ?Sized>(sys: &MassSystem, path: &P, spec: &PoincareSurfaceSpec, t: f64) -> Result<f64> {
    let s = path.state_at(t)?;
    let c = clusters(sys, &s, &spec.tuple);
    if norm(&c.q1) == 0.0 {
        return Ok(f64::NAN);
    }
    Ok(hyperplane_of(&c, spec.m).0)
}

/// Roots of `g` between samples, refined by bisection.
pub fn hyperplane_roots<P: PhasePath + ?Sized>(
    sys: &MassSystem,
    path: &P,
    spec: &PoincareSurfaceSpec,
) -> Result<Vec<f64>> {
    spec.validate(sys)?;
    let times = path.sample_times();
    check_increasing(&times)?;
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &t in &times {
        let g = g_at(sys, path, spec, t)?;
        if let Some((t0, g0)) = prev {
            if g0.is_finite() && g.is_finite() && g0 != 0.0 && (g == 0.0 || (g0 < 0.0) != (g < 0.0)) {
                let (mut lo, mut hi, glo) = (t0, t, g0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let gm = g_at(sys, path, spec, mid)?;
                    if gm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (gm < 0.0) == (glo < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        prev = Some((t, g));
    }
    Ok(roots)
}

/// Crossings of the surface along `path` at which every membership
/// condition holds.
pub fn count_crossings<P: PhasePath + ?Sized>(
    sys: &MassSystem,
    path: &P,
    spec: &PoincareSurfaceSpec,
) -> Result<Vec<Crossing>> {
    let mut out = Vec::new();
    for t in hyperplane_roots(sys, path, spec)? {
        let state = path.state_at(t)?;
        let membership = poincare_membership(spec, sys, &state)?;
        if membership.member {
            out.push(Crossing {
                t,
                m: spec.m,
                membership,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(m: u32) -> PoincareSurfaceSpec {
        PoincareSurfaceSpec {
            m,
            ell: 10.0,
            tuple: MessengerTuple::new(vec![0], vec![1], vec![2, 3]).unwrap(),
            energy: None,
        }
    }

    fn collinear(p2: f64) -> (MassSystem, PhaseState) {
        let sys = MassSystem::new(2, vec![1.0; 4]).unwrap();
        // C1 at x = 5, messenger 1/4 closer to the origin, moving inward
        let q = vec![5.0, 0.0, 4.75, 0.0, -4.875, 0.0, -4.875, 0.0];
        let p = vec![0.0, 0.0, -p2, 0.0, p2 / 2.0, 0.0, p2 / 2.0, 0.0];
        (sys, PhaseState::new(0.0, q, p))
    }

    #[test]
    fn collinear_outgoing_state_is_a_member() {
        let (sys, st) = collinear(8.0);
        let m = poincare_membership(&spec(4), &sys, &st).unwrap();
        assert!(m.member, "{m:?}");
    }

    #[test]
    fn slow_messenger_fails_the_threshold() {
        let (sys, st) = collinear(2.0);
        let m = poincare_membership(&spec(4), &sys, &st).unwrap();
        assert!(!m.momentum_threshold);
        assert!(!m.member);
    }

    #[test]
    fn index_below_two_is_rejected() {
        let (sys, st) = collinear(8.0);
        assert!(poincare_membership(&spec(1), &sys, &st).is_err());
    }
}
