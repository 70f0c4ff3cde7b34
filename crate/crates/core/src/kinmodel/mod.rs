//! Three-particle kinematical collision model.
//!
//! Particles move on straight lines between exact pair collisions. Particle
//! 2 (index 1) is the messenger: at odd collisions it meets particle 1, at
//! even ones particle 3. At a collision the pair keeps its mass sum and its
//! momentum while a [`CollisionPolicy`] chooses the next gap and the mass
//! split; the messenger is then aimed so that it meets the other particle
//! exactly after that gap.

pub mod policy;
pub mod verify;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::vecops::{bivector_len, dot, norm, wedge};

pub use policy::{
    derive_seed, CollisionContext, CollisionPolicy, FixedGap, PolicySpec, Proposal, RandomGap,
    RandomMassExchange,
};
pub use verify::{verify_proposition, ClauseResult, VerificationReport};

/// Index of the messenger particle.
pub const MESSENGER: usize = 1;
/// Default number of policy re-queries before a run is aborted.
pub const DEFAULT_RETRY_LIMIT: usize = 16;

/// Growth factor of the moment of inertia per collision.
pub fn lambda(m_min: f64, m_max: f64) -> f64 {
    libm::sqrt(1.0 + m_min / m_max)
}

/// Growth factor of the parallel kinetic energy per collision.
pub fn mu(m_min: f64, m_max: f64) -> f64 {
    let r = m_min / m_max;
    1.0 + r * r
}

/// Pair that collides at collision `k` (0-based indices).
pub fn pair_for(k: usize) -> (usize, usize) {
    if k % 2 == 1 {
        (0, 1)
    } else {
        (1, 2)
    }
}

/// Particle the messenger heads for after collision `k`.
pub fn target_for(k: usize) -> usize {
    if k % 2 == 1 {
        2
    } else {
        0
    }
}

/// State of the three particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinState {
    pub t: f64,
    pub dim: usize,
    pub masses: [f64; 3],
    /// Flat positions, particle `i` at `[i·dim, (i+1)·dim)`.
    pub q: Vec<f64>,
    /// Flat momenta.
    pub p: Vec<f64>,
    /// Number of collisions resolved so far.
    pub k: usize,
}

impl KinState {
    pub fn pos(&self, i: usize) -> &[f64] {
        &self.q[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mom(&self, i: usize) -> &[f64] {
        &self.p[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vel(&self, i: usize) -> Vec<f64> {
        self.mom(i).iter().map(|x| x / self.masses[i]).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Straight-line motion over `dt`.
    pub fn advance(&self, dt: f64) -> KinState {
        let mut next = self.clone();
        for i in 0..3 {
            for a in 0..self.dim {
                next.q[i * self.dim + a] += self.p[i * self.dim + a] / self.masses[i] * dt;
            }
        }
        next.t = self.t + dt;
        next
    }

    /// Pair due at the next collision.
    pub fn due_pair(&self) -> (usize, usize) {
        pair_for(self.k + 1)
    }

    /// `Σ ‖q_i‖ ‖p_i‖`, the natural scale for angular momentum and `J′`.
    pub fn action_scale(&self) -> f64 {
        (0..3).map(|i| norm(self.pos(i)) * norm(self.mom(i))).sum()
    }

    pub fn observables(&self) -> Observables {
        observables_of(self.dim, &self.masses, &self.q, &self.p, None)
    }

    /// Observables at a collision instant, including `K̃_∥`.
    pub fn collision_observables(&self) -> Result<Observables> {
        let kp = parallel_kinetic_energy(self)?;
        Ok(observables_of(
            self.dim,
            &self.masses,
            &self.q,
            &self.p,
            Some(kp),
        ))
    }
}

/// Model observables at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// `J̃ = ½ Σ m̃_i ‖q̃_i‖²`.
    pub j: f64,
    /// `J̃′ = Σ ⟨q̃_i, p̃_i⟩`.
    pub j_prime: f64,
    /// `K̃ = Σ ‖p̃_i‖² / 2m̃_i`.
    pub k: f64,
    /// `K̃_∥`, only at collision instants.
    pub k_par: Option<f64>,
    /// Total angular momentum (empty in one dimension).
    pub l: Vec<f64>,
    /// `L̃_i = q̃_i ∧ p̃_i`.
    pub l_i: [Vec<f64>; 3],
    /// Unit velocity directions (zero vector for a particle at rest).
    pub v_hat: [Vec<f64>; 3],
}

fn unit(x: &[f64]) -> Vec<f64> {
    let n = norm(x);
    if n > 0.0 {
        x.iter().map(|v| v / n).collect()
    } else {
        vec![0.0; x.len()]
    }
}

pub(crate) fn observables_of(
    dim: usize,
    masses: &[f64; 3],
    q: &[f64],
    p: &[f64],
    k_par: Option<f64>,
) -> Observables {
    let qi = |i: usize| &q[i * dim..(i + 1) * dim];
    let pi = |i: usize| &p[i * dim..(i + 1) * dim];
    let mut j = 0.0;
    let mut j_prime = 0.0;
    let mut k = 0.0;
    for i in 0..3 {
        j += 0.5 * masses[i] * dot(qi(i), qi(i));
        j_prime += dot(qi(i), pi(i));
        k += dot(pi(i), pi(i)) / (2.0 * masses[i]);
    }
    let l_i = [wedge(qi(0), pi(0)), wedge(qi(1), pi(1)), wedge(qi(2), pi(2))];
    let mut l = vec![0.0; bivector_len(dim)];
    for li in &l_i {
        for (a, b) in l.iter_mut().zip(li) {
            *a += b;
        }
    }
    Observables {
        j,
        j_prime,
        k,
        k_par,
        l,
        l_i,
        v_hat: [unit(pi(0)), unit(pi(1)), unit(pi(2))],
    }
}

/// Relative coincidence tolerance for pair positions at a collision.
pub const COINCIDENCE_RTOL: f64 = 1e-10;

fn pair_gap(state: &KinState, i: usize, j: usize) -> f64 {
    let d: Vec<f64> = state
        .pos(i)
        .iter()
        .zip(state.pos(j))
        .map(|(a, b)| a - b)
        .collect();
    norm(&d)
}

fn position_scale(state: &KinState) -> f64 {
    (0..3).map(|i| norm(state.pos(i))).fold(0.0, f64::max)
}

/// Whether the pair due at collision `state.k` (the last one) coincides.
pub fn at_collision(state: &KinState) -> bool {
    if state.k == 0 {
        return false;
    }
    let (i, j) = pair_for(state.k);
    pair_gap(state, i, j) <= COINCIDENCE_RTOL * position_scale(state).max(1e-300)
}

/// `K̃_∥ = (⟨p̃_1, q̂_1⟩² + ⟨p̃_3, q̂_3⟩²) / 2M`, defined only at collisions.
pub fn parallel_kinetic_energy(state: &KinState) -> Result<f64> {
    if !at_collision(state) {
        return Err(param("parallel kinetic energy is defined only at collision instants"));
    }
    parallel_kinetic_energy_unchecked(state.dim, &state.masses, &state.q, &state.p)
}

pub(crate) fn parallel_kinetic_energy_unchecked(
    dim: usize,
    masses: &[f64; 3],
    q: &[f64],
    p: &[f64],
) -> Result<f64> {
    let m: f64 = masses.iter().sum();
    let mut acc = 0.0;
    for i in [0usize, 2] {
        let qi = &q[i * dim..(i + 1) * dim];
        let nq = norm(qi);
        if nq == 0.0 {
            return Err(param("particle at the origin has no radial direction"));
        }
        let c = dot(&p[i * dim..(i + 1) * dim], qi) / nq;
        acc += c * c;
    }
    Ok(acc / (2.0 * m))
}

/// Time and pair of the next collision. Zero delay is allowed only when the
/// pair already coincides.
pub fn next_collision(state: &KinState) -> Result<(f64, (usize, usize))> {
    let k = state.k + 1;
    let (i, j) = pair_for(k);
    let dq: Vec<f64> = state
        .pos(j)
        .iter()
        .zip(state.pos(i))
        .map(|(a, b)| a - b)
        .collect();
    let vi = state.vel(i);
    let vj = state.vel(j);
    let dv: Vec<f64> = vj.iter().zip(&vi).map(|(a, b)| a - b).collect();
    let scale = position_scale(state).max(1e-300);
    let dv2 = dot(&dv, &dv);
    if dv2 == 0.0 {
        if norm(&dq) <= COINCIDENCE_RTOL * scale {
            return Ok((state.t, (i, j)));
        }
        return Err(Error::NoCollision {
            k,
            reason: String::from("pair moves in parallel with equal velocities"),
        });
    }
    let s = -dot(&dq, &dv) / dv2;
    let residual: Vec<f64> = dq.iter().zip(&dv).map(|(a, b)| a + b * s).collect();
    let tol = COINCIDENCE_RTOL * (norm(&dq) + norm(&dv) * s.abs()).max(scale);
    if norm(&residual) > tol {
        return Err(Error::NoCollision {
            k,
            reason: String::from("lines of motion do not intersect at a common time"),
        });
    }
    if s < 0.0 {
        if norm(&dq) <= COINCIDENCE_RTOL * scale {
            return Ok((state.t, (i, j)));
        }
        return Err(Error::NoCollision {
            k,
            reason: String::from("pair is separating"),
        });
    }
    Ok((state.t + s, (i, j)))
}

/// Sign conditions `⟨p̃_1,q̃_1⟩ > 0`, `⟨p̃_2,q̃_2⟩ < 0`, `⟨p̃_3,q̃_3⟩ > 0`,
/// returned as the normalized values `⟨p,q⟩/(‖p‖‖q‖)` with the expected sign
/// folded in (all positive when satisfied).
pub fn sign_margins(dim: usize, q: &[f64], p: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let qi = &q[i * dim..(i + 1) * dim];
        let pi = &p[i * dim..(i + 1) * dim];
        let den = norm(qi) * norm(pi);
        let c = if den > 0.0 { dot(qi, pi) / den } else { 0.0 };
        out[i] = if i == MESSENGER { -c } else { c };
    }
    out
}

/// Resolves the collision of the due pair at the current instant. Returns
/// the post-collision state and the gap to the next collision.
pub fn resolve_collision(
    state: &KinState,
    policy: &mut dyn CollisionPolicy,
    m_min: f64,
    m_max: f64,
    retry_limit: usize,
) -> Result<(KinState, f64)> {
    let k = state.k + 1;
    let (i, j) = pair_for(k);
    let partner = if i == MESSENGER { j } else { i };
    let target = target_for(k);
    let dim = state.dim;
    let sum = state.masses[i] + state.masses[j];
    let lo = m_min.max(sum - m_max);
    let hi = m_max.min(sum - m_min);
    let pair_p: Vec<f64> = state
        .mom(i)
        .iter()
        .zip(state.mom(j))
        .map(|(a, b)| a + b)
        .collect();
    let mut reason = String::new();
    for attempt in 0..retry_limit.max(1) {
        let ctx = CollisionContext {
            k,
            attempt,
            state,
            pair: (i, j),
            target,
            messenger_mass_range: (lo, hi),
        };
        let prop = policy.propose(&ctx);
        if !(prop.gap.is_finite() && prop.gap > 0.0) {
            reason = format!("gap {} is not positive", prop.gap);
            continue;
        }
        let m2 = prop.messenger_mass;
        if !(m2 >= lo && m2 <= hi) {
            reason = format!("messenger mass {m2} outside [{lo}, {hi}]");
            continue;
        }
        let mp = sum - m2;
        let m_t = state.masses[target];
        let mut p2 = vec![0.0; dim];
        for a in 0..dim {
            p2[a] = m2 * (state.pos(target)[a] - state.pos(MESSENGER)[a]) / prop.gap
                + m2 / m_t * state.mom(target)[a];
        }
        if p2.iter().any(|x| !x.is_finite()) {
            reason = String::from("aiming momentum is not finite");
            continue;
        }
        let mut next = state.clone();
        next.k = k;
        next.masses[MESSENGER] = m2;
        next.masses[partner] = mp;
        for a in 0..dim {
            next.p[MESSENGER * dim + a] = p2[a];
            next.p[partner * dim + a] = pair_p[a] - p2[a];
        }
        let signs = sign_margins(dim, &next.q, &next.p);
        if signs.iter().any(|s| *s <= 0.0) {
            return Err(Error::ModelViolation(format!(
                "sign conditions fail after collision {k} at t = {}: {:?}",
                state.t, signs
            )));
        }
        return Ok((next, prop.gap));
    }
    Err(Error::PolicyRejected {
        k,
        attempts: retry_limit.max(1),
        reason,
    })
}

/// One resolved collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub k: usize,
    pub t: f64,
    /// Colliding pair, 1-based.
    pub pair: [usize; 2],
    pub dim: usize,
    /// Gap to the next collision chosen by the policy.
    pub gap: f64,
    pub m_min: f64,
    pub m_max: f64,
    pub masses_pre: [f64; 3],
    pub masses_post: [f64; 3],
    /// Positions at the collision instant.
    pub q: Vec<f64>,
    pub p_pre: Vec<f64>,
    pub p_post: Vec<f64>,
    pub pre: Observables,
    pub post: Observables,
}

/// Collision events of one run and the state after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTrace {
    pub events: Vec<CollisionEvent>,
    pub final_state: KinState,
}

/// Run description. Positions and velocities are flat `3·dimension` lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinConfig {
    pub dimension: usize,
    pub m_min: f64,
    pub m_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
    pub masses: [f64; 3],
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub collisions: usize,
}

impl KinConfig {
    pub fn initial_state(&self) -> KinState {
        let d = self.dimension;
        let p = self
            .velocities
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.masses[k / d.max(1)])
            .collect();
        KinState {
            t: 0.0,
            dim: d,
            masses: self.masses,
            q: self.positions.clone(),
            p,
            k: 0,
        }
    }

    /// Checks the model hypotheses; nothing is repaired.
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if d != 1 && d != 2 {
            return Err(param("dimension must be 1 or 2"));
        }
        if !(self.m_min > 0.0 && self.m_min <= self.m_max && self.m_max.is_finite()) {
            return Err(param("mass bounds must satisfy 0 < m_min <= m_max"));
        }
        if self
            .masses
            .iter()
            .any(|m| !(*m >= self.m_min && *m <= self.m_max))
        {
            return Err(param("initial masses must lie in [m_min, m_max]"));
        }
        let total: f64 = self.masses.iter().sum();
        if let Some(m) = self.total_mass {
            if (m - total).abs() > 1e-12 * total {
                return Err(param("masses do not sum to total_mass"));
            }
        }
        if self.positions.len() != 3 * d || self.velocities.len() != 3 * d {
            return Err(param("positions and velocities need 3*dimension entries"));
        }
        if self
            .positions
            .iter()
            .chain(&self.velocities)
            .any(|x| !x.is_finite())
        {
            return Err(param("positions and velocities must be finite"));
        }
        if d == 1 && !(self.positions[0] <= self.positions[1] && self.positions[1] <= self.positions[2])
        {
            return Err(param("one-dimensional positions must satisfy q1 <= q2 <= q3"));
        }
        let s = self.initial_state();
        let mut p_tot = vec![0.0; d];
        let mut mq = vec![0.0; d];
        let mut p_scale = 0.0;
        let mut q_scale = 0.0;
        for i in 0..3 {
            for a in 0..d {
                p_tot[a] += s.mom(i)[a];
                mq[a] += s.masses[i] * s.pos(i)[a];
            }
            p_scale += norm(s.mom(i));
            q_scale += s.masses[i] * norm(s.pos(i));
        }
        if norm(&p_tot) > 1e-12 * p_scale.max(1e-300) {
            return Err(param("initial state is not in the centre-of-mass frame (total momentum)"));
        }
        if norm(&mq) > 1e-12 * q_scale.max(1e-300) {
            return Err(param("initial state is not in the centre-of-mass frame (barycenter)"));
        }
        if s.observables().j_prime <= 0.0 {
            return Err(param("initial moment of inertia must be increasing (J'(0) > 0)"));
        }
        if self.collisions == 0 {
            return Err(param("at least one collision is required"));
        }
        Ok(())
    }

    /// Random admissible configuration: a pair-(1,2) collision state is
    /// drawn first and propagated back far enough to keep `J′(0) > 0`.
    /// `spread` bounds the angle between the outgoing momentum of particle 3
    /// and its position (2D only, radians, below π/2).
    pub fn random(
        seed: u64,
        dimension: usize,
        m_min: f64,
        m_max: f64,
        collisions: usize,
        spread: f64,
    ) -> Result<KinConfig> {
        if dimension != 1 && dimension != 2 {
            return Err(param("dimension must be 1 or 2"));
        }
        if !(m_min > 0.0 && m_min <= m_max) {
            return Err(param("mass bounds must satisfy 0 < m_min <= m_max"));
        }
        if !(0.0..core::f64::consts::FRAC_PI_2).contains(&spread) {
            return Err(param("spread must lie in [0, pi/2)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
        let mut u = || -> f64 { rng.random() };
        let masses = [
            m_min + u() * (m_max - m_min),
            m_min + u() * (m_max - m_min),
            m_min + u() * (m_max - m_min),
        ];
        let m12 = masses[0] + masses[1];
        let d = dimension;
        let dir = |angle: f64| -> Vec<f64> {
            if d == 1 {
                vec![1.0]
            } else {
                vec![libm::cos(angle), libm::sin(angle)]
            }
        };
        let phi = u() * core::f64::consts::TAU;
        let r = 1.0 + 4.0 * u();
        let b: Vec<f64> = dir(phi).iter().map(|x| x * r).collect();
        let s3 = 0.5 + 1.5 * u();
        let theta = phi + (2.0 * u() - 1.0) * spread;
        let p3: Vec<f64> = dir(theta).iter().map(|x| x * s3).collect();
        let w_mag = 0.5 + u();
        let w: Vec<f64> = dir(u() * core::f64::consts::TAU)
            .iter()
            .map(|x| x * w_mag)
            .collect();

        let mut q = vec![0.0; 3 * d];
        let mut p = vec![0.0; 3 * d];
        for a in 0..d {
            q[a] = -masses[2] / m12 * b[a];
            q[d + a] = q[a];
            q[2 * d + a] = b[a];
            p[a] = -masses[0] / m12 * p3[a] + w[a];
            p[d + a] = -masses[1] / m12 * p3[a] - w[a];
            p[2 * d + a] = p3[a];
        }
        let at_collision = KinState {
            t: 0.0,
            dim: d,
            masses,
            q,
            p,
            k: 0,
        };
        let obs = at_collision.observables();
        let mut tau = obs.j_prime / (4.0 * obs.k) * (0.25 + 0.75 * u());
        let velocities: Vec<f64> = at_collision
            .p
            .iter()
            .enumerate()
            .map(|(k, x)| x / masses[k / d])
            .collect();
        for _ in 0..64 {
            let start = at_collision.advance(-tau);
            let cfg = KinConfig {
                dimension: d,
                m_min,
                m_max,
                total_mass: Some(masses.iter().sum()),
                masses,
                positions: start.q.clone(),
                velocities: velocities.clone(),
                seed,
                collisions,
            };
            if cfg.validate().is_ok() {
                return Ok(cfg);
            }
            tau *= 0.5;
        }
        Err(param("could not construct an admissible random configuration"))
    }
}

/// Simulates `config.collisions` collisions.
pub fn run(config: &KinConfig, policy: &mut dyn CollisionPolicy) -> Result<ModelTrace> {
    run_with_retry(config, policy, DEFAULT_RETRY_LIMIT)
}

pub fn run_with_retry(
    config: &KinConfig,
    policy: &mut dyn CollisionPolicy,
    retry_limit: usize,
) -> Result<ModelTrace> {
    config.validate()?;
    let mut state = config.initial_state();
    let mut events = Vec::with_capacity(config.collisions);
    for _ in 0..config.collisions {
        let (t_next, (i, j)) = next_collision(&state)?;
        let mut at = state.advance(t_next - state.t);
        at.t = t_next;
        let (mi, mj) = (at.masses[i], at.masses[j]);
        for a in 0..at.dim {
            let c = (mi * at.q[i * at.dim + a] + mj * at.q[j * at.dim + a]) / (mi + mj);
            at.q[i * at.dim + a] = c;
            at.q[j * at.dim + a] = c;
        }
        let pre_k = KinState { k: at.k + 1, ..at.clone() };
        let pre = pre_k.collision_observables()?;
        let (post_state, gap) = resolve_collision(&at, policy, config.m_min, config.m_max, retry_limit)?;
        let post = post_state.collision_observables()?;
        events.push(CollisionEvent {
            k: post_state.k,
            t: t_next,
            pair: [i + 1, j + 1],
            dim: at.dim,
            gap,
            m_min: config.m_min,
            m_max: config.m_max,
            masses_pre: at.masses,
            masses_post: post_state.masses,
            q: at.q.clone(),
            p_pre: at.p.clone(),
            p_post: post_state.p.clone(),
            pre,
            post,
        });
        state = post_state;
    }
    Ok(ModelTrace {
        events,
        final_state: state,
    })
}

/// Runs with a policy built from `spec`, seeded by `config.seed`.
pub fn run_with_spec(config: &KinConfig, spec: &PolicySpec) -> Result<ModelTrace> {
    let mut policy = spec.build(config.seed)?;
    run(config, policy.as_mut())
}
