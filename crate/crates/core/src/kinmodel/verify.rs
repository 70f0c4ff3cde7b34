//! Verifier for the growth, sign and alignment properties of a model trace.
//!
//! Every quantity is recomputed from the raw masses, positions and momenta
//! stored in the events; the stored observables are not trusted.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops::{dot, norm, wedge};

use super::{lambda, mu, observables_of, pair_for, parallel_kinetic_energy_unchecked, sign_margins, CollisionEvent};

/// Minimum trace length accepted by [`verify_proposition`].
pub const MIN_EVENTS: usize = 6;
/// Relative tolerance for exact conservation laws.
pub const CONSERVATION_TOL: f64 = 1e-12;
/// Relative tolerance for derived identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Angular slack for arc inclusion, radians.
pub const ARC_TOL: f64 = 1e-9;
/// Arc length regarded as converged, radians.
pub const ARC_CONVERGED: f64 = 1e-3;

const MAX_FAILURES: usize = 8;

/// Outcome of one clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub pass: bool,
    /// Smallest slack over all checks of the clause, relative to its
    /// tolerance or bound; negative on failure.
    pub margin: f64,
    pub failures: Vec<String>,
}

impl ClauseResult {
    fn new() -> Self {
        ClauseResult {
            pass: true,
            margin: f64::INFINITY,
            failures: Vec::new(),
        }
    }

    /// Records a check whose slack is `slack` (fails when negative).
    fn check(&mut self, slack: f64, what: impl FnOnce() -> String) {
        let slack = if slack.is_nan() { -f64::INFINITY } else { slack };
        if slack < self.margin {
            self.margin = slack;
        }
        if slack < 0.0 {
            self.pass = false;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(what());
            }
        }
    }

    /// `err <= tol`, slack expressed as `1 - err/tol`.
    fn within(&mut self, err: f64, tol: f64, what: impl FnOnce() -> String) {
        self.check(1.0 - err / tol, what);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub events: usize,
    pub lambda: f64,
    pub mu: f64,
    /// `J₀ = J̃(t_1)/λ`.
    pub j0: f64,
    /// `K₀ = K̃_∥(t_1⁺)/μ`.
    pub k0: f64,
    pub clause1: ClauseResult,
    pub clause1b: ClauseResult,
    pub clause2: ClauseResult,
    pub clause3: ClauseResult,
    pub clause4: ClauseResult,
    pub clause5: ClauseResult,
    /// Arc length of `S_k` for every event.
    pub arcs: Vec<f64>,
    pub final_arc: f64,
    pub arc_converged: bool,
    /// Angle between `v̂_2(t_K⁺)` and `-v̂_2(t_{K-1}⁺)` for the last two events.
    pub messenger_reversal: f64,
    pub all_pass: bool,
}

fn slot(x: &[f64], dim: usize, i: usize) -> &[f64] {
    &x[i * dim..(i + 1) * dim]
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn action_scale(dim: usize, q: &[f64], p: &[f64]) -> f64 {
    (0..3)
        .map(|i| norm(slot(q, dim, i)) * norm(slot(p, dim, i)))
        .sum::<f64>()
        .max(1e-300)
}

fn momentum_scale(dim: usize, p: &[f64]) -> f64 {
    (0..3).map(|i| norm(slot(p, dim, i))).sum::<f64>().max(1e-300)
}

fn position_scale(dim: usize, q: &[f64]) -> f64 {
    (0..3)
        .map(|i| norm(slot(q, dim, i)))
        .fold(0.0, f64::max)
        .max(1e-300)
}

fn planar_angle(v: &[f64]) -> f64 {
    if v.len() == 1 {
        if v[0] >= 0.0 {
            0.0
        } else {
            core::f64::consts::PI
        }
    } else {
        libm::atan2(v[1], v[0])
    }
}

/// Signed angle from `a` to `b` in `(-π, π]`.
fn wrap(x: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let mut y = x % tau;
    if y > core::f64::consts::PI {
        y -= tau;
    } else if y <= -core::f64::consts::PI {
        y += tau;
    }
    y
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// The union of minor arcs `[a, c] ∪ [c, b]` as a centre angle and an
/// offset interval around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn new(a: &[f64], c: &[f64], b: &[f64]) -> Arc {
        let center = planar_angle(c);
        let da = wrap(planar_angle(a) - center);
        let db = wrap(planar_angle(b) - center);
        Arc {
            center,
            lo: da.min(db).min(0.0),
            hi: da.max(db).max(0.0),
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether `self ⊆ outer` up to `tol` radians.
    pub fn inside(&self, outer: &Arc, tol: f64) -> (bool, f64) {
        let shift = wrap(self.center - outer.center);
        let lo = shift + self.lo;
        let hi = shift + self.hi;
        let slack = (lo - outer.lo).min(outer.hi - hi);
        (slack >= -tol, slack)
    }
}

/// `S_k` from the post-collision velocity directions of event `k`.
pub fn segment(e: &CollisionEvent) -> Arc {
    let dim = e.dim;
    let v = |i: usize| unit(slot(&e.p_post, dim, i));
    let c = v(1);
    if e.k % 2 == 1 {
        Arc::new(&neg(&v(0)), &c, &v(2))
    } else {
        Arc::new(&neg(&v(2)), &c, &v(0))
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    // atan2 keeps full precision near 0 and π, unlike acos
    libm::atan2(norm(&wedge(a, b)), dot(a, b))
}

/// Checks every clause on a trace of at least [`MIN_EVENTS`] events.
pub fn verify_proposition(events: &[CollisionEvent]) -> Result<VerificationReport> {
    if events.len() < MIN_EVENTS {
        return Err(Error::TraceTooShort {
            len: events.len(),
            min: MIN_EVENTS,
        });
    }
    let first = &events[0];
    let dim = first.dim;
    if dim != 1 && dim != 2 {
        return Err(crate::error::param("trace dimension must be 1 or 2"));
    }
    for e in events {
        if e.dim != dim
            || e.q.len() != 3 * dim
            || e.p_pre.len() != 3 * dim
            || e.p_post.len() != 3 * dim
        {
            return Err(crate::error::param(format!(
                "event {} has inconsistent vector lengths",
                e.k
            )));
        }
    }
    let (m_min, m_max) = (first.m_min, first.m_max);
    let lam = lambda(m_min, m_max);
    let mu_ = mu(m_min, m_max);

    let pre: Vec<_> = events
        .iter()
        .map(|e| observables_of(dim, &e.masses_pre, &e.q, &e.p_pre, None))
        .collect();
    let post: Vec<_> = events
        .iter()
        .map(|e| observables_of(dim, &e.masses_post, &e.q, &e.p_post, None))
        .collect();
    let k_par: Vec<f64> = events
        .iter()
        .map(|e| parallel_kinetic_energy_unchecked(dim, &e.masses_post, &e.q, &e.p_post).unwrap_or(f64::NAN))
        .collect();

    // clause 1: conservation laws and the angular momentum bound
    let mut c1 = ClauseResult::new();
    let l_ref = pre[0].l.clone();
    let s_ref = action_scale(dim, &first.q, &first.p_pre);
    let p_ref: Vec<f64> = (0..dim)
        .map(|a| (0..3).map(|i| first.p_pre[i * dim + a]).sum())
        .collect();
    for (idx, e) in events.iter().enumerate() {
        let k = e.k;
        let (i, j) = pair_for(k);
        if e.pair != [i + 1, j + 1] || (idx > 0 && k != events[idx - 1].k + 1) {
            c1.check(-1.0, || format!("event {k}: pair {:?} out of the alternating pattern", e.pair));
        }
        if e.m_min != m_min || e.m_max != m_max {
            c1.check(-1.0, || format!("event {k}: mass bounds change"));
        }
        for m in e.masses_post {
            c1.check((m - m_min).min(m_max - m) / m_max + CONSERVATION_TOL, || {
                format!("event {k}: mass {m} outside bounds")
            });
        }
        let pscale = momentum_scale(dim, &e.p_pre).max(momentum_scale(dim, &e.p_post));
        let qscale = position_scale(dim, &e.q);
        let sk = action_scale(dim, &e.q, &e.p_pre).max(action_scale(dim, &e.q, &e.p_post));
        c1.within(
            diff_norm(slot(&e.q, dim, i), slot(&e.q, dim, j)) / qscale,
            IDENTITY_TOL,
            || format!("event {k}: pair positions differ"),
        );
        let msum_pre = e.masses_pre[i] + e.masses_pre[j];
        let msum_post = e.masses_post[i] + e.masses_post[j];
        c1.within((msum_pre - msum_post).abs() / msum_pre, CONSERVATION_TOL, || {
            format!("event {k}: pair mass sum changes")
        });
        let other = 3 - i - j;
        c1.within(
            (e.masses_pre[other] - e.masses_post[other]).abs() / e.masses_pre[other],
            CONSERVATION_TOL,
            || format!("event {k}: bystander mass changes"),
        );
        c1.within(
            diff_norm(slot(&e.p_pre, dim, other), slot(&e.p_post, dim, other)) / pscale,
            CONSERVATION_TOL,
            || format!("event {k}: bystander momentum changes"),
        );
        let pp_pre: Vec<f64> = (0..dim)
            .map(|a| e.p_pre[i * dim + a] + e.p_pre[j * dim + a])
            .collect();
        let pp_post: Vec<f64> = (0..dim)
            .map(|a| e.p_post[i * dim + a] + e.p_post[j * dim + a])
            .collect();
        c1.within(diff_norm(&pp_pre, &pp_post) / pscale, CONSERVATION_TOL, || {
            format!("event {k}: pair momentum changes")
        });
        let p_tot: Vec<f64> = (0..dim)
            .map(|a| (0..3).map(|i| e.p_post[i * dim + a]).sum())
            .collect();
        c1.within(diff_norm(&p_tot, &p_ref) / pscale, CONSERVATION_TOL, || {
            format!("event {k}: total momentum changes")
        });
        for (l, when) in [(&pre[idx].l, "before"), (&post[idx].l, "after")] {
            c1.within(
                diff_norm(l, &l_ref) / sk.max(s_ref),
                CONSERVATION_TOL,
                || format!("event {k}: angular momentum {when} the collision differs from the initial value"),
            );
        }
        let l_norm = norm(&post[idx].l);
        for (n, li) in post[idx].l_i.iter().enumerate() {
            let excess = norm(li) - l_norm;
            c1.check(CONSERVATION_TOL - excess / sk, || {
                format!("event {k}: |L_{}| exceeds |L|", n + 1)
            });
        }
        if idx + 1 < events.len() {
            let nx = &events[idx + 1];
            let dt = nx.t - e.t;
            c1.check(dt, || format!("event {k}: times not increasing"));
            c1.within((dt - e.gap).abs() / dt.abs().max(1e-300), IDENTITY_TOL, || {
                format!("event {k}: next collision does not follow the chosen gap")
            });
            for n in 0..3 {
                c1.within(
                    (nx.masses_pre[n] - e.masses_post[n]).abs() / e.masses_post[n],
                    CONSERVATION_TOL,
                    || format!("event {}: mass of particle {} changed between collisions", k + 1, n + 1),
                );
            }
            let ps = pscale.max(momentum_scale(dim, &nx.p_pre));
            c1.within(diff_norm(&nx.p_pre, &e.p_post) / ps, CONSERVATION_TOL, || {
                format!("event {}: momenta changed between collisions", k + 1)
            });
            let qs = qscale.max(position_scale(dim, &nx.q));
            let mut moved = e.q.clone();
            for n in 0..3 {
                for a in 0..dim {
                    moved[n * dim + a] += e.p_post[n * dim + a] / e.masses_post[n] * dt;
                }
            }
            c1.within(diff_norm(&moved, &nx.q) / qs, IDENTITY_TOL, || {
                format!("event {}: positions are not reached by straight-line motion", k + 1)
            });
        }
    }

    // clause 1b: L_1 = (M-m_1)/M L, L_2 = -m_2/M L, L_3 = (M-m_3)/M L
    let mut c1b = ClauseResult::new();
    for (idx, e) in events.iter().enumerate() {
        let m: f64 = e.masses_post.iter().sum();
        let factors = [
            (m - e.masses_post[0]) / m,
            -e.masses_post[1] / m,
            (m - e.masses_post[2]) / m,
        ];
        let sk = action_scale(dim, &e.q, &e.p_post);
        for n in 0..3 {
            let expected: Vec<f64> = post[idx].l.iter().map(|x| x * factors[n]).collect();
            c1b.within(diff_norm(&post[idx].l_i[n], &expected) / sk, IDENTITY_TOL, || {
                format!("event {}: L_{} deviates from its share of L", e.k, n + 1)
            });
        }
    }

    // clause 2: C¹ moment of inertia, the J′ recursion and geometric growth
    let mut c2 = ClauseResult::new();
    let j0 = pre[0].j / lam;
    for (idx, e) in events.iter().enumerate() {
        let sk = action_scale(dim, &e.q, &e.p_pre).max(action_scale(dim, &e.q, &e.p_post));
        c2.within((pre[idx].j_prime - post[idx].j_prime).abs() / sk, IDENTITY_TOL, || {
            format!("event {}: J' jumps at the collision", e.k)
        });
        if idx + 1 < events.len() {
            let dt = events[idx + 1].t - e.t;
            let predicted = post[idx].j_prime + 2.0 * dt * post[idx].k;
            let actual = post[idx + 1].j_prime;
            let scale = actual
                .abs()
                .max(action_scale(dim, &events[idx + 1].q, &events[idx + 1].p_post));
            c2.within((actual - predicted).abs() / scale, IDENTITY_TOL, || {
                format!("event {}: J' recursion fails", e.k + 1)
            });
        }
        if idx >= 1 {
            let bound = libm::pow(lam, (idx + 1) as f64) * j0;
            c2.check(pre[idx].j / bound - 1.0 + CONSERVATION_TOL, || {
                format!("event {}: J below the geometric bound", e.k)
            });
        }
    }

    // clause 3: sign conditions after every collision
    let mut c3 = ClauseResult::new();
    for e in events {
        let s = sign_margins(dim, &e.q, &e.p_post);
        for (n, v) in s.iter().enumerate() {
            c3.check(*v, || format!("event {}: sign condition for particle {} fails", e.k, n + 1));
        }
    }

    // clause 4: parallel kinetic energy grows by at least μ per collision
    let mut c4 = ClauseResult::new();
    let k0 = k_par[0] / mu_;
    for idx in 0..events.len() {
        let k = events[idx].k;
        if idx + 1 < events.len() {
            let ratio = k_par[idx + 1] / k_par[idx];
            c4.check(ratio / mu_ - 1.0 + CONSERVATION_TOL, || {
                format!("event {}: K_par ratio {ratio} below mu", k + 1)
            });
        }
        if idx >= 1 {
            let bound = libm::pow(mu_, (idx + 1) as f64) * k0;
            c4.check(k_par[idx] / bound - 1.0 + CONSERVATION_TOL, || {
                format!("event {k}: K_par below the geometric bound")
            });
            c4.check(post[idx].k / bound - 1.0 + CONSERVATION_TOL, || {
                format!("event {k}: K below the geometric bound")
            });
        }
    }

    // clause 5: nested arcs and opposite messenger limits
    let mut c5 = ClauseResult::new();
    let segs: Vec<Arc> = events.iter().map(segment).collect();
    let arcs: Vec<f64> = segs.iter().map(Arc::length).collect();
    for idx in 0..events.len().saturating_sub(2) {
        let (_, slack) = segs[idx + 2].inside(&segs[idx], ARC_TOL);
        c5.check(slack / ARC_TOL + 1.0, || {
            format!("event {}: S_(k+2) not contained in S_k", events[idx].k)
        });
    }
    let n = events.len();
    let w_last = unit(slot(&events[n - 1].p_post, dim, 1));
    let w_prev = unit(slot(&events[n - 2].p_post, dim, 1));
    let messenger_reversal = angle_between(&w_last, &neg(&w_prev));
    let reversal_bound = arcs[n - 1] + arcs[n - 2] + ARC_TOL;
    c5.check(1.0 - messenger_reversal / reversal_bound, || {
        format!("messenger directions are not opposite: angle {messenger_reversal}")
    });
    let final_arc = arcs[n - 1];

    let all_pass = c1.pass && c1b.pass && c2.pass && c3.pass && c4.pass && c5.pass;
    Ok(VerificationReport {
        events: n,
        lambda: lam,
        mu: mu_,
        j0,
        k0,
        clause1: c1,
        clause1b: c1b,
        clause2: c2,
        clause3: c3,
        clause4: c4,
        clause5: c5,
        arcs,
        final_arc,
        arc_converged: final_arc < ARC_CONVERGED,
        messenger_reversal,
        all_pass,
    })
}
