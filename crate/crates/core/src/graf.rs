//! Graf partition of configuration space and the cluster function.
//!
//! For `δ ∈ (0,1]` the max-function is
//! `J^(δ)(q) = max_𝒞 ( J^E_𝒞(q) + δ^{|𝒞|} )` and the region of `𝒞` is where
//! it attains the maximum. The cluster function evaluates the region of the
//! scaled configuration `q(t) / t^{1-ε/2}`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::mass::{mass_inner_unchecked, project_external, MassSystem};
use crate::partitions::{enumerate_partitions, Partition, MAX_ENUMERATION_N};
use crate::path::{check_increasing, PhasePath};

/// Relative time tolerance for change-point bisection.
pub const CHANGE_POINT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrafParams {
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for GrafParams {
    fn default() -> Self {
        GrafParams {
            delta: 0.1,
            epsilon: 0.5,
        }
    }
}

impl GrafParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(param("delta must lie in (0,1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(param("epsilon must lie in (0,1)"));
        }
        Ok(())
    }

    /// Exponent `1 - ε/2` of the time scaling.
    pub fn scaling_exponent(&self) -> f64 {
        1.0 - 0.5 * self.epsilon
    }
}

/// `J^E_𝒞(q) + δ^{|𝒞|}`.
pub fn graf_score(sys: &MassSystem, q: &[f64], partition: &Partition, delta: f64) -> Result<f64> {
    let qe = project_external(sys, q, partition)?;
    Ok(0.5 * mass_inner_unchecked(sys, &qe, &qe) + libm::pow(delta, partition.rank() as f64))
}

fn check_inputs(sys: &MassSystem, q: &[f64], params: &GrafParams) -> Result<()> {
    params.validate()?;
    sys.check_config(q)?;
    if sys.n() > MAX_ENUMERATION_N {
        return Err(param("Graf maximization supports at most 12 particles"));
    }
    Ok(())
}

/// True when `(score, partition)` beats the incumbent under the tie rule:
/// higher score, then larger rank, then smaller canonical order.
fn better(score: f64, p: &Partition, best: &Option<(f64, Partition)>) -> bool {
    match best {
        None => true,
        Some((s, b)) => {
            score > *s
                || (score == *s && (p.rank() > b.rank() || (p.rank() == b.rank() && p < b)))
        }
    }
}

/// Maximizer by scanning the whole lattice. Serves as the reference for
/// [`graf_region`].
pub fn graf_region_exhaustive(
    sys: &MassSystem,
    q: &[f64],
    params: &GrafParams,
) -> Result<(Partition, f64)> {
    check_inputs(sys, q, params)?;
    let mut best: Option<(f64, Partition)> = None;
    for p in enumerate_partitions(sys.n())? {
        let s = graf_score(sys, q, &p, params.delta)?;
        if better(s, &p, &best) {
            best = Some((s, p));
        }
    }
    let (s, p) = best.expect("lattice is nonempty");
    Ok((p, s))
}

struct Search<'a> {
    sys: &'a MassSystem,
    q: &'a [f64],
    delta: f64,
    /// `½ m_i ‖q_i‖²`, suffix sums.
    tail: Vec<f64>,
    labels: Vec<usize>,
    sums: Vec<Vec<f64>>,
    block_mass: Vec<f64>,
    best: Option<(f64, Partition)>,
}

impl Search<'_> {
    fn partial_value(&self, blocks: usize) -> f64 {
        let mut j = 0.0;
        for b in 0..blocks {
            let s = &self.sums[b];
            j += s.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.block_mass[b]);
        }
        j
    }

    fn descend(&mut self, i: usize, blocks: usize) -> Result<()> {
        let n = self.sys.n();
        if i == n {
            let p = Partition::from_labels(&self.labels);
            let s = graf_score(self.sys, self.q, &p, self.delta)?;
            if better(s, &p, &self.best) {
                self.best = Some((s, p));
            }
            return Ok(());
        }
        if let Some((best, _)) = &self.best {
            // J^E is subadditive under merging, so the unassigned particles
            // contribute at most their own J; δ^rank only shrinks with rank
            let bound = self.partial_value(blocks)
                + self.tail[i]
                + libm::pow(self.delta, blocks.max(1) as f64);
            if bound < *best - 1e-12 * (1.0 + best.abs()) {
                return Ok(());
            }
        }
        let d = self.sys.d();
        let m = self.sys.mass(i);
        for b in 0..=blocks {
            if b == blocks {
                self.sums.push(vec![0.0; d]);
                self.block_mass.push(0.0);
            }
            for k in 0..d {
                self.sums[b][k] += m * self.q[i * d + k];
            }
            self.block_mass[b] += m;
            self.labels[i] = b;
            self.descend(i + 1, blocks.max(b + 1))?;
            for k in 0..d {
                self.sums[b][k] -= m * self.q[i * d + k];
            }
            self.block_mass[b] -= m;
            if b == blocks {
                self.sums.pop();
                self.block_mass.pop();
            }
        }
        Ok(())
    }
}

/// Graf region containing `q` and the value `J^(δ)(q)`, found by
/// branch-and-bound over restricted growth strings. Agrees with
/// [`graf_region_exhaustive`] including the tie rule.
pub fn graf_region_with_value(
    sys: &MassSystem,
    q: &[f64],
    params: &GrafParams,
) -> Result<(Partition, f64)> {
    check_inputs(sys, q, params)?;
    let n = sys.n();
    let d = sys.d();
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let qi = &q[i * d..(i + 1) * d];
        tail[i] = tail[i + 1] + 0.5 * sys.mass(i) * qi.iter().map(|x| x * x).sum::<f64>();
    }
    let mut search = Search {
        sys,
        q,
        delta: params.delta,
        tail,
        labels: vec![0; n],
        sums: Vec::new(),
        block_mass: Vec::new(),
        best: None,
    };
    // seed the incumbent with the finest partition, usually near-optimal
    // for spread-out configurations
    let finest = Partition::finest(n);
    let s = graf_score(sys, q, &finest, params.delta)?;
    search.best = Some((s, finest));
    search.descend(0, 0)?;
    let (s, p) = search.best.expect("incumbent set");
    Ok((p, s))
}

pub fn graf_region(sys: &MassSystem, q: &[f64], params: &GrafParams) -> Result<Partition> {
    Ok(graf_region_with_value(sys, q, params)?.0)
}

pub fn graf_value(sys: &MassSystem, q: &[f64], params: &GrafParams) -> Result<f64> {
    Ok(graf_region_with_value(sys, q, params)?.1)
}

/// Whether `q` lies in the closed region of `partition`.
pub fn in_region(
    sys: &MassSystem,
    q: &[f64],
    partition: &Partition,
    params: &GrafParams,
) -> Result<bool> {
    let v = graf_value(sys, q, params)?;
    let s = graf_score(sys, q, partition, params.delta)?;
    Ok(s >= v - 1e-12 * (1.0 + v.abs()))
}

/// A maximal time interval with constant cluster function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub t: f64,
    pub before: Partition,
    pub after: Partition,
    pub comparable: bool,
}

/// Piecewise-constant cluster function `𝒜(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTimeline {
    pub intervals: Vec<TimelineInterval>,
    pub change_points: Vec<ChangePoint>,
}

impl ClusterTimeline {
    pub fn partition_at(&self, t: f64) -> Option<&Partition> {
        self.intervals
            .iter()
            .find(|iv| t >= iv.t_start && t <= iv.t_end)
            .map(|iv| &iv.partition)
    }

    pub fn last(&self) -> Option<&Partition> {
        self.intervals.last().map(|iv| &iv.partition)
    }
}

/// Region of the scaled configuration `q(t) / t^{1-ε/2}`.
pub fn scaled_region<P: PhasePath + ?Sized>(
    sys: &MassSystem,
    path: &P,
    t: f64,
    params: &GrafParams,
) -> Result<Partition> {
    if t <= 0.0 {
        return Err(param("cluster function needs t > 0"));
    }
    let state = path.state_at(t)?;
    let s = libm::pow(t, -params.scaling_exponent());
    let scaled: Vec<f64> = state.q.iter().map(|x| x * s).collect();
    graf_region(sys, &scaled, params)
}

/// Cluster function along a sampled path with change points refined by
/// bisection to relative tolerance [`CHANGE_POINT_RTOL`].
pub fn cluster_function<P: PhasePath + ?Sized>(
    sys: &MassSystem,
    path: &P,
    params: &GrafParams,
) -> Result<ClusterTimeline> {
    params.validate()?;
    let times = path.sample_times();
    check_increasing(&times)?;
    if times.is_empty() {
        return Err(param("path has no samples"));
    }
    if times[0] <= 0.0 {
        return Err(param("cluster function needs sample times t > 0"));
    }
    let region = |t: f64| scaled_region(sys, path, t, params);

    let mut intervals = Vec::new();
    let mut change_points = Vec::new();
    let mut start = times[0];
    let mut current = region(start)?;
    for w in times.windows(2) {
        let end_region = region(w[1])?;
        let mut lo = w[0];
        while end_region != current {
            let mut hi = w[1];
            let mut hi_region = end_region.clone();
            while hi - lo > CHANGE_POINT_RTOL * hi.abs().max(f64::MIN_POSITIVE) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let r = region(mid)?;
                if r == current {
                    lo = mid;
                } else {
                    hi = mid;
                    hi_region = r;
                }
            }
            let t = 0.5 * (lo + hi);
            intervals.push(TimelineInterval {
                t_start: start,
                t_end: t,
                partition: current.clone(),
            });
            change_points.push(ChangePoint {
                t,
                comparable: current.comparable(&hi_region)?,
                before: current,
                after: hi_region.clone(),
            });
            start = t;
            current = hi_region;
            lo = hi;
        }
    }
    intervals.push(TimelineInterval {
        t_start: start,
        t_end: *times.last().expect("nonempty"),
        partition: current,
    });
    Ok(ClusterTimeline {
        intervals,
        change_points,
    })
}

/// One sample of the von Zeipel diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VonZeipelSample {
    pub t: f64,
    /// `J(q/t)`.
    pub j: f64,
    /// `J((q/t)^E)` for the external projection of `𝒜(t)`.
    pub j_ext: f64,
    /// `J^(δ)(q/t)`.
    pub j_delta: f64,
    /// `(1/2t) ⟨Q^E, dq^E/dt - Q^E⟩_ℳ` with `Q = q/t`.
    pub dj_ext: f64,
    /// The same inner product with prefactor `1/t`, the exact derivative of
    /// `j_ext` while `𝒜` is constant.
    pub dj_ext_exact: f64,
    pub partition: Partition,
}

/// von Zeipel series on the sample grid of `path`. The derivative of `q^E`
/// uses finite differences of neighbouring samples with the partition of
/// the centre sample (one-sided at the ends).
pub fn von_zeipel_series<P: PhasePath + ?Sized>(
    sys: &MassSystem,
    path: &P,
    params: &GrafParams,
) -> Result<Vec<VonZeipelSample>> {
    params.validate()?;
    let times = path.sample_times();
    check_increasing(&times)?;
    if times.iter().any(|t| *t <= 0.0) {
        return Err(param("von Zeipel series needs sample times t > 0"));
    }
    if times.len() < 2 {
        return Err(param("von Zeipel series needs at least two samples"));
    }
    let states = times
        .iter()
        .map(|&t| path.state_at(t))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let q = &states[k].q;
        sys.check_config(q)?;
        let partition = scaled_region(sys, path, t, params)?;
        let big_q: Vec<f64> = q.iter().map(|x| x / t).collect();
        let q_ext = project_external(sys, &big_q, &partition)?;
        let j = 0.5 * mass_inner_unchecked(sys, &big_q, &big_q);
        let j_ext = 0.5 * mass_inner_unchecked(sys, &q_ext, &q_ext);
        let j_delta = graf_value(sys, &big_q, params)?;

        let (a, b) = if k == 0 {
            (0, 1)
        } else if k + 1 == times.len() {
            (k - 1, k)
        } else {
            (k - 1, k + 1)
        };
        let qa = project_external(sys, &states[a].q, &partition)?;
        let qb = project_external(sys, &states[b].q, &partition)?;
        let dt = times[b] - times[a];
        let diff: Vec<f64> = qa
            .iter()
            .zip(&qb)
            .zip(&q_ext)
            .map(|((x, y), e)| (y - x) / dt - e)
            .collect();
        let ip = mass_inner_unchecked(sys, &q_ext, &diff);
        out.push(VonZeipelSample {
            t,
            j,
            j_ext,
            j_delta,
            dj_ext: ip / (2.0 * t),
            dj_ext_exact: ip / t,
            partition,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::PhaseState;
    use crate::path::FnPath;

    fn unit4(d: usize) -> MassSystem {
        MassSystem::new(d, vec![1.0; 4]).unwrap()
    }

    #[test]
    fn origin_with_unit_delta() {
        let sys = unit4(2);
        let params = GrafParams {
            delta: 1.0,
            epsilon: 0.5,
        };
        let q = [0.0; 8];
        let (p, v) = graf_region_with_value(&sys, &q, &params).unwrap();
        assert_eq!(v, 1.0);
        // every partition ties at 1; the tie rule picks the finest
        assert_eq!(p, Partition::finest(4));
    }

    #[test]
    fn coincident_particles_pick_coarsest() {
        let sys = unit4(1);
        let q = [50.0; 4];
        let p = graf_region(&sys, &q, &GrafParams::default()).unwrap();
        assert_eq!(p, Partition::coarsest(4));
    }

    #[test]
    fn tight_pairs() {
        let sys = unit4(1);
        let q = [-10.0, -10.001, 10.0, 10.002];
        let p = graf_region(&sys, &q, &GrafParams::default()).unwrap();
        assert_eq!(
            p,
            Partition::from_one_based(&[vec![1, 2], vec![3, 4]]).unwrap()
        );
        assert_eq!(
            graf_region_exhaustive(&sys, &q, &GrafParams::default()).unwrap().0,
            p
        );
    }

    #[test]
    fn parameters_are_validated() {
        let sys = unit4(1);
        let bad = GrafParams {
            delta: 0.0,
            epsilon: 0.5,
        };
        assert!(graf_value(&sys, &[0.0; 4], &bad).is_err());
        let bad = GrafParams {
            delta: 0.1,
            epsilon: 1.0,
        };
        assert!(graf_value(&sys, &[0.0; 4], &bad).is_err());
    }

    #[test]
    fn non_monotone_samples_are_rejected() {
        let sys = MassSystem::new(1, vec![1.0, 1.0]).unwrap();
        let path = FnPath::new(vec![1.0, 3.0, 2.0], |t| {
            PhaseState::new(t, vec![0.0, t], vec![0.0, 1.0])
        });
        assert!(cluster_function(&sys, &path, &GrafParams::default()).is_err());
        let path = FnPath::new(vec![0.0, 1.0], |t| {
            PhaseState::new(t, vec![0.0, t], vec![0.0, 1.0])
        });
        assert!(von_zeipel_series(&sys, &path, &GrafParams::default()).is_err());
    }
}
