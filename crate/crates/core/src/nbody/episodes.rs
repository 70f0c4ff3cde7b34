//! Messenger episodes: rank-3 phases of the cluster function flanked by
//! non-comparable rank-2 phases.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::graf::{cluster_function, ClusterTimeline, GrafParams, TimelineInterval};
use crate::mass::{relative_pair, split_h, split_k, split_l, MassSystem, PairQuantities, PhaseState};
use crate::partitions::{MessengerTuple, Partition};
use crate::path::{PhasePath, Window};
use crate::potential::PotentialSpec;

use super::poincare::{count_crossings, Crossing, PoincareSurfaceSpec};
use super::{energy, PoincareParams, Scenario, Trajectory};

/// Internal state of the nontrivial cluster `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    /// 0-based indices of `D`.
    pub block: Vec<usize>,
    pub h_int: f64,
    /// Internal angular momentum; empty in one dimension.
    pub l_int: Vec<f64>,
    /// Euclidean norm of the internal coordinates `q^I_D`.
    pub internal_norm: f64,
    /// Largest pair separation inside `D`.
    pub separation: f64,
    /// `(|I|/|H^I_D|)^{1/α}` for a bound two-body cluster.
    pub size_bound: Option<f64>,
}

impl ClusterDiagnostics {
    /// Whether the separation respects the size bound, if one applies.
    pub fn bound_holds(&self) -> Option<bool> {
        self.size_bound
            .map(|b| self.separation <= b * (1.0 + 1e-12))
    }
}

/// Messenger kinetic share `K^E_{C2} / K^E_𝒜` and the reference constant
/// `m_min / (7 m_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticFraction {
    pub messenger: f64,
    pub external: f64,
    pub fraction: f64,
    pub reference: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDiagnostics {
    pub t: f64,
    pub nontrivial: Option<ClusterDiagnostics>,
    pub kinetic: KineticFraction,
    /// Relative quantities of `(C1, C2)`.
    pub departing: PairQuantities,
    /// Relative quantities of `(C2, C3)`.
    pub arriving: PairQuantities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Episode number, starting at 1.
    pub k: usize,
    /// Index of the rank-3 interval in the timeline.
    pub interval_index: usize,
    /// `(t_k, t_{k+1})`, the bounds of the rank-3 phase.
    pub interval: (f64, f64),
    /// Before, during and after.
    pub partitions: [Partition; 3],
    pub tuple: MessengerTuple,
    pub diagnostics: Option<EpisodeDiagnostics>,
    pub crossings: Vec<Crossing>,
}

/// Matches the messenger pattern at interval `i` of a timeline.
fn tuple_at(intervals: &[TimelineInterval], i: usize) -> Option<MessengerTuple> {
    if i == 0 || i + 1 >= intervals.len() {
        return None;
    }
    let prev = &intervals[i - 1].partition;
    let mid = &intervals[i].partition;
    let next = &intervals[i + 1].partition;
    if mid.rank() != 3 || prev.rank() != 2 || next.rank() != 2 {
        return None;
    }
    if !mid.is_refinement(prev).ok()? || !mid.is_refinement(next).ok()? {
        return None;
    }
    if prev.comparable(next).ok()? {
        return None;
    }
    let c3 = prev.blocks().iter().find(|b| mid.contains_block(b))?.clone();
    let c1 = next.blocks().iter().find(|b| mid.contains_block(b))?.clone();
    let c2 = mid
        .blocks()
        .iter()
        .find(|b| **b != c1 && **b != c3)?
        .clone();
    MessengerTuple::new(c1, c2, c3).ok()
}

/// Messenger tuples read off a timeline, as `(interval index, tuple)`.
pub fn timeline_episodes(timeline: &ClusterTimeline) -> Vec<(usize, MessengerTuple)> {
    (1..timeline.intervals.len().saturating_sub(1))
        .filter_map(|i| tuple_at(&timeline.intervals, i).map(|t| (i, t)))
        .collect()
}

/// Diagnostics of the unique block of size at least two.
pub fn nontrivial_cluster_diagnostics(
    scenario: &Scenario,
    state: &PhaseState,
    partition: &Partition,
) -> Result<ClusterDiagnostics> {
    cluster_diagnostics(&scenario.system, &scenario.potential, state, partition)
}

fn cluster_diagnostics(
    sys: &MassSystem,
    potential: &PotentialSpec,
    state: &PhaseState,
    partition: &Partition,
) -> Result<ClusterDiagnostics> {
    let mut nontrivial = partition
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.len() >= 2);
    let (idx, block) = match (nontrivial.next(), nontrivial.next()) {
        (Some(found), None) => found,
        _ => return Err(param("partition needs exactly one block of size >= 2")),
    };
    let h = split_h(sys, state, partition, potential)?;
    let h_int = h.int[idx];
    let l_int = if sys.d() >= 2 {
        split_l(sys, state, partition)?.int.swap_remove(idx)
    } else {
        Vec::new()
    };
    let d = sys.d();
    let m_d = sys.cluster_mass(block);
    let mut bary = alloc::vec![0.0; d];
    for &i in block {
        for a in 0..d {
            bary[a] += sys.mass(i) * state.q[i * d + a] / m_d;
        }
    }
    let mut sq = 0.0;
    for &i in block {
        for a in 0..d {
            let r = state.q[i * d + a] - bary[a];
            sq += r * r;
        }
    }
    let mut separation: f64 = 0.0;
    for (x, &i) in block.iter().enumerate() {
        for &j in &block[x + 1..] {
            separation = separation.max(sys.distance(&state.q, i, j));
        }
    }
    let size_bound = if block.len() == 2 && h_int < 0.0 {
        let law = potential.pair(block[0], block[1]);
        (law.coupling != 0.0)
            .then(|| libm::pow(law.coupling.abs() / h_int.abs(), 1.0 / law.alpha))
    } else {
        None
    };
    Ok(ClusterDiagnostics {
        block: block.clone(),
        h_int,
        l_int,
        internal_norm: libm::sqrt(sq),
        separation,
        size_bound,
    })
}

/// `K^E_{C2}` against `K^E_𝒜` for the rank-3 partition of `tuple`.
pub fn kinetic_fraction(
    sys: &MassSystem,
    state: &PhaseState,
    tuple: &MessengerTuple,
) -> Result<KineticFraction> {
    let p = tuple.partition();
    let external = split_k(sys, &state.p, &p)?.ext;
    let d = sys.d();
    let m2 = sys.cluster_mass(&tuple.c2);
    let mut p2 = alloc::vec![0.0; d];
    for &i in &tuple.c2 {
        for a in 0..d {
            p2[a] += state.p[i * d + a];
        }
    }
    let messenger = p2.iter().map(|x| x * x).sum::<f64>() / (2.0 * m2);
    let reference = sys.m_min() / (7.0 * sys.m_max());
    let fraction = if external > 0.0 {
        messenger / external
    } else {
        f64::NAN
    };
    Ok(KineticFraction {
        messenger,
        external,
        fraction,
        reference,
        holds: messenger >= reference * external,
    })
}

fn diagnostics(
    sys: &MassSystem,
    potential: &PotentialSpec,
    state: &PhaseState,
    tuple: &MessengerTuple,
) -> Result<EpisodeDiagnostics> {
    let partition = tuple.partition();
    Ok(EpisodeDiagnostics {
        t: state.t,
        nontrivial: cluster_diagnostics(sys, potential, state, &partition).ok(),
        kinetic: kinetic_fraction(sys, state, tuple)?,
        departing: relative_pair(sys, state, &tuple.c1, &tuple.c2, potential)?,
        arriving: relative_pair(sys, state, &tuple.c2, &tuple.c3, potential)?,
    })
}

/// Episodes along an arbitrary path. Diagnostics are taken at the midpoint
/// of each rank-3 phase and crossings are searched from the start of the
/// preceding phase to the end of the following one.
pub fn detect_episodes_on_path<P: PhasePath + ?Sized>(
    sys: &MassSystem,
    potential: &PotentialSpec,
    path: &P,
    graf: &GrafParams,
    poincare: &PoincareParams,
    level: Option<f64>,
) -> Result<Vec<EpisodeRecord>> {
    let timeline = cluster_function(sys, path, graf)?;
    let mut out = Vec::new();
    for (i, tuple) in timeline_episodes(&timeline) {
        let iv = &timeline.intervals;
        let mid = 0.5 * (iv[i].t_start + iv[i].t_end);
        let state = path.state_at(mid)?;
        let diagnostics = diagnostics(sys, potential, &state, &tuple).ok();
        let mut crossings = Vec::new();
        let (w0, w1) = (iv[i - 1].t_start, iv[i + 1].t_end);
        if w0 < w1 {
            let window = Window::new(path, w0, w1)?;
            for &m in &poincare.m {
                let spec = PoincareSurfaceSpec {
                    m,
                    ell: poincare.ell,
                    tuple: tuple.clone(),
                    energy: level,
                };
                crossings.extend(count_crossings(sys, &window, &spec)?);
            }
        }
        crossings.sort_by(|a, b| a.t.total_cmp(&b.t));
        out.push(EpisodeRecord {
            k: out.len() + 1,
            interval_index: i,
            interval: (iv[i].t_start, iv[i].t_end),
            partitions: [
                iv[i - 1].partition.clone(),
                iv[i].partition.clone(),
                iv[i + 1].partition.clone(),
            ],
            tuple,
            diagnostics,
            crossings,
        });
    }
    Ok(out)
}

/// Episodes of an integrated scenario. Records at `t ≤ 0` are skipped since
/// the cluster function uses `q(t)/t^{1-ε/2}`.
pub fn detect_episodes(scenario: &Scenario, trajectory: &Trajectory) -> Result<Vec<EpisodeRecord>> {
    let level = energy(&scenario.system, &scenario.potential, &trajectory.first().state()).ok();
    let positive = trajectory.after(0.0);
    if positive.records.len() < 2 {
        return Err(param("trajectory needs at least two records at t > 0"));
    }
    detect_episodes_on_path(
        &scenario.system,
        &scenario.potential,
        &positive,
        &scenario.graf,
        &scenario.poincare,
        level,
    )
}
