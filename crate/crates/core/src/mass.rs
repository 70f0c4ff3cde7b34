//! Mass-metric geometry: cluster aggregates, external/internal projections
//! and the cluster splits of `L`, `K`, `V` and `H`.
//!
//! Configuration vectors are flat slices of length `n·d`, particle `i`
//! occupying `[i·d, (i+1)·d)`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::partitions::Partition;
use crate::potential::PotentialSpec;
use crate::vecops::{bivector_len, dot, norm, wedge_add};

/// Particle masses in `d` spatial dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSystem {
    d: usize,
    masses: Vec<f64>,
}

impl MassSystem {
    pub fn new(d: usize, masses: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(param("dimension must be at least 1"));
        }
        if masses.is_empty() {
            return Err(param("at least one particle is required"));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(param("masses must be finite and positive"));
        }
        Ok(MassSystem { d, masses })
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn m_min(&self) -> f64 {
        self.masses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn m_max(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of the masses in `c`.
    pub fn cluster_mass(&self, c: &[usize]) -> f64 {
        c.iter().map(|&i| self.masses[i]).sum()
    }

    /// Length of a configuration vector.
    pub fn dim(&self) -> usize {
        self.n() * self.d
    }

    /// Component block of particle `i`.
    pub fn slot<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.d..(i + 1) * self.d]
    }

    pub fn distance(&self, q: &[f64], i: usize, j: usize) -> f64 {
        let a = self.slot(q, i);
        let b = self.slot(q, j);
        libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
    }

    pub fn check_config(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(param(alloc::format!(
                "vector has {} entries, expected n*d = {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_partition(&self, partition: &Partition) -> Result<()> {
        if partition.n() != self.n() {
            return Err(Error::GroundSetMismatch {
                left: partition.n(),
                right: self.n(),
            });
        }
        Ok(())
    }

    fn check_cluster(&self, c: &[usize]) -> Result<()> {
        if c.is_empty() {
            return Err(param("cluster must be nonempty"));
        }
        if c.iter().any(|&i| i >= self.n()) {
            return Err(param("cluster index outside the particle set"));
        }
        Ok(())
    }

    /// Velocities `p_i / m_i`.
    pub fn velocities(&self, p: &[f64]) -> Vec<f64> {
        let d = self.d;
        p.iter()
            .enumerate()
            .map(|(k, x)| x / self.masses[k / d])
            .collect()
    }
}

/// Positions and momenta at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(t: f64, q: Vec<f64>, p: Vec<f64>) -> Self {
        PhaseState { t, q, p }
    }

    pub fn check(&self, sys: &MassSystem) -> Result<()> {
        sys.check_config(&self.q)?;
        sys.check_config(&self.p)?;
        if self.q.iter().chain(&self.p).any(|x| !x.is_finite()) || !self.t.is_finite() {
            return Err(param("state has non-finite entries"));
        }
        Ok(())
    }
}

/// `⟨a, ℳ b⟩ = Σ m_i ⟨a_i, b_i⟩`.
pub fn mass_inner(sys: &MassSystem, a: &[f64], b: &[f64]) -> Result<f64> {
    sys.check_config(a)?;
    sys.check_config(b)?;
    Ok(mass_inner_unchecked(sys, a, b))
}

pub(crate) fn mass_inner_unchecked(sys: &MassSystem, a: &[f64], b: &[f64]) -> f64 {
    let d = sys.d;
    (0..sys.n())
        .map(|i| sys.masses[i] * dot(&a[i * d..(i + 1) * d], &b[i * d..(i + 1) * d]))
        .sum()
}

/// Moment of inertia `J(q) = ½ Σ m_i ‖q_i‖²`.
pub fn moment_of_inertia(sys: &MassSystem, q: &[f64]) -> Result<f64> {
    Ok(0.5 * mass_inner(sys, q, q)?)
}

/// `K(p) = Σ ‖p_i‖² / 2m_i`.
pub fn kinetic_energy(sys: &MassSystem, p: &[f64]) -> Result<f64> {
    sys.check_config(p)?;
    Ok((0..sys.n())
        .map(|i| dot(sys.slot(p, i), sys.slot(p, i)) / (2.0 * sys.masses[i]))
        .sum())
}

/// Total angular momentum `Σ q_i ∧ p_i` as bivector components (`d ≥ 2`).
pub fn angular_momentum(sys: &MassSystem, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    if sys.d < 2 {
        return Err(param("angular momentum needs d >= 2"));
    }
    sys.check_config(q)?;
    sys.check_config(p)?;
    let mut l = vec![0.0; bivector_len(sys.d)];
    for i in 0..sys.n() {
        wedge_add(&mut l, sys.slot(q, i), sys.slot(p, i), 1.0);
    }
    Ok(l)
}

/// Total momentum `p_N = Σ p_i`.
pub fn total_momentum(sys: &MassSystem, p: &[f64]) -> Vec<f64> {
    let d = sys.d;
    let mut out = vec![0.0; d];
    for i in 0..sys.n() {
        for k in 0..d {
            out[k] += p[i * d + k];
        }
    }
    out
}

/// Mass, barycenter and momentum of a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAggregate {
    pub mass: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

fn barycenter(sys: &MassSystem, x: &[f64], c: &[usize]) -> (f64, Vec<f64>) {
    let d = sys.d;
    let mut m = 0.0;
    let mut acc = vec![0.0; d];
    for &i in c {
        m += sys.masses[i];
        for k in 0..d {
            acc[k] += sys.masses[i] * x[i * d + k];
        }
    }
    for a in &mut acc {
        *a /= m;
    }
    (m, acc)
}

fn block_sum(sys: &MassSystem, x: &[f64], c: &[usize]) -> Vec<f64> {
    let d = sys.d;
    let mut acc = vec![0.0; d];
    for &i in c {
        for k in 0..d {
            acc[k] += x[i * d + k];
        }
    }
    acc
}

/// `(m_C, q_C, p_C)` for a nonempty cluster `c` (0-based indices).
pub fn cluster_aggregates(
    sys: &MassSystem,
    state: &PhaseState,
    c: &[usize],
) -> Result<ClusterAggregate> {
    sys.check_cluster(c)?;
    state.check(sys)?;
    let (mass, q) = barycenter(sys, &state.q, c);
    let p = block_sum(sys, &state.p, c);
    Ok(ClusterAggregate { mass, q, p })
}

/// Barycenter `q_C` of a cluster.
pub fn cluster_barycenter(sys: &MassSystem, q: &[f64], c: &[usize]) -> Result<Vec<f64>> {
    sys.check_cluster(c)?;
    sys.check_config(q)?;
    Ok(barycenter(sys, q, c).1)
}

/// External projection of a configuration vector: every particle is moved
/// to the barycenter of its block.
pub fn project_external(sys: &MassSystem, x: &[f64], partition: &Partition) -> Result<Vec<f64>> {
    sys.check_config(x)?;
    sys.check_partition(partition)?;
    let d = sys.d;
    let mut out = vec![0.0; x.len()];
    for block in partition.blocks() {
        let (_, c) = barycenter(sys, x, block);
        for &i in block {
            out[i * d..(i + 1) * d].copy_from_slice(&c);
        }
    }
    Ok(out)
}

/// External projection of a momentum vector: `(p^E)_i = (m_i/m_C) p_C`.
pub fn project_external_momentum(
    sys: &MassSystem,
    p: &[f64],
    partition: &Partition,
) -> Result<Vec<f64>> {
    sys.check_config(p)?;
    sys.check_partition(partition)?;
    let d = sys.d;
    let mut out = vec![0.0; p.len()];
    for block in partition.blocks() {
        let m_c = sys.cluster_mass(block);
        let p_c = block_sum(sys, p, block);
        for &i in block {
            let s = sys.masses[i] / m_c;
            for k in 0..d {
                out[i * d + k] = s * p_c[k];
            }
        }
    }
    Ok(out)
}

fn complement(x: &[f64], ext: &[f64]) -> Vec<f64> {
    x.iter().zip(ext).map(|(a, b)| a - b).collect()
}

/// `(q^E, q^I)` with `q^E` the blockwise barycenters and `q^I = q - q^E`.
pub fn split_configuration(
    sys: &MassSystem,
    q: &[f64],
    partition: &Partition,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ext = project_external(sys, q, partition)?;
    let int = complement(q, &ext);
    Ok((ext, int))
}

/// External and internal phase-space components.
pub fn split_phase(
    sys: &MassSystem,
    state: &PhaseState,
    partition: &Partition,
) -> Result<(PhaseState, PhaseState)> {
    state.check(sys)?;
    let (qe, qi) = split_configuration(sys, &state.q, partition)?;
    let pe = project_external_momentum(sys, &state.p, partition)?;
    let pi = complement(&state.p, &pe);
    Ok((
        PhaseState::new(state.t, qe, pe),
        PhaseState::new(state.t, qi, pi),
    ))
}

/// Canonical two-form `ω((q,p),(q',p')) = Σ ⟨q,p'⟩ - ⟨p,q'⟩`.
pub fn symplectic_form(u: &PhaseState, w: &PhaseState) -> f64 {
    dot(&u.q, &w.p) - dot(&u.p, &w.q)
}

/// Angular momentum split: `L^E = Σ_C q_C ∧ p_C` and the internal part of
/// every block, in block order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LSplit {
    pub ext: Vec<f64>,
    pub int: Vec<Vec<f64>>,
}

pub fn split_l(sys: &MassSystem, state: &PhaseState, partition: &Partition) -> Result<LSplit> {
    if sys.d < 2 {
        return Err(param("angular momentum needs d >= 2"));
    }
    let (_, int) = split_phase(sys, state, partition)?;
    let blen = bivector_len(sys.d);
    let mut l_ext = vec![0.0; blen];
    let mut l_int = Vec::with_capacity(partition.rank());
    for block in partition.blocks() {
        let (_, q_c) = barycenter(sys, &state.q, block);
        let p_c = block_sum(sys, &state.p, block);
        wedge_add(&mut l_ext, &q_c, &p_c, 1.0);
        let mut li = vec![0.0; blen];
        for &i in block {
            wedge_add(&mut li, sys.slot(&int.q, i), sys.slot(&int.p, i), 1.0);
        }
        l_int.push(li);
    }
    Ok(LSplit {
        ext: l_ext,
        int: l_int,
    })
}

/// Scalar split `(ext, int per block)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSplit {
    pub ext: f64,
    pub int: Vec<f64>,
}

impl ScalarSplit {
    pub fn total(&self) -> f64 {
        self.ext + self.int.iter().sum::<f64>()
    }
}

/// `K^E = Σ_C ‖p_C‖²/2m_C`; `K^I_C = Σ_{i∈C} ‖p_i - (m_i/m_C)p_C‖²/2m_i`.
pub fn split_k(sys: &MassSystem, p: &[f64], partition: &Partition) -> Result<ScalarSplit> {
    sys.check_config(p)?;
    sys.check_partition(partition)?;
    let d = sys.d;
    let mut ext = 0.0;
    let mut int = Vec::with_capacity(partition.rank());
    for block in partition.blocks() {
        let m_c = sys.cluster_mass(block);
        let p_c = block_sum(sys, p, block);
        ext += dot(&p_c, &p_c) / (2.0 * m_c);
        let mut k = 0.0;
        for &i in block {
            let s = sys.masses[i] / m_c;
            let mut sq = 0.0;
            for a in 0..d {
                let r = p[i * d + a] - s * p_c[a];
                sq += r * r;
            }
            k += sq / (2.0 * sys.masses[i]);
        }
        int.push(k);
    }
    Ok(ScalarSplit { ext, int })
}

/// `V^I_C = Σ_{i<j∈C} V_ij`; `V^E` is the sum over pairs in different
/// blocks.
pub fn split_v(
    sys: &MassSystem,
    q: &[f64],
    partition: &Partition,
    potential: &PotentialSpec,
) -> Result<ScalarSplit> {
    sys.check_config(q)?;
    sys.check_partition(partition)?;
    if potential.n() != sys.n() {
        return Err(Error::GroundSetMismatch {
            left: potential.n(),
            right: sys.n(),
        });
    }
    let labels = partition.labels();
    let mut ext = 0.0;
    let mut int = vec![0.0; partition.rank()];
    for i in 0..sys.n() {
        for j in (i + 1)..sys.n() {
            let v = potential.pair_energy_at(sys, q, i, j)?;
            if labels[i] == labels[j] {
                int[labels[i]] += v;
            } else {
                ext += v;
            }
        }
    }
    Ok(ScalarSplit { ext, int })
}

/// `H^E = K^E + V^E`, `H^I_C = K^I_C + V^I_C`.
pub fn split_h(
    sys: &MassSystem,
    state: &PhaseState,
    partition: &Partition,
    potential: &PotentialSpec,
) -> Result<ScalarSplit> {
    let k = split_k(sys, &state.p, partition)?;
    let v = split_v(sys, &state.q, partition, potential)?;
    Ok(ScalarSplit {
        ext: k.ext + v.ext,
        int: k.int.iter().zip(&v.int).map(|(a, b)| a + b).collect(),
    })
}

/// `(J^E, J^I)` with `J^E = J(q^E)`.
pub fn split_j(sys: &MassSystem, q: &[f64], partition: &Partition) -> Result<(f64, f64)> {
    let (qe, qi) = split_configuration(sys, q, partition)?;
    Ok((
        0.5 * mass_inner_unchecked(sys, &qe, &qe),
        0.5 * mass_inner_unchecked(sys, &qi, &qi),
    ))
}

/// All cluster splits for one partition. Angular momentum entries are empty
/// in one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub partition: Partition,
    pub l_ext: Vec<f64>,
    pub l_int: Vec<Vec<f64>>,
    pub k_ext: f64,
    pub k_int: Vec<f64>,
    pub v_ext: f64,
    pub v_int: Vec<f64>,
    pub h_ext: f64,
    pub h_int: Vec<f64>,
}

pub fn split_report(
    sys: &MassSystem,
    state: &PhaseState,
    partition: &Partition,
    potential: &PotentialSpec,
) -> Result<SplitReport> {
    let (l_ext, l_int) = if sys.d >= 2 {
        let l = split_l(sys, state, partition)?;
        (l.ext, l.int)
    } else {
        (Vec::new(), vec![Vec::new(); partition.rank()])
    };
    let k = split_k(sys, &state.p, partition)?;
    let v = split_v(sys, &state.q, partition, potential)?;
    let h_int = k.int.iter().zip(&v.int).map(|(a, b)| a + b).collect();
    Ok(SplitReport {
        partition: partition.clone(),
        l_ext,
        l_int,
        k_ext: k.ext,
        k_int: k.int,
        v_ext: v.ext,
        v_int: v.int,
        h_ext: k.ext + v.ext,
        h_int,
    })
}

/// Relative quantities of two disjoint clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairQuantities {
    /// `½ (q_C - q_D) ∧ (p_C - p_D)`.
    pub l_cd: Vec<f64>,
    /// `(q_C - q_D) ∧ m_{C,D}(v_C - v_D)`, the reduced-mass form.
    pub l_cd_reduced: Vec<f64>,
    pub k_cd: f64,
    pub v_cd: f64,
    pub h_cd: f64,
    pub j_cd: f64,
}

/// `m_{C,D} = m_C m_D / (m_C + m_D)`.
pub fn reduced_mass(m_c: f64, m_d: f64) -> f64 {
    m_c * m_d / (m_c + m_d)
}

pub fn relative_pair(
    sys: &MassSystem,
    state: &PhaseState,
    c: &[usize],
    dset: &[usize],
    potential: &PotentialSpec,
) -> Result<PairQuantities> {
    sys.check_cluster(c)?;
    sys.check_cluster(dset)?;
    if c.iter().any(|i| dset.contains(i)) {
        return Err(param("clusters must be disjoint"));
    }
    let a = cluster_aggregates(sys, state, c)?;
    let b = cluster_aggregates(sys, state, dset)?;
    let dim = sys.d;
    let dq: Vec<f64> = (0..dim).map(|k| a.q[k] - b.q[k]).collect();
    let dp: Vec<f64> = (0..dim).map(|k| a.p[k] - b.p[k]).collect();
    let mu = reduced_mass(a.mass, b.mass);
    let dv: Vec<f64> = (0..dim).map(|k| a.p[k] / a.mass - b.p[k] / b.mass).collect();
    let blen = bivector_len(dim);
    let mut l_cd = vec![0.0; blen];
    wedge_add(&mut l_cd, &dq, &dp, 0.5);
    let mut l_cd_reduced = vec![0.0; blen];
    wedge_add(&mut l_cd_reduced, &dq, &dv, mu);
    let k_cd = 0.5 * mu * dot(&dv, &dv);
    let mut v_cd = 0.0;
    for &i in c {
        for &j in dset {
            v_cd += potential.pair_energy_at(sys, &state.q, i, j)?;
        }
    }
    let j_cd = 0.5 * (a.mass * dot(&a.q, &a.q) + b.mass * dot(&b.q, &b.q));
    Ok(PairQuantities {
        l_cd,
        l_cd_reduced,
        k_cd,
        v_cd,
        h_cd: k_cd + v_cd,
        j_cd,
    })
}

/// Shifts to the centre-of-mass frame: `q_N = 0`, `p_N = 0`.
pub fn to_com_frame(sys: &MassSystem, state: &PhaseState) -> Result<PhaseState> {
    state.check(sys)?;
    let all: Vec<usize> = (0..sys.n()).collect();
    let (m, q_n) = barycenter(sys, &state.q, &all);
    let p_n = block_sum(sys, &state.p, &all);
    let d = sys.d;
    let mut q = state.q.clone();
    let mut p = state.p.clone();
    for i in 0..sys.n() {
        let s = sys.masses[i] / m;
        for k in 0..d {
            q[i * d + k] -= q_n[k];
            p[i * d + k] -= s * p_n[k];
        }
    }
    Ok(PhaseState::new(state.t, q, p))
}

/// Euclidean norm of a bivector (Frobenius norm of the antisymmetric matrix
/// divided by √2).
pub fn bivector_norm(b: &[f64]) -> f64 {
    norm(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(blocks: &[&[usize]]) -> Partition {
        Partition::from_one_based(&blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let unit = MassSystem::new(2, vec![1.0, 1.0]).unwrap();
        assert_eq!(mass_inner(&unit, &[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]), Ok(1.0));
        let sys = MassSystem::new(1, vec![1.0, 2.0]).unwrap();
        assert_eq!(mass_inner(&sys, &[1.0, 1.0], &[1.0, 1.0]), Ok(3.0));
        assert!(mass_inner(&sys, &[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn weighted_barycenter() {
        let sys = MassSystem::new(1, vec![1.0, 3.0]).unwrap();
        let st = PhaseState::new(0.0, vec![0.0, 4.0], vec![1.0, -2.0]);
        let agg = cluster_aggregates(&sys, &st, &[0, 1]).unwrap();
        assert_eq!(agg.mass, 4.0);
        assert_eq!(agg.q, vec![3.0]);
        assert_eq!(agg.p, vec![-1.0]);
        let single = cluster_aggregates(&sys, &st, &[1]).unwrap();
        assert_eq!((single.mass, single.q, single.p), (3.0, vec![4.0], vec![-2.0]));
        assert!(cluster_aggregates(&sys, &st, &[]).is_err());
    }

    #[test]
    fn finest_partition_is_all_external() {
        let sys = MassSystem::new(2, vec![1.0, 2.0, 3.0]).unwrap();
        let st = PhaseState::new(0.0, vec![1.0, 2.0, -1.0, 0.5, 3.0, -2.0], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let (e, i) = split_phase(&sys, &st, &Partition::finest(3)).unwrap();
        assert_eq!(e.q, st.q);
        assert_eq!(e.p, st.p);
        assert!(i.q.iter().chain(&i.p).all(|x| *x == 0.0));
        let l = split_l(&sys, &st, &Partition::finest(3)).unwrap();
        assert!(l.int.iter().all(|b| b.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn one_dimensional_angular_momentum_is_rejected() {
        let sys = MassSystem::new(1, vec![1.0, 2.0]).unwrap();
        let st = PhaseState::new(0.0, vec![0.0, 1.0], vec![1.0, 0.0]);
        assert!(split_l(&sys, &st, &Partition::finest(2)).is_err());
    }

    #[test]
    fn pair_quantities_vanish_for_equal_velocities() {
        let sys = MassSystem::new(2, vec![1.0, 2.0, 3.0]).unwrap();
        let pot = PotentialSpec::gravity(&sys);
        // common velocity (1, -2) for every particle
        let st = PhaseState::new(
            0.0,
            vec![0.0, 0.0, 3.0, 1.0, -2.0, 5.0],
            vec![1.0, -2.0, 2.0, -4.0, 3.0, -6.0],
        );
        let pq = relative_pair(&sys, &st, &[0], &[1, 2], &pot).unwrap();
        assert!(pq.k_cd.abs() < 1e-15);
        assert!(pq.l_cd_reduced.iter().all(|x| x.abs() < 1e-15));
        let com = to_com_frame(&sys, &st).unwrap();
        let pq_com = relative_pair(&sys, &com, &[0], &[1, 2], &pot).unwrap();
        assert!(pq_com.l_cd.iter().all(|x| x.abs() < 1e-14));
        assert!(relative_pair(&sys, &st, &[0, 1], &[1], &pot).is_err());
    }

    #[test]
    fn pair_split_of_the_potential() {
        let sys = MassSystem::new(1, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let pot = PotentialSpec::gravity(&sys);
        let q = [0.0, 1.0, 3.0, 7.0];
        let v = split_v(&sys, &q, &p1(&[&[1, 2], &[3, 4]]), &pot).unwrap();
        assert!((v.int[0] + 1.0).abs() < 1e-15);
        assert!((v.int[1] + 0.25).abs() < 1e-15);
        let cross = -(1.0 / 3.0 + 1.0 / 7.0 + 1.0 / 2.0 + 1.0 / 6.0);
        assert!((v.ext - cross).abs() < 1e-14);
    }
}
