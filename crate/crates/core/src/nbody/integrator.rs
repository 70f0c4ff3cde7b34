//! Dormand–Prince 8(5,3) integration with PI step control, an encounter
//! step cap and conservation monitoring.

// coefficient tables are kept digit for digit as published
#![allow(clippy::excessive_precision)]

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::mass::{angular_momentum, total_momentum, MassSystem, PhaseState};
use crate::vecops::{norm, sub};

use super::trajectory::{Trajectory, TrajectoryRecord};
use super::{energy, Scenario};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorParams {
    pub t_end: f64,
    #[serde(default = "d_rtol")]
    pub rtol: f64,
    #[serde(default = "d_atol")]
    pub atol: f64,
    /// First trial step; chosen automatically when absent.
    #[serde(default)]
    pub h_init: Option<f64>,
    #[serde(default = "d_h_min")]
    pub h_min: f64,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    /// Stop when an interacting pair comes closer than this.
    #[serde(default = "d_floor")]
    pub encounter_floor: f64,
    /// Constant `c` in the cap `h ≤ c r^{1+α/2} / |v_rel|`.
    #[serde(default = "d_cap")]
    pub encounter_cap: f64,
    /// Relative drift of `H`, `p_N` and `L` that aborts the run.
    #[serde(default = "d_drift")]
    pub drift_tolerance: Option<f64>,
}

fn d_rtol() -> f64 {
    1e-10
}
fn d_atol() -> f64 {
    1e-12
}
fn d_h_min() -> f64 {
    1e-14
}
fn d_max_steps() -> usize {
    1_000_000
}
fn d_floor() -> f64 {
    1e-6
}
fn d_cap() -> f64 {
    0.1
}
fn d_drift() -> Option<f64> {
    Some(1e-6)
}

impl IntegratorParams {
    pub fn until(t_end: f64) -> Self {
        IntegratorParams {
            t_end,
            rtol: d_rtol(),
            atol: d_atol(),
            h_init: None,
            h_min: d_h_min(),
            h_max: None,
            max_steps: d_max_steps(),
            encounter_floor: d_floor(),
            encounter_cap: d_cap(),
            drift_tolerance: d_drift(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !self.t_end.is_finite() {
            return Err(param("t_end must be finite"));
        }
        if !(pos(self.rtol) && self.atol.is_finite() && self.atol >= 0.0) {
            return Err(param("tolerances must be positive"));
        }
        if !pos(self.h_min) || self.h_max.is_some_and(|h| !pos(h)) || self.h_init.is_some_and(|h| !pos(h)) {
            return Err(param("step bounds must be positive"));
        }
        if !(self.encounter_floor >= 0.0 && pos(self.encounter_cap)) {
            return Err(param("encounter parameters must be positive"));
        }
        if self.drift_tolerance.is_some_and(|d| !pos(d)) {
            return Err(param("drift tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    MaxSteps,
    /// Minimal pair distance fell below the encounter floor.
    NearSingularity,
}

// Dormand–Prince 8(5,3) coefficients, stages 1..=12. The system is
// autonomous, so the nodes only serve as a consistency check.
#[cfg(test)]
const C: [f64; 12] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
];

const A2: [f64; 1] = [5.26001519587677318785587544488E-2];
const A3: [f64; 2] = [1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2];
const A4: [f64; 3] = [2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2];
const A5: [f64; 4] = [
    2.41365134159266685502369798665E-1,
    0.0,
    -8.84549479328286085344864962717E-1,
    9.24834003261792003115737966543E-1,
];
const A6: [f64; 5] = [
    3.7037037037037037037037037037E-2,
    0.0,
    0.0,
    1.70828608729473871279604482173E-1,
    1.25467687566822425016691814123E-1,
];
const A7: [f64; 6] = [
    3.7109375E-2,
    0.0,
    0.0,
    1.70252211019544039314978060272E-1,
    6.02165389804559606850219397283E-2,
    -1.7578125E-2,
];
const A8: [f64; 7] = [
    3.70920001185047927108779319836E-2,
    0.0,
    0.0,
    1.70383925712239993810214054705E-1,
    1.07262030446373284651809199168E-1,
    -1.53194377486244017527936158236E-2,
    8.27378916381402288758473766002E-3,
];
const A9: [f64; 8] = [
    6.24110958716075717114429577812E-1,
    0.0,
    0.0,
    -3.36089262944694129406857109825E0,
    -8.68219346841726006818189891453E-1,
    2.75920996994467083049415600797E1,
    2.01540675504778934086186788979E1,
    -4.34898841810699588477366255144E1,
];
const A10: [f64; 9] = [
    4.77662536438264365890433908527E-1,
    0.0,
    0.0,
    -2.48811461997166764192642586468E0,
    -5.90290826836842996371446475743E-1,
    2.12300514481811942347288949897E1,
    1.52792336328824235832596922938E1,
    -3.32882109689848629194453265587E1,
    -2.03312017085086261358222928593E-2,
];
const A11: [f64; 10] = [
    -9.3714243008598732571704021658E-1,
    0.0,
    0.0,
    5.18637242884406370830023853209E0,
    1.09143734899672957818500254654E0,
    -8.14978701074692612513997267357E0,
    -1.85200656599969598641566180701E1,
    2.27394870993505042818970056734E1,
    2.49360555267965238987089396762E0,
    -3.0467644718982195003823669022E0,
];
const A12: [f64; 11] = [
    2.27331014751653820792359768449E0,
    0.0,
    0.0,
    -1.05344954667372501984066689879E1,
    -2.00087205822486249909675718444E0,
    -1.79589318631187989172765950534E1,
    2.79488845294199600508499808837E1,
    -2.85899827713502369474065508674E0,
    -8.87285693353062954433549289258E0,
    1.23605671757943030647266201528E1,
    6.43392746015763530355970484046E-1,
];

const A: [&[f64]; 12] = [&[], &A2, &A3, &A4, &A5, &A6, &A7, &A8, &A9, &A10, &A11, &A12];

const B: [f64; 12] = [
    5.42937341165687622380535766363E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566E0,
    1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1,
    2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

const E: [f64; 12] = [
    0.1312004499419488073250102996E-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753E+01,
    -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00,
    0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 1.0 / 3.0;
const FAC_MAX: f64 = 6.0;
const BETA: f64 = 0.04;

/// Right-hand side `y = (q, p) ↦ (p/m, -∇V(q))`.
struct Rhs<'a> {
    sys: &'a MassSystem,
    potential: &'a PotentialSpec,
}

impl Rhs<'_> {
    fn eval(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = y.len() / 2;
        let d = self.sys.d();
        for k in 0..n {
            out[k] = y[n + k] / self.sys.mass(k / d);
        }
        let f = self.potential.forces(self.sys, &y[..n])?;
        out[n..].copy_from_slice(&f);
        Ok(())
    }
}

/// One trial step: returns `(y_new, scaled error)`.
fn trial_step(
    rhs: &Rhs<'_>,
    y: &[f64],
    k1: &[f64],
    h: f64,
    rtol: f64,
    atol: f64,
    ks: &mut [Vec<f64>; 12],
) -> Result<(Vec<f64>, f64)> {
    let dim = y.len();
    ks[0].copy_from_slice(k1);
    let mut tmp = vec![0.0; dim];
    for s in 1..12 {
        tmp.copy_from_slice(y);
        for (j, a) in A[s].iter().enumerate() {
            if *a != 0.0 {
                let c = h * a;
                for (t, kv) in tmp.iter_mut().zip(&ks[j]) {
                    *t += c * kv;
                }
            }
        }
        rhs.eval(&tmp, &mut ks[s])?;
    }
    let mut y_new = y.to_vec();
    let mut err = 0.0;
    let mut err2 = 0.0;
    for i in 0..dim {
        let mut bk = 0.0;
        let mut ek = 0.0;
        for s in 0..12 {
            bk += B[s] * ks[s][i];
            ek += E[s] * ks[s][i];
        }
        y_new[i] += h * bk;
        let bhh = bk - BHH[0] * ks[0][i] - BHH[1] * ks[8][i] - BHH[2] * ks[11][i];
        let sc = atol + y[i].abs().max(y_new[i].abs()) * rtol;
        err += (ek / sc) * (ek / sc);
        err2 += (bhh / sc) * (bhh / sc);
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let e = h.abs() * err * libm::sqrt(1.0 / (deno * dim as f64));
    Ok((y_new, e))
}

fn initial_step(rhs: &Rhs<'_>, y: &[f64], f0: &[f64], rtol: f64, atol: f64, span: f64) -> Result<f64> {
    let dim = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = atol + y[i].abs() * rtol;
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    let (d0, d1) = (libm::sqrt(d0 / dim), libm::sqrt(d1 / dim));
    let mut h0 = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span.abs());
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs.eval(&y1, &mut f1)?;
    let mut d2 = 0.0;
    for i in 0..y.len() {
        let sc = atol + y[i].abs() * rtol;
        d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    let d2 = libm::sqrt(d2 / dim) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        libm::pow(0.01 / d1.max(d2), 1.0 / 8.0)
    };
    Ok((100.0 * h0).min(h1).min(span.abs()))
}

struct Monitor {
    h0: f64,
    p0: Vec<f64>,
    l0: Option<Vec<f64>>,
}

fn conserved(
    sys: &MassSystem,
    potential: &PotentialSpec,
    state: &PhaseState,
) -> Result<(f64, Vec<f64>, Option<Vec<f64>>)> {
    let h = energy(sys, potential, state)?;
    let p = total_momentum(sys, &state.p);
    let l = if sys.d() >= 2 {
        Some(angular_momentum(sys, &state.q, &state.p)?)
    } else {
        None
    };
    Ok((h, p, l))
}

/// Relative drifts of `(H, p_N, L)` against the initial values.
fn drifts(
    sys: &MassSystem,
    mon: &Monitor,
    state: &PhaseState,
    h: f64,
    p: &[f64],
    l: &Option<Vec<f64>>,
) -> (f64, f64, f64) {
    let kin = crate::mass::kinetic_energy(sys, &state.p).unwrap_or(0.0);
    let h_scale = if mon.h0 != 0.0 { mon.h0.abs() } else { kin + (h - kin).abs() };
    let dh = if h_scale > 0.0 { (h - mon.h0).abs() / h_scale } else { 0.0 };
    let p_scale: f64 = (0..sys.n()).map(|i| norm(sys.slot(&state.p, i))).sum();
    let dp = if p_scale > 0.0 { norm(&sub(p, &mon.p0)) / p_scale } else { 0.0 };
    let dl = match (l, &mon.l0) {
        (Some(l), Some(l0)) => {
            let s: f64 = (0..sys.n())
                .map(|i| norm(sys.slot(&state.q, i)) * norm(sys.slot(&state.p, i)))
                .sum();
            if s > 0.0 {
                norm(&sub(l, l0)) / s
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    (dh, dp, dl)
}

/// Integrates the scenario, recording every accepted step.
pub fn integrate(scenario: &Scenario) -> Result<Trajectory> {
    let params = &scenario.integrator;
    params.validate()?;
    scenario.graf.validate()?;
    let sys = &scenario.system;
    let potential = &scenario.potential;
    if potential.n() != sys.n() {
        return Err(Error::GroundSetMismatch {
            left: potential.n(),
            right: sys.n(),
        });
    }
    let start = scenario.start_state()?;
    let rhs = Rhs { sys, potential };
    let n = sys.dim();
    let mut y: Vec<f64> = start.q.iter().chain(&start.p).copied().collect();
    let mut t = start.t;
    let t_end = params.t_end;
    let dir = if t_end >= t { 1.0 } else { -1.0 };

    let (h0, p0, l0) = conserved(sys, potential, &start)?;
    let mon = Monitor { h0, p0: p0.clone(), l0: l0.clone() };
    let mut records = vec![TrajectoryRecord {
        t,
        q: start.q.clone(),
        p: start.p.clone(),
        h_step: 0.0,
        energy: h0,
        l: l0.unwrap_or_default(),
        p_n: p0,
    }];

    let mut k1 = vec![0.0; 2 * n];
    rhs.eval(&y, &mut k1)?;
    if t == t_end {
        return Ok(Trajectory::new(sys.clone(), potential.clone(), records, StopReason::EndTime));
    }
    let mut h = match params.h_init {
        Some(h) => h,
        None => initial_step(&rhs, &y, &k1, params.rtol, params.atol, t_end - t)?,
    };
    let h_max = params.h_max.unwrap_or(f64::INFINITY);
    let mut ks: [Vec<f64>; 12] = core::array::from_fn(|_| vec![0.0; 2 * n]);
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut steps = 0usize;
    let stop;
    loop {
        if let Some((r, _, _)) = potential.closest_pair(sys, &y[..n], &k1[..n]) {
            if r < params.encounter_floor {
                stop = StopReason::NearSingularity;
                break;
            }
        }
        if steps >= params.max_steps {
            stop = StopReason::MaxSteps;
            break;
        }
        // encounter cap c r^{1+α/2} / |v_rel| for the closest pair
        let mut cap = h_max;
        if let Some((r, vrel, alpha)) = potential.closest_pair(sys, &y[..n], &k1[..n]) {
            if vrel > 0.0 {
                cap = cap.min(params.encounter_cap * libm::pow(r, 1.0 + 0.5 * alpha) / vrel);
            }
        }
        h = h.abs().min(cap);
        let mut last = false;
        if (t + 1.01 * h * dir - t_end) * dir >= 0.0 {
            h = (t_end - t).abs();
            last = true;
        }
        if h < params.h_min && !last {
            let q = y[..n].to_vec();
            let p = y[n..].to_vec();
            return Err(Error::StepFailure {
                t,
                h,
                state: PhaseState::new(t, q, p),
            });
        }
        let hs = h * dir;
        let (y_new, err) = match trial_step(&rhs, &y, &k1, hs, params.rtol, params.atol, &mut ks) {
            Ok(v) => v,
            Err(Error::Singularity { .. }) => {
                h *= 0.25;
                rejected_last = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        let fac11 = libm::pow(err, 1.0 / 8.0 - 0.2 * BETA);
        let mut fac = fac11 / libm::pow(fac_old, BETA);
        fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac / SAFETY));
        if err <= 1.0 && err.is_finite() {
            fac_old = err.max(1e-4);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
            t = if last { t_end } else { t + hs };
            y = y_new;
            rhs.eval(&y, &mut k1)?;
            steps += 1;
            let state = PhaseState::new(t, y[..n].to_vec(), y[n..].to_vec());
            let (hh, pp, ll) = conserved(sys, potential, &state)?;
            if let Some(limit) = params.drift_tolerance {
                let (dh, dp, dl) = drifts(sys, &mon, &state, hh, &pp, &ll);
                for (quantity, drift) in [("energy", dh), ("total momentum", dp), ("angular momentum", dl)] {
                    if drift > limit {
                        return Err(Error::ConservationViolation {
                            quantity,
                            t,
                            drift,
                            limit,
                        });
                    }
                }
            }
            records.push(TrajectoryRecord {
                t,
                q: state.q,
                p: state.p,
                h_step: hs,
                energy: hh,
                l: ll.unwrap_or_default(),
                p_n: pp,
            });
            if last {
                stop = StopReason::EndTime;
                break;
            }
            h = h_new.min(h_max);
        } else {
            let div = if err.is_finite() {
                (1.0 / FAC_MIN).min(fac11 / SAFETY)
            } else {
                1.0 / FAC_MIN
            };
            h /= div;
            rejected_last = true;
        }
    }
    Ok(Trajectory::new(sys.clone(), potential.clone(), records, stop))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sums_match_nodes() {
        for s in 1..12 {
            let sum: f64 = A[s].iter().sum();
            assert!((sum - C[s]).abs() < 1e-13, "stage {}", s + 1);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let b: f64 = B.iter().sum();
        assert!((b - 1.0).abs() < 1e-13);
        let e: f64 = E.iter().sum();
        assert!(e.abs() < 1e-13);
    }

    #[test]
    fn free_particle_step_is_exact() {
        let sys = MassSystem::new(1, vec![1.0]).unwrap();
        let pot = PotentialSpec::free(1);
        let rhs = Rhs { sys: &sys, potential: &pot };
        let y = [1.0, 2.0];
        let mut k1 = [0.0; 2];
        rhs.eval(&y, &mut k1).unwrap();
        let mut ks: [Vec<f64>; 12] = core::array::from_fn(|_| vec![0.0; 2]);
        let (y1, err) = trial_step(&rhs, &y, &k1, 0.5, 1e-10, 1e-12, &mut ks).unwrap();
        assert!((y1[0] - 2.0).abs() < 1e-14);
        assert!(err < 1e-6);
    }

    #[test]
    fn invalid_parameters() {
        let mut p = IntegratorParams::until(1.0);
        p.rtol = 0.0;
        assert!(p.validate().is_err());
    }
}
