//! Recorded integration steps with cubic Hermite interpolation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::mass::{MassSystem, PhaseState};
use crate::path::PhasePath;
use crate::potential::PotentialSpec;

use super::integrator::StopReason;

/// One accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub h_step: f64,
    #[serde(rename = "H")]
    pub energy: f64,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(rename = "p_N")]
    pub p_n: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn state(&self) -> PhaseState {
        PhaseState::new(self.t, self.q.clone(), self.p.clone())
    }
}

/// Integrated path. Between records positions use the velocities and
/// momenta use the forces as Hermite slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub system: MassSystem,
    pub potential: PotentialSpec,
    pub records: Vec<TrajectoryRecord>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn new(
        system: MassSystem,
        potential: PotentialSpec,
        records: Vec<TrajectoryRecord>,
        stop: StopReason,
    ) -> Self {
        Trajectory {
            system,
            potential,
            records,
            stop,
        }
    }

    /// Rebuilds a trajectory from stored records, checking shapes and time
    /// order.
    pub fn from_records(
        system: MassSystem,
        potential: PotentialSpec,
        records: Vec<TrajectoryRecord>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(param("trajectory has no records"));
        }
        for r in &records {
            system.check_config(&r.q)?;
            system.check_config(&r.p)?;
        }
        let times: Vec<f64> = records.iter().map(|r| r.t).collect();
        crate::path::check_increasing(&times)?;
        Ok(Trajectory::new(system, potential, records, StopReason::EndTime))
    }

    pub fn first(&self) -> &TrajectoryRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &TrajectoryRecord {
        self.records.last().expect("nonempty trajectory")
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.first().t, self.last().t)
    }

    /// The same path viewed only on records with `t > t_min`, for analyses
    /// that require positive times.
    pub fn after(&self, t_min: f64) -> Trajectory {
        Trajectory {
            records: self.records.iter().filter(|r| r.t > t_min).cloned().collect(),
            ..self.clone()
        }
    }

    /// `count` evenly spaced times over the recorded span.
    pub fn uniform_times(&self, count: usize) -> Vec<f64> {
        let (a, b) = self.t_span();
        let count = count.max(2);
        (0..count)
            .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
            .collect()
    }
}

fn hermite(x0: f64, x1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * x0 + h10 * h * d0 + h01 * x1 + h11 * h * d1
}

impl PhasePath for Trajectory {
    fn sample_times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    fn state_at(&self, t: f64) -> Result<PhaseState> {
        let (a, b) = self.t_span();
        let slack = 1e-12 * a.abs().max(b.abs()).max(1.0);
        if !(t >= a - slack && t <= b + slack) {
            return Err(param("time outside the recorded span"));
        }
        let idx = self.records.partition_point(|r| r.t <= t);
        if idx == 0 {
            return Ok(PhaseState::new(t, self.records[0].q.clone(), self.records[0].p.clone()));
        }
        if idx >= self.records.len() {
            let r = self.last();
            return Ok(PhaseState::new(t, r.q.clone(), r.p.clone()));
        }
        let r0 = &self.records[idx - 1];
        let r1 = &self.records[idx];
        if t == r0.t {
            return Ok(r0.state());
        }
        let h = r1.t - r0.t;
        let s = (t - r0.t) / h;
        let v0 = self.system.velocities(&r0.p);
        let v1 = self.system.velocities(&r1.p);
        let f0 = self.potential.forces(&self.system, &r0.q)?;
        let f1 = self.potential.forces(&self.system, &r1.q)?;
        let q = (0..r0.q.len())
            .map(|k| hermite(r0.q[k], r1.q[k], v0[k], v1[k], h, s))
            .collect();
        let p = (0..r0.p.len())
            .map(|k| hermite(r0.p[k], r1.p[k], f0[k], f1[k], h, s))
            .collect();
        Ok(PhaseState::new(t, q, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| 2.0 * x * x * x - x + 3.0;
        let df = |x: f64| 6.0 * x * x - 1.0;
        let (a, b) = (0.5, 2.0);
        for s in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let x = a + s * (b - a);
            let y = hermite(f(a), f(b), df(a), df(b), b - a, s);
            assert!((y - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn free_flight_interpolation_is_exact() {
        let sys = MassSystem::new(1, vec![2.0]).unwrap();
        let rec = |t: f64| TrajectoryRecord {
            t,
            q: vec![1.0 + 1.5 * t],
            p: vec![3.0],
            h_step: 0.0,
            energy: 2.25,
            l: vec![],
            p_n: vec![3.0],
        };
        let traj = Trajectory::from_records(sys, PotentialSpec::free(1), vec![rec(0.0), rec(2.0)]).unwrap();
        let s = traj.state_at(0.7).unwrap();
        assert!((s.q[0] - (1.0 + 1.5 * 0.7)).abs() < 1e-15);
        assert_eq!(s.p[0], 3.0);
        assert!(traj.state_at(3.0).is_err());
    }
}
