#![allow(dead_code)]

use std::f64::consts::PI;

use fewbody_core::graf::GrafParams;
use fewbody_core::mass::{MassSystem, PhaseState};
use fewbody_core::partitions::MessengerTuple;
use fewbody_core::path::FnPath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| uniform(rng, -scale, scale)).collect()
}

pub fn random_state(rng: &mut ChaCha8Rng, sys: &MassSystem) -> PhaseState {
    let len = sys.n() * sys.d();
    PhaseState::new(0.0, random_vec(rng, len, 3.0), random_vec(rng, len, 3.0))
}

/// Two unit masses on a Kepler orbit of semi-major axis 1 started at
/// pericentre, centre of mass at rest at the origin. Returns the period too.
pub fn kepler(e: f64) -> (MassSystem, PhaseState, f64) {
    let sys = MassSystem::new(2, vec![1.0, 1.0]).unwrap();
    let gm = 2.0;
    let rp = 1.0 - e;
    let vp = (gm * (1.0 + e) / rp).sqrt();
    let q = vec![-rp / 2.0, 0.0, rp / 2.0, 0.0];
    let p = vec![0.0, -vp / 2.0, 0.0, vp / 2.0];
    (sys, PhaseState::new(0.0, q, p), 2.0 * PI / gm.sqrt())
}

/// Planted cluster timeline in one dimension with unit masses.
///
/// In scaled coordinates particle 0 sits at `+A`, the pair {2,3} at
/// `-A ± s/2`, and the messenger 1 swings as `y = A cos(ω(t-1))`. Merging
/// the messenger into a neighbour costs its internal moment of inertia and
/// gains `δ² - δ³`, so the thresholds are closed form.
pub struct Planted {
    pub sys: MassSystem,
    pub graf: GrafParams,
    pub amplitude: f64,
    pub omega: f64,
    pub t0: f64,
    pub t1: f64,
}

pub const PAIR_SPACING: f64 = 1e-3;

impl Planted {
    pub fn new() -> Self {
        Planted {
            sys: MassSystem::new(1, vec![1.0; 4]).unwrap(),
            graf: GrafParams::default(),
            amplitude: 1.0,
            omega: PI / 3.0,
            t0: 1.0,
            t1: 10.0,
        }
    }

    pub fn path(&self, samples: usize) -> FnPath<impl Fn(f64) -> PhaseState> {
        let (a, w, t0) = (self.amplitude, self.omega, self.t0);
        let beta = self.graf.scaling_exponent();
        let s = PAIR_SPACING;
        FnPath::uniform(self.t0, self.t1, samples, move |t: f64| {
            let th = w * (t - t0);
            let x = [a, a * th.cos(), -a - s / 2.0, -a + s / 2.0];
            let dx = [0.0, -a * w * th.sin(), 0.0, 0.0];
            let scale = t.powf(beta);
            let q = x.iter().map(|xi| scale * xi).collect();
            let p = x
                .iter()
                .zip(dx)
                .map(|(xi, dxi)| beta * t.powf(beta - 1.0) * xi + scale * dxi)
                .collect();
            PhaseState::new(t, q, p)
        })
    }

    /// Messenger positions where the region changes: next to particle 0 and
    /// next to the pair.
    pub fn thresholds(&self) -> (f64, f64) {
        let d = self.graf.delta;
        let gain = d * d - d * d * d;
        // (A - y)²/4 = gain, and (y + A)²/3 = gain
        (self.amplitude - 2.0 * gain.sqrt(), -self.amplitude + (3.0 * gain).sqrt())
    }

    /// Closed-form change times in `(t0, t1)`.
    pub fn change_times(&self) -> Vec<f64> {
        let (near, far) = self.thresholds();
        let (ca, cb) = ((near / self.amplitude).acos(), (far / self.amplitude).acos());
        let mut out = Vec::new();
        for k in 0..4 {
            let base = 2.0 * PI * k as f64;
            for phase in [base + ca, base + cb, base + 2.0 * PI - cb, base + 2.0 * PI - ca] {
                let t = self.t0 + phase / self.omega;
                if t > self.t0 && t < self.t1 {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Tuples in order: departing particle 0 toward the pair, then back.
    pub fn expected_tuples(&self) -> Vec<MessengerTuple> {
        let out = MessengerTuple::new(vec![0], vec![1], vec![2, 3]).unwrap();
        let back = MessengerTuple::new(vec![2, 3], vec![1], vec![0]).unwrap();
        vec![out.clone(), back, out]
    }
}

/// Straight-line pass in the plane: C1 = {0} rests at (5, 0), the messenger
/// 1 runs along y = 0.1 toward the pair {2,3} at speed 10.
pub fn straight_pass(samples: usize) -> (MassSystem, FnPath<impl Fn(f64) -> PhaseState>) {
    let sys = MassSystem::new(2, vec![1.0; 4]).unwrap();
    let path = FnPath::uniform(0.0, 1.0, samples, |t: f64| {
        let q = vec![5.0, 0.0, 5.0 - 10.0 * t, 0.1, -5.0 + 5.0 * t, 0.5, -5.0 + 5.0 * t, -0.5];
        let p = vec![0.0, 0.0, -10.0, 0.0, 5.0, 0.0, 5.0, 0.0];
        PhaseState::new(t, q, p)
    });
    (sys, path)
}
