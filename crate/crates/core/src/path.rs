//! Time-parameterized phase-space paths consumed by the analysis passes.

use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::mass::PhaseState;

/// A path `t ↦ (q(t), p(t))` with a natural sampling grid.
pub trait PhasePath {
    /// Strictly increasing sample times spanning the path.
    fn sample_times(&self) -> Vec<f64>;

    /// State at any time inside the sampled span.
    fn state_at(&self, t: f64) -> Result<PhaseState>;
}

/// A path given by a closure, sampled on a fixed grid.
pub struct FnPath<F> {
    times: Vec<f64>,
    f: F,
}

impl<F: Fn(f64) -> PhaseState> FnPath<F> {
    pub fn new(times: Vec<f64>, f: F) -> Self {
        FnPath { times, f }
    }

    /// `count` equally spaced samples on `[t0, t1]`.
    pub fn uniform(t0: f64, t1: f64, count: usize, f: F) -> Self {
        let count = count.max(2);
        let times = (0..count)
            .map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64)
            .collect();
        FnPath { times, f }
    }
}

impl<F: Fn(f64) -> PhaseState> PhasePath for FnPath<F> {
    fn sample_times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn state_at(&self, t: f64) -> Result<PhaseState> {
        Ok((self.f)(t))
    }
}

/// Errors unless `times` is strictly increasing.
pub fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(param("sample times must be finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("sample times must be strictly increasing"));
    }
    Ok(())
}

/// The part of a path on `[t0, t1]`. Samples are the inner samples of the
/// parent plus both endpoints.
pub struct Window<'a, P: ?Sized> {
    parent: &'a P,
    t0: f64,
    t1: f64,
}

impl<'a, P: PhasePath + ?Sized> Window<'a, P> {
    pub fn new(parent: &'a P, t0: f64, t1: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(param("window needs t0 < t1"));
        }
        Ok(Window { parent, t0, t1 })
    }
}

impl<P: PhasePath + ?Sized> PhasePath for Window<'_, P> {
    fn sample_times(&self) -> Vec<f64> {
        let mut out = alloc::vec![self.t0];
        out.extend(
            self.parent
                .sample_times()
                .into_iter()
                .filter(|&t| t > self.t0 && t < self.t1),
        );
        out.push(self.t1);
        out
    }

    fn state_at(&self, t: f64) -> Result<PhaseState> {
        self.parent.state_at(t)
    }
}
