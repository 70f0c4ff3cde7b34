//! Small slice helpers for d-dimensional vectors.

use alloc::vec::Vec;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Number of independent bivector components in dimension `d`.
#[inline]
pub fn bivector_len(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Adds the components `a_i b_j - a_j b_i` (i < j) of `a ∧ b` to `acc`.
pub fn wedge_add(acc: &mut [f64], a: &[f64], b: &[f64], s: f64) {
    let d = a.len();
    let mut idx = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            acc[idx] += s * (a[i] * b[j] - a[j] * b[i]);
            idx += 1;
        }
    }
}

pub fn wedge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; bivector_len(a.len())];
    wedge_add(&mut out, a, b, 1.0);
    out
}

/// Removes the component along `axis`: `x - <x,axis>/|axis|^2 axis`.
pub fn perp(x: &[f64], axis: &[f64]) -> Vec<f64> {
    let aa = dot(axis, axis);
    let c = if aa > 0.0 { dot(x, axis) / aa } else { 0.0 };
    x.iter().zip(axis).map(|(xi, ai)| xi - c * ai).collect()
}
