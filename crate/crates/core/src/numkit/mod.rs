//! Dense numerical kernel: matrices, the one-hidden-layer network, Adam,
//! the seeded random stream, and a finite-difference gradient checker.

mod adam;
mod matrix;
mod mlp;
mod rng;

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS};
pub use matrix::{cosine, dot, norm, Matrix};
pub use mlp::{Mlp, MlpCache, MlpDims};
pub use rng::Rng;

/// Flat parameter store shared by networks, gradients and optimizer state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &[f64]) {
        debug_assert_eq!(self.0.len(), x.len());
        for (s, v) in self.0.iter_mut().zip(x) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.0.iter_mut().for_each(|s| *s *= a);
    }

    pub fn fill_zero(&mut self) {
        self.0.iter_mut().for_each(|s| *s = 0.0);
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Central-difference gradient of `f` at `theta` with step `h`.
pub fn finite_diff_grad<F>(mut f: F, theta: &ParamVector, h: f64) -> ParamVector
where
    F: FnMut(&ParamVector) -> f64,
{
    let mut probe = theta.clone();
    let mut out = ParamVector::zeros(theta.len());
    for i in 0..theta.len() {
        let x0 = theta[i];
        probe[i] = x0 + h;
        let up = f(&probe);
        probe[i] = x0 - h;
        let down = f(&probe);
        probe[i] = x0;
        out[i] = (up - down) / (2.0 * h);
    }
    out
}

/// Largest `|a_i - b_i| / max(1, |b_i|)`.
pub fn max_relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}
