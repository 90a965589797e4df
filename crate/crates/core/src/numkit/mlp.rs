//! One-hidden-layer rectified-linear network with hand-written backpropagation.
//!
//! Parameters live in a single flat [`ParamVector`] laid out as
//! `[W1 (hidden x input, row-major), b1, W2 (output x hidden, row-major), b2]`.

use serde::{Deserialize, Serialize};

use super::{Matrix, ParamVector, Rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl MlpDims {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
        }
    }

    pub fn param_count(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.output == 0 {
            return Err(Error::Config(format!("network dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    // Offsets of the four blocks inside the flat vector.
    fn b1_at(&self) -> usize {
        self.hidden * self.input
    }
    fn w2_at(&self) -> usize {
        self.b1_at() + self.hidden
    }
    fn b2_at(&self) -> usize {
        self.w2_at() + self.output * self.hidden
    }
}

/// Activations retained by [`Mlp::forward`] for the matching backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    dims: MlpDims,
    generation: u64,
    input: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
}

impl MlpCache {
    pub fn hidden_activations(&self) -> &[f64] {
        &self.hidden
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    dims: MlpDims,
    params: ParamVector,
    // Bumped on every mutable access so stale caches are detected.
    generation: u64,
}

// Two networks are equal when they compute the same function.
impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.params == other.params
    }
}

impl Mlp {
    pub fn zeros(dims: MlpDims) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            dims,
            params: ParamVector::zeros(dims.param_count()),
            generation: 0,
        })
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, hidden biases likewise, output bias zero.
    pub fn random(dims: MlpDims, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let a1 = 1.0 / (dims.input as f64).sqrt();
        let a2 = 1.0 / (dims.hidden as f64).sqrt();
        let p = net.params.as_mut_slice();
        for x in &mut p[..dims.w2_at()] {
            *x = rng.uniform_range(-a1, a1);
        }
        for x in &mut p[dims.w2_at()..dims.b2_at()] {
            *x = rng.uniform_range(-a2, a2);
        }
        Ok(net)
    }

    pub fn from_params(dims: MlpDims, params: ParamVector) -> Result<Self> {
        dims.validate()?;
        if params.len() != dims.param_count() {
            return Err(Error::dim("Mlp::from_params", dims.param_count(), params.len()));
        }
        if !params.is_finite() {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(Self {
            dims,
            params,
            generation: 0,
        })
    }

    /// Builds a network from its four blocks.
    pub fn from_layers(w1: &Matrix, b1: &[f64], w2: &Matrix, b2: &[f64]) -> Result<Self> {
        let dims = MlpDims::new(w1.cols(), w1.rows(), w2.rows());
        if w2.cols() != dims.hidden {
            return Err(Error::dim("Mlp::from_layers W2 cols", dims.hidden, w2.cols()));
        }
        if b1.len() != dims.hidden {
            return Err(Error::dim("Mlp::from_layers b1", dims.hidden, b1.len()));
        }
        if b2.len() != dims.output {
            return Err(Error::dim("Mlp::from_layers b2", dims.output, b2.len()));
        }
        let mut flat = Vec::with_capacity(dims.param_count());
        flat.extend_from_slice(w1.as_slice());
        flat.extend_from_slice(b1);
        flat.extend_from_slice(w2.as_slice());
        flat.extend_from_slice(b2);
        Self::from_params(dims, ParamVector::from(flat))
    }

    pub fn dims(&self) -> MlpDims {
        self.dims
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        self.generation += 1;
        &mut self.params
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[..self.dims.b1_at()]
    }
    pub fn b1(&self) -> &[f64] {
        &self.params[self.dims.b1_at()..self.dims.w2_at()]
    }
    pub fn w2(&self) -> &[f64] {
        &self.params[self.dims.w2_at()..self.dims.b2_at()]
    }
    pub fn b2(&self) -> &[f64] {
        &self.params[self.dims.b2_at()..]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims.input {
            return Err(Error::dim("Mlp::forward input", self.dims.input, x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite network input".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        self.check_input(x)?;
        let d = self.dims;
        let (w1, b1, w2, b2) = (self.w1(), self.b1(), self.w2(), self.b2());
        let mut pre = Vec::with_capacity(d.hidden);
        let mut hidden = Vec::with_capacity(d.hidden);
        for h in 0..d.hidden {
            let row = &w1[h * d.input..(h + 1) * d.input];
            let z = b1[h] + super::dot(row, x);
            pre.push(z);
            hidden.push(z.max(0.0));
        }
        let out = (0..d.output)
            .map(|o| b2[o] + super::dot(&w2[o * d.hidden..(o + 1) * d.hidden], &hidden))
            .collect();
        let cache = MlpCache {
            dims: d,
            generation: self.generation,
            input: x.to_vec(),
            pre,
            hidden,
        };
        Ok((out, cache))
    }

    /// Output only, without retaining activations.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(out, _)| out)
    }

    /// Gradient of `<upstream, output>` with respect to every parameter.
    pub fn backward(&self, cache: &MlpCache, upstream: &[f64]) -> Result<ParamVector> {
        let mut grad = ParamVector::zeros(self.dims.param_count());
        self.backward_accumulate(cache, upstream, 1.0, grad.as_mut_slice())?;
        Ok(grad)
    }

    /// Adds `scale * d<upstream, output>/dparams` into `acc`.
    pub fn backward_accumulate(
        &self,
        cache: &MlpCache,
        upstream: &[f64],
        scale: f64,
        acc: &mut [f64],
    ) -> Result<()> {
        let d = self.dims;
        if cache.dims != d || cache.generation != self.generation {
            return Err(Error::Usage(
                "backward called with a cache from a different or since-modified network".into(),
            ));
        }
        if upstream.len() != d.output {
            return Err(Error::dim("Mlp::backward upstream", d.output, upstream.len()));
        }
        if acc.len() != d.param_count() {
            return Err(Error::dim("Mlp::backward accumulator", d.param_count(), acc.len()));
        }
        let w2 = self.w2();
        let (w1_g, rest) = acc.split_at_mut(d.b1_at());
        let (b1_g, rest) = rest.split_at_mut(d.hidden);
        let (w2_g, b2_g) = rest.split_at_mut(d.output * d.hidden);

        let mut dpre = vec![0.0; d.hidden];
        for o in 0..d.output {
            let g = scale * upstream[o];
            if g == 0.0 {
                continue;
            }
            b2_g[o] += g;
            let row_g = &mut w2_g[o * d.hidden..(o + 1) * d.hidden];
            let row_w = &w2[o * d.hidden..(o + 1) * d.hidden];
            for h in 0..d.hidden {
                row_g[h] += g * cache.hidden[h];
                dpre[h] += g * row_w[h];
            }
        }
        for h in 0..d.hidden {
            if cache.pre[h] <= 0.0 || dpre[h] == 0.0 {
                continue;
            }
            let g = dpre[h];
            b1_g[h] += g;
            let row_g = &mut w1_g[h * d.input..(h + 1) * d.input];
            for (dst, x) in row_g.iter_mut().zip(&cache.input) {
                *dst += g * x;
            }
        }
        Ok(())
    }
}
