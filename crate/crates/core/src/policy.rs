//! Softmax policy and scalar value head over [`Mlp`] approximators.

use crate::error::{Error, Result};
use crate::numkit::{Mlp, MlpCache, MlpDims, ParamVector, Rng};

/// `log softmax(logits)` using max-subtraction.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(logits)?;
    Ok(logits.iter().map(|l| l - lse).collect())
}

pub fn log_sum_exp(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("log-sum-exp of non-finite or empty input".into()));
    }
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln())
}

/// A sampled action together with what is needed to differentiate its log-probability.
#[derive(Debug, Clone)]
pub struct ActionSample {
    pub action: usize,
    pub log_prob: f64,
    pub log_probs: Vec<f64>,
    cache: MlpCache,
}

/// `pi(a | s; theta) = softmax(net(s))_a`
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalPolicy {
    net: Mlp,
}

impl CategoricalPolicy {
    pub fn new(net: Mlp) -> Result<Self> {
        if net.dims().output < 2 {
            return Err(Error::Config("a categorical policy needs at least two actions".into()));
        }
        Ok(Self { net })
    }

    pub fn random(obs_dim: usize, hidden: usize, n_actions: usize, rng: &mut Rng) -> Result<Self> {
        Self::new(Mlp::random(MlpDims::new(obs_dim, hidden, n_actions), rng)?)
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn params(&self) -> &ParamVector {
        self.net.params()
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        self.net.params_mut()
    }

    pub fn n_actions(&self) -> usize {
        self.net.dims().output
    }

    pub fn log_probs(&self, obs: &[f64]) -> Result<Vec<f64>> {
        log_softmax(&self.net.predict(obs)?)
    }

    pub fn probabilities(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.log_probs(obs)?.into_iter().map(f64::exp).collect())
    }

    pub fn log_prob(&self, obs: &[f64], action: usize) -> Result<f64> {
        self.check_action(action)?;
        Ok(self.log_probs(obs)?[action])
    }

    pub fn sample_action(&self, obs: &[f64], rng: &mut Rng) -> Result<(usize, f64)> {
        let s = self.sample(obs, rng)?;
        Ok((s.action, s.log_prob))
    }

    /// Samples an action and keeps the forward activations for a later gradient.
    pub fn sample(&self, obs: &[f64], rng: &mut Rng) -> Result<ActionSample> {
        let (logits, cache) = self.net.forward(obs)?;
        let log_probs = log_softmax(&logits)?;
        let weights: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
        let action = rng.categorical(&weights);
        Ok(ActionSample {
            action,
            log_prob: log_probs[action],
            log_probs,
            cache,
        })
    }

    /// Most probable action (ties go to the lowest index).
    pub fn greedy_action(&self, obs: &[f64]) -> Result<usize> {
        let logits = self.net.predict(obs)?;
        let mut best = 0;
        for (i, l) in logits.iter().enumerate() {
            if *l > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn log_prob_grad(&self, obs: &[f64], action: usize) -> Result<ParamVector> {
        let mut g = ParamVector::zeros(self.params().len());
        self.accumulate_log_prob_grad(obs, action, 1.0, g.as_mut_slice())?;
        Ok(g)
    }

    /// `acc += scale * grad log pi(action | obs)`
    pub fn accumulate_log_prob_grad(
        &self,
        obs: &[f64],
        action: usize,
        scale: f64,
        acc: &mut [f64],
    ) -> Result<()> {
        self.check_action(action)?;
        let (logits, cache) = self.net.forward(obs)?;
        let log_probs = log_softmax(&logits)?;
        self.backward_score(&cache, &log_probs, action, scale, acc)
    }

    /// Same as [`Self::accumulate_log_prob_grad`], reusing a sample's forward pass.
    pub fn accumulate_sample_grad(&self, sample: &ActionSample, scale: f64, acc: &mut [f64]) -> Result<()> {
        self.backward_score(&sample.cache, &sample.log_probs, sample.action, scale, acc)
    }

    // d log softmax_a / d logits = onehot(a) - softmax
    fn backward_score(
        &self,
        cache: &MlpCache,
        log_probs: &[f64],
        action: usize,
        scale: f64,
        acc: &mut [f64],
    ) -> Result<()> {
        let upstream: Vec<f64> = log_probs
            .iter()
            .enumerate()
            .map(|(i, lp)| f64::from(u8::from(i == action)) - lp.exp())
            .collect();
        self.net.backward_accumulate(cache, &upstream, scale, acc)
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.n_actions() {
            return Err(Error::Usage(format!(
                "action {action} out of range for {} actions",
                self.n_actions()
            )));
        }
        Ok(())
    }
}

/// `V(s; w) = net(s)`, a single scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    net: Mlp,
}

impl ValueFunction {
    pub fn new(net: Mlp) -> Result<Self> {
        if net.dims().output != 1 {
            return Err(Error::dim("ValueFunction output", 1, net.dims().output));
        }
        Ok(Self { net })
    }

    pub fn random(obs_dim: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        Self::new(Mlp::random(MlpDims::new(obs_dim, hidden, 1), rng)?)
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn params(&self) -> &ParamVector {
        self.net.params()
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        self.net.params_mut()
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.predict(obs)?[0])
    }

    pub fn value_and_grad(&self, obs: &[f64]) -> Result<(f64, ParamVector)> {
        let (out, cache) = self.net.forward(obs)?;
        Ok((out[0], self.net.backward(&cache, &[1.0])?))
    }

    /// Multiplies the output weights by `scale` and sets the output bias.
    pub fn rescale_output(&mut self, scale: f64, bias: f64) {
        let hidden = self.net.dims().hidden;
        let p = self.net.params_mut();
        let n = p.len();
        for w in &mut p[n - 1 - hidden..n - 1] {
            *w *= scale;
        }
        p[n - 1] = bias;
    }

    /// Returns `V(obs)` and adds `scale * grad V(obs)` into `acc`.
    pub fn accumulate_grad(&self, obs: &[f64], scale: f64, acc: &mut [f64]) -> Result<f64> {
        let (out, cache) = self.net.forward(obs)?;
        self.net.backward_accumulate(&cache, &[1.0], scale, acc)?;
        Ok(out[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{finite_diff_grad, max_relative_error, Matrix};

    fn bias_policy(logits: [f64; 2]) -> CategoricalPolicy {
        let w1 = Matrix::zeros(1, 1);
        let w2 = Matrix::zeros(2, 1);
        CategoricalPolicy::new(Mlp::from_layers(&w1, &[0.0], &w2, &logits).unwrap()).unwrap()
    }

    #[test]
    fn equal_logits_sample_evenly() {
        let pi = bias_policy([0.3, 0.3]);
        let mut rng = Rng::new(123);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| pi.sample_action(&[1.0], &mut rng).unwrap().0 == 0)
            .count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn confident_logits() {
        let pi = bias_policy([10.0, 0.0]);
        let p = pi.probabilities(&[1.0]).unwrap();
        assert!((p[0] - 1.0 / (1.0 + (-10f64).exp())).abs() < 1e-15);
        assert!((p[0] - 0.9999546).abs() < 1e-7);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let pi = bias_policy([700.0, -700.0]);
        let lp = pi.log_probs(&[1.0]).unwrap();
        assert!(lp.iter().all(|l| l.is_finite() && *l <= 0.0));
        assert_eq!(lp[0], 0.0);
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = log_softmax(&[0.1, -2.0, 3.5]).unwrap();
        let b = log_softmax(&[100.1, 98.0, 103.5]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.exp() - y.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_logits_error() {
        assert!(log_softmax(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn score_identity_exact_sum() {
        let mut rng = Rng::new(5);
        let pi = CategoricalPolicy::random(4, 8, 3, &mut rng).unwrap();
        for _ in 0..20 {
            let obs: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
            let probs = pi.probabilities(&obs).unwrap();
            let mut total = ParamVector::zeros(pi.params().len());
            for (a, p) in probs.iter().enumerate() {
                pi.accumulate_log_prob_grad(&obs, a, *p, total.as_mut_slice()).unwrap();
            }
            assert!(total.iter().all(|g| g.abs() < 1e-10));
        }
    }

    #[test]
    fn log_prob_grad_matches_finite_differences() {
        let mut rng = Rng::new(6);
        for hidden in [2, 16] {
            let pi = CategoricalPolicy::random(4, hidden, 2, &mut rng).unwrap();
            let dims = pi.net().dims();
            for _ in 0..10 {
                let obs: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
                let a = rng.categorical(&[1.0, 1.0]);
                let g = pi.log_prob_grad(&obs, a).unwrap();
                let fd = finite_diff_grad(
                    |t| {
                        let p = CategoricalPolicy::new(Mlp::from_params(dims, t.clone()).unwrap()).unwrap();
                        p.log_prob(&obs, a).unwrap()
                    },
                    pi.params(),
                    1e-5,
                );
                assert!(max_relative_error(&g, &fd) < 1e-4);
            }
        }
    }

    #[test]
    fn sample_grad_equals_direct_grad() {
        let mut rng = Rng::new(7);
        let pi = CategoricalPolicy::random(3, 5, 3, &mut rng).unwrap();
        let obs = [0.2, -0.4, 1.0];
        let s = pi.sample(&obs, &mut rng).unwrap();
        let mut via_sample = vec![0.0; pi.params().len()];
        pi.accumulate_sample_grad(&s, 1.0, &mut via_sample).unwrap();
        assert_eq!(via_sample, pi.log_prob_grad(&obs, s.action).unwrap().into_vec());
        assert!(pi.log_prob_grad(&obs, 3).is_err());
    }

    #[test]
    fn zero_value_net() {
        let dims = MlpDims::new(2, 3, 1);
        let mut net = Mlp::zeros(dims).unwrap();
        let last = dims.param_count() - 1;
        net.params_mut()[last] = 0.25;
        let vf = ValueFunction::new(net).unwrap();
        let (v, g) = vf.value_and_grad(&[1.0, -1.0]).unwrap();
        assert_eq!(v, 0.25);
        // Hidden units are all zero (pre-activation 0 is not active), so only b2 and W2 rows see gradient;
        // W2's gradient is the zero hidden activation.
        for (i, gi) in g.iter().enumerate() {
            if i == last {
                assert_eq!(*gi, 1.0);
            } else {
                assert_eq!(*gi, 0.0);
            }
        }
    }

    #[test]
    fn value_grad_matches_finite_differences() {
        let mut rng = Rng::new(8);
        let vf = ValueFunction::random(6, 12, &mut rng).unwrap();
        let dims = vf.net().dims();
        let obs: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
        let (_, g) = vf.value_and_grad(&obs).unwrap();
        let fd = finite_diff_grad(
            |t| Mlp::from_params(dims, t.clone()).unwrap().predict(&obs).unwrap()[0],
            vf.params(),
            1e-5,
        );
        assert!(max_relative_error(&g, &fd) < 1e-4);
    }

    #[test]
    fn value_round_trip_preserves_output() {
        let mut rng = Rng::new(10);
        let vf = ValueFunction::random(4, 16, &mut rng).unwrap();
        let copy = ValueFunction::new(
            Mlp::from_params(vf.net().dims(), ParamVector::from(vf.params().to_vec())).unwrap(),
        )
        .unwrap();
        let obs = [0.01, 0.02, -0.03, 0.04];
        assert_eq!(vf.value(&obs).unwrap().to_bits(), copy.value(&obs).unwrap().to_bits());
    }
}
