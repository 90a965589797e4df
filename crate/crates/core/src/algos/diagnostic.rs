//! Expected one-step change of `||theta - theta_ref||^2` under a plain
//! stochastic-gradient update `theta += lr * w_t * grad log pi_t`.
//!
//! Expanding `||theta + d - theta_ref||^2 - ||theta - theta_ref||^2` gives
//! `||d||^2 + 2 d . (theta - theta_ref)`; the accumulator estimates
//! `lr^2 E[w^2 ||g||^2] + 2 lr E[w g] . (theta - theta_ref)` from samples.
//! Negative values mean the update moves toward the reference on average.

use super::{exp_weight_clamped, reinforce_weights, returns_to_go, Trajectory};
use crate::error::{Error, Result};
use crate::numkit::{dot, ParamVector};
use crate::policy::CategoricalPolicy;

#[derive(Debug, Clone)]
pub struct DiagnosticAccumulator {
    n: usize,
    quadratic: f64,
    direction: ParamVector,
}

impl DiagnosticAccumulator {
    pub fn new(n_params: usize) -> Self {
        Self {
            n: 0,
            quadratic: 0.0,
            direction: ParamVector::zeros(n_params),
        }
    }

    pub fn add(&mut self, weight: f64, score: &[f64]) {
        self.n += 1;
        self.quadratic += weight * weight * dot(score, score);
        self.direction.axpy(weight, score);
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn finish(&self, theta: &[f64], theta_ref: &[f64], lr: f64) -> Option<f64> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let lin: f64 = self
            .direction
            .iter()
            .zip(theta.iter().zip(theta_ref))
            .map(|(d, (t, r))| d * (t - r))
            .sum();
        Some(lr * lr * self.quadratic / n + 2.0 * lr * lin / n)
    }
}

/// Diagnostic over a batch of trajectories. `beta = 0` uses the risk-neutral
/// weights `gamma^t R_t`, otherwise `gamma^t beta exp(beta R_t)`.
pub fn convergence_diagnostic(
    batch: &[Trajectory],
    policy: &CategoricalPolicy,
    theta_ref: &[f64],
    beta: f64,
    gamma: f64,
    lr: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Usage("diagnostic needs at least one trajectory".into()));
    }
    if theta_ref.len() != policy.params().len() {
        return Err(Error::dim("diagnostic reference", policy.params().len(), theta_ref.len()));
    }
    let mut acc = DiagnosticAccumulator::new(policy.params().len());
    let mut score = ParamVector::zeros(policy.params().len());
    for traj in batch {
        traj.validate()?;
        let weights = if beta == 0.0 {
            reinforce_weights(&traj.rewards, gamma)
        } else {
            let mut disc = 1.0;
            returns_to_go(&traj.rewards, gamma)
                .iter()
                .map(|r| {
                    let w = disc * exp_weight_clamped(beta, *r, super::DEFAULT_EXP_CLAMP).map(|x| x.0)?;
                    disc *= gamma;
                    Ok(w)
                })
                .collect::<Result<Vec<_>>>()?
        };
        for ((obs, a), w) in traj.observations.iter().zip(&traj.actions).zip(weights) {
            score.fill_zero();
            policy.accumulate_log_prob_grad(obs, *a, 1.0, score.as_mut_slice())?;
            acc.add(w, &score);
        }
    }
    Ok(acc.finish(policy.params(), theta_ref, lr).unwrap_or(0.0))
}
