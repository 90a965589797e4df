//! Free energy, KL divergence and their Legendre-type duality on finite spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::policy::log_sum_exp;

/// A probability vector over a finite outcome space `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Config("distribution needs at least one outcome".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Config("weights must have a positive finite sum".into()));
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // absorb the last rounding error so the sum check holds
        let err: f64 = 1.0 - probs.iter().sum::<f64>();
        if let Some(i) = probs.iter().position(|p| *p > err.abs()) {
            probs[i] += err;
        }
        Self::new(probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(&vec![1.0; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn expectation(&self, z: &[f64]) -> f64 {
        self.probs.iter().zip(z).map(|(p, z)| p * z).sum()
    }
}

fn check_aligned(z: &[f64], p: &FiniteDist) -> Result<()> {
    if z.len() != p.len() {
        return Err(Error::dim("random variable support", p.len(), z.len()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("random variable must be bounded".into()));
    }
    Ok(())
}

/// `(1/beta) log E_P[exp(beta Z)]`, and `E_P[Z]` at `beta = 0`.
pub fn free_energy(beta: f64, z: &[f64], p: &FiniteDist) -> Result<f64> {
    check_aligned(z, p)?;
    if beta == 0.0 {
        return Ok(p.expectation(z));
    }
    let terms: Vec<f64> = z
        .iter()
        .zip(p.probs())
        .filter(|(_, &pi)| pi > 0.0)
        .map(|(zi, pi)| beta * zi + pi.ln())
        .collect();
    Ok(log_sum_exp(&terms)? / beta)
}

/// `sum q log(q/p)` with `0 log 0 = 0`; `+inf` when `Q` is not absolutely continuous w.r.t. `P`.
pub fn kl_divergence(q: &FiniteDist, p: &FiniteDist) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::dim("kl_divergence", p.len(), q.len()));
    }
    let mut total = 0.0;
    for (&qi, &pi) in q.probs().iter().zip(p.probs()) {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += qi * (qi / pi).ln();
    }
    Ok(total)
}

/// `E_Q[Z] - (1/beta) KL(Q, P)`, the objective inside the variational formula.
pub fn variational_value(beta: f64, z: &[f64], q: &FiniteDist, p: &FiniteDist) -> Result<f64> {
    check_aligned(z, q)?;
    let kl = kl_divergence(q, p)?;
    if kl.is_infinite() {
        return Ok(if beta > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY });
    }
    Ok(q.expectation(z) - kl / beta)
}

/// Gibbs-tilted measure `q_i ∝ p_i exp(beta z_i)`.
pub fn gibbs_tilt(beta: f64, z: &[f64], p: &FiniteDist) -> Result<FiniteDist> {
    check_aligned(z, p)?;
    let logs: Vec<f64> = z
        .iter()
        .zip(p.probs())
        .map(|(zi, pi)| if *pi > 0.0 { beta * zi + pi.ln() } else { f64::NEG_INFINITY })
        .collect();
    let finite: Vec<f64> = logs.iter().copied().filter(|l| l.is_finite()).collect();
    let lse = log_sum_exp(&finite)?;
    FiniteDist::from_weights(&logs.iter().map(|l| (l - lse).exp()).collect::<Vec<_>>())
}

#[derive(Debug, Clone)]
pub struct DualityReport {
    /// `|J_beta(Z) - (E_q[Z] - KL(q,P)/beta)|` at the tilted optimizer.
    pub gap: f64,
    pub optimizer: FiniteDist,
    pub free_energy: f64,
    pub tilted_value: f64,
    /// Largest amount by which any random candidate beat the tilted value
    /// (exceeded it for `beta > 0`, undercut it for `beta < 0`); non-positive when the optimizer holds.
    pub max_candidate_excess: f64,
    pub candidates: usize,
}

/// Checks the sup/inf variational formula for the free energy.
///
/// Candidates are drawn both uniformly over the simplex restricted to the
/// support of `P` and as local perturbations of the tilted measure.
pub fn duality_check(
    beta: f64,
    z: &[f64],
    p: &FiniteDist,
    rng: &mut Rng,
    n_candidates: usize,
) -> Result<DualityReport> {
    if beta == 0.0 {
        return Err(Error::Config("duality check requires beta != 0".into()));
    }
    let fe = free_energy(beta, z, p)?;
    let q = gibbs_tilt(beta, z, p)?;
    let tilted_value = variational_value(beta, z, &q, p)?;
    let sign = beta.signum();
    let mut max_excess = f64::NEG_INFINITY;
    for k in 0..n_candidates {
        let weights: Vec<f64> = p
            .probs()
            .iter()
            .zip(q.probs())
            .map(|(&pi, &qi)| {
                if pi == 0.0 {
                    0.0
                } else if k % 2 == 0 {
                    -(1.0 - rng.uniform()).ln()
                } else {
                    qi * (0.2 * rng.standard_normal()).exp()
                }
            })
            .collect();
        let Ok(cand) = FiniteDist::from_weights(&weights) else {
            continue;
        };
        let v = variational_value(beta, z, &cand, p)?;
        max_excess = max_excess.max(sign * (v - tilted_value));
    }
    Ok(DualityReport {
        gap: (fe - tilted_value).abs(),
        optimizer: q,
        free_energy: fe,
        tilted_value,
        max_candidate_excess: max_excess,
        candidates: n_candidates,
    })
}
