//! Policy-gradient trainers: REINFORCE, REINFORCE with baseline, online
//! actor-critic, and their exponential-criterion counterparts.

mod config;
mod diagnostic;
mod log;
mod trainer;

use std::ops::Deref;

pub use config::{
    ActorSignal, AlgoConfig, Algorithm, LrSchedule, RoacBootstrap, RoacTarget, UpdateMode, DEFAULT_EXP_CLAMP,
};
pub use diagnostic::{convergence_diagnostic, DiagnosticAccumulator};
pub use log::{EpisodeRecord, TrainingLog};
pub(crate) use log::write_file;
pub use trainer::{
    critic_output_scale, train, train_oac, train_reinforce, train_reinforce_baseline, train_rs_oac, train_rs_reinforce, Agent, Trainer,
};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::numkit::{ParamVector, Rng};
use crate::policy::CategoricalPolicy;

/// One episode: `observations[t]` is the state in which `actions[t]` was taken.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Observation after the last action.
    pub final_observation: Vec<f64>,
    pub terminated: bool,
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.actions.len();
        if n == 0 {
            return Err(Error::Usage("empty trajectory".into()));
        }
        if self.observations.len() != n || self.log_probs.len() != n || self.rewards.len() != n {
            return Err(Error::Usage("trajectory fields have different lengths".into()));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Numerical("non-finite reward in trajectory".into()));
        }
        Ok(())
    }
}

/// Discounted reward-to-go `R_t = r_t + gamma R_{t+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsToGo(Vec<f64>);

impl ReturnsToGo {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ReturnsToGo {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn returns_to_go(rewards: &[f64], gamma: f64) -> ReturnsToGo {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    ReturnsToGo(out)
}

/// `beta exp(beta R)` as `sign(beta) exp(beta R + ln|beta|)` with the exponent
/// clamped to `[-clamp, clamp]`. The flag reports whether clamping was active.
pub fn exp_weight_clamped(beta: f64, ret: f64, clamp: f64) -> Result<(f64, bool)> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::Config(format!(
            "exponential weight needs a finite non-zero beta, got {beta}"
        )));
    }
    let e = beta * ret + beta.abs().ln();
    if e.is_nan() {
        return Err(Error::Numerical(format!("exponent is NaN for return {ret}")));
    }
    let clamped = e.abs() > clamp;
    Ok((beta.signum() * e.clamp(-clamp, clamp).exp(), clamped))
}

pub fn exp_weight(beta: f64, ret: f64) -> Result<f64> {
    Ok(exp_weight_clamped(beta, ret, DEFAULT_EXP_CLAMP)?.0)
}

/// Runs one episode with actions sampled from `policy`.
pub fn rollout(
    env: &mut dyn Environment,
    policy: &CategoricalPolicy,
    rng: &mut Rng,
    max_steps: usize,
) -> Result<Trajectory> {
    if max_steps == 0 {
        return Err(Error::Config("max_steps must be at least 1".into()));
    }
    let mut obs = env.reset(rng);
    let mut traj = Trajectory::default();
    for _ in 0..max_steps {
        let (action, log_prob) = policy.sample_action(&obs, rng)?;
        let step = env.step(action, rng)?;
        let done = step.done();
        traj.observations.push(std::mem::replace(&mut obs, step.observation));
        traj.actions.push(action);
        traj.log_probs.push(log_prob);
        traj.rewards.push(step.reward);
        traj.terminated = step.terminated;
        traj.truncated = step.truncated;
        if done {
            break;
        }
    }
    if !traj.terminated {
        traj.truncated = true;
    }
    traj.final_observation = obs;
    Ok(traj)
}

/// REINFORCE weights `gamma^t R_t`.
pub fn reinforce_weights(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let rtg = returns_to_go(rewards, gamma);
    let mut disc = 1.0;
    rtg.iter()
        .map(|r| {
            let w = disc * r;
            disc *= gamma;
            w
        })
        .collect()
}

/// Baseline weights `gamma^t (R_t - b_t)`.
pub fn baseline_weights(rewards: &[f64], gamma: f64, baselines: &[f64]) -> Result<Vec<f64>> {
    if baselines.len() != rewards.len() {
        return Err(Error::dim("baseline values", rewards.len(), baselines.len()));
    }
    let rtg = returns_to_go(rewards, gamma);
    let mut disc = 1.0;
    Ok(rtg
        .iter()
        .zip(baselines)
        .map(|(r, b)| {
            let w = disc * (r - b);
            disc *= gamma;
            w
        })
        .collect())
}

/// Risk-sensitive weights `gamma^t beta exp(beta R_t)`, plus the number of clamped exponents.
pub fn rs_reinforce_weights(rewards: &[f64], gamma: f64, beta: f64, clamp: f64) -> Result<(Vec<f64>, usize)> {
    let rtg = returns_to_go(rewards, gamma);
    let mut disc = 1.0;
    let mut clamped = 0;
    let mut out = Vec::with_capacity(rtg.len());
    for r in rtg.iter() {
        let (w, c) = exp_weight_clamped(beta, *r, clamp)?;
        clamped += c as usize;
        out.push(disc * w);
        disc *= gamma;
    }
    Ok((out, clamped))
}

/// `sum_t weights[t] grad log pi(a_t | s_t)` for a recorded trajectory.
pub fn score_estimate(policy: &CategoricalPolicy, traj: &Trajectory, weights: &[f64]) -> Result<ParamVector> {
    if weights.len() != traj.len() {
        return Err(Error::dim("estimator weights", traj.len(), weights.len()));
    }
    let mut acc = ParamVector::zeros(policy.params().len());
    for ((obs, a), w) in traj.observations.iter().zip(&traj.actions).zip(weights) {
        policy.accumulate_log_prob_grad(obs, *a, *w, acc.as_mut_slice())?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvConfig, EnvKind};
    use proptest::prelude::*;
    use crate::numkit::Rng;

    #[test]
    fn returns_to_go_examples() {
        assert_eq!(&*returns_to_go(&[1.0, 1.0, 1.0], 1.0), &[3.0, 2.0, 1.0]);
        assert_eq!(&*returns_to_go(&[1.0, 1.0, 1.0], 0.5), &[1.75, 1.5, 1.0]);
        assert_eq!(&*returns_to_go(&[4.2], 0.9), &[4.2]);
        assert!(returns_to_go(&[], 0.9).is_empty());
    }

    #[test]
    fn exp_weight_examples() {
        assert_eq!(exp_weight(0.3, 0.0).unwrap(), 0.3);
        assert!((exp_weight(-0.01, 200.0).unwrap() + 1.353352832366127e-3).abs() < 1e-15);
        assert!((exp_weight(0.01, -500.0).unwrap() - 6.737946999085467e-5).abs() < 1e-16);
        assert!(exp_weight(0.0, 1.0).is_err());
        let (w, c) = exp_weight_clamped(1.0, 100.0, 30.0).unwrap();
        assert!(c);
        assert_eq!(w, 30f64.exp());
        let (w, c) = exp_weight_clamped(-1.0, 100.0, 30.0).unwrap();
        assert!(c);
        assert_eq!(w, -(-30f64).exp());
    }

    #[test]
    fn gamma_zero_weights() {
        assert_eq!(reinforce_weights(&[2.0, 3.0, 5.0], 0.0), vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn product_identity() {
        let rewards = [1.0, -0.5, 2.0, 0.25, 3.0];
        let gamma = 0.9;
        let beta = -0.37;
        let rtg = returns_to_go(&rewards, gamma);
        for t in 0..rewards.len() {
            let prod: f64 = rewards[t..]
                .iter()
                .enumerate()
                .map(|(k, r)| (gamma.powi(k as i32) * beta * r).exp())
                .product();
            assert!(((beta * rtg[t]).exp() - prod).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn taylor_remainder(beta in -0.1f64..0.1, r in -200.0f64..200.0) {
            prop_assume!(beta != 0.0);
            let w = exp_weight(beta, r).unwrap();
            let x = beta * r;
            let bound = x * x * x.abs().exp() / 2.0;
            prop_assert!((w / beta - (1.0 + x)).abs() <= bound * (1.0 + 1e-12) + 1e-15);
        }

        #[test]
        fn exp_weight_sign_and_monotone(beta in -0.5f64..0.5, r1 in -50.0f64..50.0, dr in 0.0f64..10.0) {
            prop_assume!(beta.abs() > 1e-6);
            let a = exp_weight(beta, r1).unwrap();
            let b = exp_weight(beta, r1 + dr).unwrap();
            prop_assert_eq!(a.signum(), beta.signum());
            // beta e^{beta R} increases in R for either sign of beta
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn rollout_bounds_and_determinism() {
        let cfg = EnvConfig::default_for(EnvKind::CartPole);
        let mut init = Rng::new(5);
        let policy = CategoricalPolicy::random(4, 16, 2, &mut init).unwrap();
        let run = |seed| {
            let mut env = cfg.build().unwrap();
            rollout(env.as_mut(), &policy, &mut Rng::new(seed), 200).unwrap()
        };
        let a = run(9);
        assert_eq!(a, run(9));
        assert!(a.len() <= 200);
        a.validate().unwrap();
        assert!(a.terminated != a.truncated);
    }

    #[test]
    fn random_policy_cartpole_band() {
        let cfg = EnvConfig::default_for(EnvKind::CartPole);
        let mut env = cfg.build().unwrap();
        // zero network: uniform over both actions
        let policy = CategoricalPolicy::new(crate::numkit::Mlp::zeros(crate::numkit::MlpDims::new(4, 16, 2)).unwrap())
            .unwrap();
        let mut rng = Rng::new(2024);
        let total: f64 = (0..200)
            .map(|_| rollout(env.as_mut(), &policy, &mut rng, 200).unwrap().total_reward())
            .sum();
        let mean = total / 200.0;
        assert!((15.0..=35.0).contains(&mean), "mean {mean}");
    }
}
