use super::diagnostic::DiagnosticAccumulator;
use super::{
    exp_weight_clamped, returns_to_go, rollout, AlgoConfig, Algorithm, ActorSignal, EpisodeRecord, RoacBootstrap,
    RoacTarget, TrainingLog, UpdateMode,
};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::numkit::{adam_step, AdamState, ParamVector, Rng};
use crate::policy::{CategoricalPolicy, ValueFunction};

/// Actor and, for the methods that need one, critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub policy: CategoricalPolicy,
    pub critic: Option<ValueFunction>,
}

impl Agent {
    /// Random initialization. The ROAC critic starts near `beta`, the value of
    /// `beta exp(beta R)` at `R = 0`.
    pub fn new(obs_dim: usize, n_actions: usize, hidden: usize, config: &AlgoConfig, rng: &mut Rng) -> Result<Self> {
        let policy = CategoricalPolicy::random(obs_dim, hidden, n_actions, rng)?;
        let critic = if config.algorithm.uses_critic() {
            let mut v = ValueFunction::random(obs_dim, hidden, rng)?;
            if config.algorithm == Algorithm::RsOac {
                v.rescale_output(1.0, config.beta.signum());
            }
            Some(v)
        } else {
            None
        };
        Ok(Self { policy, critic })
    }
}

/// Factor between the critic network's output and the value it represents.
///
/// The ROAC critic network predicts `V / |beta|`, an O(1) quantity, so its
/// output layer and hidden layer move `V` on the same scale under Adam.
pub fn critic_output_scale(config: &AlgoConfig) -> f64 {
    if config.algorithm == Algorithm::RsOac {
        config.beta.abs()
    } else {
        1.0
    }
}

/// Per-run optimizer state, learning-rate schedule and divergence guard.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: AlgoConfig,
    actor_opt: AdamState,
    critic_opt: AdamState,
    episodes_done: usize,
    decay_from: Option<usize>,
    actor_init_norm: f64,
    critic_init_norm: f64,
    best_return: f64,
    best_params: ParamVector,
}

fn diverged(episode: usize, reason: impl Into<String>) -> Error {
    Error::Diverged {
        episode,
        reason: reason.into(),
    }
}

impl Trainer {
    pub fn new(config: &AlgoConfig, agent: &Agent) -> Result<Self> {
        config.validate()?;
        if config.algorithm.uses_critic() != agent.critic.is_some() {
            return Err(Error::Usage(format!(
                "{} {} a critic",
                config.algorithm,
                if config.algorithm.uses_critic() { "needs" } else { "does not use" }
            )));
        }
        let critic_len = agent.critic.as_ref().map_or(0, |c| c.params().len());
        Ok(Self {
            config: config.clone(),
            actor_opt: AdamState::new(agent.policy.params().len()),
            critic_opt: AdamState::new(critic_len),
            episodes_done: 0,
            decay_from: if config.decay_trigger.is_none() { Some(0) } else { None },
            actor_init_norm: agent.policy.params().norm(),
            critic_init_norm: agent.critic.as_ref().map_or(0.0, |c| c.params().norm()),
            best_return: f64::NEG_INFINITY,
            best_params: agent.policy.params().clone(),
        })
    }

    pub fn config(&self) -> &AlgoConfig {
        &self.config
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    /// Multiplier applied to both learning rates in the next episode.
    pub fn lr_scale(&self) -> f64 {
        match (self.config.lr_schedule, self.decay_from) {
            (super::LrSchedule::InverseLinear, Some(n0)) if self.episodes_done >= n0 => {
                1.0 / (1.0 + self.config.lr_decay * (self.episodes_done - n0) as f64)
            }
            _ => 1.0,
        }
    }

    /// Reference point of the convergence diagnostic.
    pub fn best_params(&self) -> &ParamVector {
        &self.best_params
    }

    pub fn run_episode(&mut self, env: &mut dyn Environment, agent: &mut Agent, rng: &mut Rng) -> Result<EpisodeRecord> {
        let scale = self.lr_scale();
        let lr = self.config.actor_lr * scale;
        let clr = self.config.critic_lr * scale;
        let theta_start = agent.policy.params().clone();
        let out = if self.config.algorithm.is_actor_critic() {
            self.actor_critic_episode(env, agent, rng, lr, clr)?
        } else {
            self.reinforce_episode(env, agent, rng, lr, clr)?
        };
        let episode = self.episodes_done + 1;
        let diagnostic = out.diag.finish(&theta_start, &self.best_params, lr);

        self.check_divergence(episode, agent)?;
        if out.episode_return >= self.best_return {
            self.best_return = out.episode_return;
            self.best_params = theta_start;
        }
        if self.decay_from.is_none() && self.config.decay_trigger.is_some_and(|th| out.episode_return >= th) {
            self.decay_from = Some(episode);
        }
        self.episodes_done = episode;
        Ok(EpisodeRecord {
            episode,
            episode_return: out.episode_return,
            length: out.length,
            mean_exp_weight: out.mean_exp_weight,
            lr,
            clamp_events: out.clamp_events,
            diagnostic,
        })
    }

    fn check_divergence(&self, episode: usize, agent: &Agent) -> Result<()> {
        let f = self.config.divergence_factor;
        let p = agent.policy.params();
        if !p.is_finite() {
            return Err(diverged(episode, "non-finite policy parameters"));
        }
        if p.norm() > f * self.actor_init_norm.max(1e-8) {
            return Err(diverged(episode, format!("policy norm {:.3e} exceeds {f}x its initial value", p.norm())));
        }
        if let Some(c) = &agent.critic {
            if !c.params().is_finite() {
                return Err(diverged(episode, "non-finite critic parameters"));
            }
            if c.params().norm() > f * self.critic_init_norm.max(1e-8) {
                return Err(diverged(episode, "critic norm exceeds the divergence bound"));
            }
        }
        Ok(())
    }

    fn reinforce_episode(
        &mut self,
        env: &mut dyn Environment,
        agent: &mut Agent,
        rng: &mut Rng,
        lr: f64,
        clr: f64,
    ) -> Result<EpisodeOutcome> {
        let cfg = &self.config;
        let max_steps = env.max_steps();
        let traj = rollout(env, &agent.policy, rng, max_steps)?;
        let gamma = cfg.gamma;
        let rtg = returns_to_go(&traj.rewards, gamma);
        let n = traj.len();

        // per-step payoff before discounting: R_t, R_t - V(s_t) or beta e^{beta R_t}
        let mut clamp_events = 0;
        let mut mean_exp_weight = None;
        let payoff: Vec<f64> = match cfg.algorithm {
            Algorithm::Reinforce | Algorithm::ReinforceBaseline => rtg.to_vec(),
            Algorithm::RsReinforce => {
                let mut v = Vec::with_capacity(n);
                for r in rtg.iter() {
                    let (w, c) = exp_weight_clamped(cfg.beta, *r, cfg.exp_clamp)?;
                    clamp_events += c as usize;
                    v.push(w);
                }
                mean_exp_weight = Some(v.iter().sum::<f64>() / n as f64);
                v
            }
            _ => unreachable!("actor-critic methods take the online path"),
        };

        let n_actor = agent.policy.params().len();
        let mut diag = DiagnosticAccumulator::new(n_actor);
        let mut score = ParamVector::zeros(n_actor);
        let mut actor_dir = ParamVector::zeros(n_actor);
        let n_critic = agent.critic.as_ref().map_or(0, |c| c.params().len());
        let mut critic_dir = ParamVector::zeros(n_critic);
        let mut disc = 1.0;
        for t in 0..n {
            let obs = &traj.observations[t];
            let mut w = payoff[t];
            if let Some(critic) = agent.critic.as_mut() {
                let v = critic.value(obs)?;
                let delta = rtg[t] - v;
                w = delta;
                match cfg.update_mode {
                    UpdateMode::Adam => {
                        critic.accumulate_grad(obs, disc * delta, critic_dir.as_mut_slice())?;
                    }
                    UpdateMode::SgdPerStep => {
                        critic_dir.fill_zero();
                        critic.accumulate_grad(obs, 1.0, critic_dir.as_mut_slice())?;
                        critic.params_mut().axpy(clr * disc * delta, &critic_dir);
                    }
                }
            }
            let w = disc * w;
            score.fill_zero();
            agent.policy.accumulate_log_prob_grad(obs, traj.actions[t], 1.0, score.as_mut_slice())?;
            diag.add(w, &score);
            match cfg.update_mode {
                UpdateMode::Adam => actor_dir.axpy(w, &score),
                UpdateMode::SgdPerStep => agent.policy.params_mut().axpy(lr * w, &score),
            }
            disc *= gamma;
        }
        if cfg.update_mode == UpdateMode::Adam {
            // ascent: hand Adam the negated direction
            actor_dir.scale(-1.0);
            adam_step(agent.policy.params_mut(), &actor_dir, &mut self.actor_opt, lr)?;
            if let Some(critic) = agent.critic.as_mut() {
                critic_dir.scale(-1.0);
                adam_step(critic.params_mut(), &critic_dir, &mut self.critic_opt, clr)?;
            }
        }
        Ok(EpisodeOutcome {
            episode_return: traj.total_reward(),
            length: n,
            mean_exp_weight,
            clamp_events,
            diag,
        })
    }

    fn actor_critic_episode(
        &mut self,
        env: &mut dyn Environment,
        agent: &mut Agent,
        rng: &mut Rng,
        lr: f64,
        clr: f64,
    ) -> Result<EpisodeOutcome> {
        let cfg = &self.config;
        let gamma = cfg.gamma;
        let risk = cfg.algorithm == Algorithm::RsOac;
        let critic = agent.critic.as_mut().expect("checked in Trainer::new");
        let vs = critic_output_scale(cfg);
        let policy = &mut agent.policy;
        let n_actor = policy.params().len();
        let mut diag = DiagnosticAccumulator::new(n_actor);
        let mut score = ParamVector::zeros(n_actor);

        let mut obs = env.reset(rng);
        let mut disc = 1.0;
        let mut total = 0.0;
        let mut length = 0;
        let mut clamp_events = 0;
        let mut exp_sum = 0.0;
        for _ in 0..env.max_steps() {
            let sample = policy.sample(&obs, rng)?;
            let step = env.step(sample.action, rng)?;
            total += step.reward;
            length += 1;
            let truncated = step.truncated || (!step.terminated && length == env.max_steps());

            let (u_t, mut v_grad) = critic.value_and_grad(&obs)?;
            let v_t = vs * u_t;
            let boot = if step.terminated {
                None
            } else if risk && cfg.roac_target == RoacTarget::Alg5Literal {
                Some(v_t)
            } else {
                Some(vs * critic.value(&step.observation)?)
            };
            let (target, actor_w) = if risk {
                let boot_r = match (boot, cfg.roac_bootstrap) {
                    (None, _) => 0.0,
                    (Some(b), RoacBootstrap::Additive) => b,
                    (Some(b), RoacBootstrap::CertaintyEquivalent) => {
                        (b / cfg.beta).max(f64::MIN_POSITIVE).ln() / cfg.beta
                    }
                };
                let (y, c) = exp_weight_clamped(cfg.beta, step.reward + gamma * boot_r, cfg.exp_clamp)?;
                clamp_events += c as usize;
                exp_sum += y;
                let w = match cfg.actor_signal {
                    ActorSignal::Literal => v_t,
                    ActorSignal::Advantage => y - v_t,
                };
                (y, w)
            } else {
                let r_hat = step.reward + gamma * boot.unwrap_or(0.0);
                let w = match cfg.actor_signal {
                    ActorSignal::Literal => r_hat,
                    ActorSignal::Advantage => r_hat - v_t,
                };
                (r_hat, w)
            };
            let delta = target - v_t;
            let w = disc * actor_w;

            score.fill_zero();
            policy.accumulate_sample_grad(&sample, 1.0, score.as_mut_slice())?;
            diag.add(w, &score);
            match cfg.update_mode {
                UpdateMode::Adam => {
                    score.scale(-w);
                    adam_step(policy.params_mut(), &score, &mut self.actor_opt, lr)?;
                    v_grad.scale(-disc * delta * vs);
                    adam_step(critic.params_mut(), &v_grad, &mut self.critic_opt, clr)?;
                }
                UpdateMode::SgdPerStep => {
                    policy.params_mut().axpy(lr * w, &score);
                    critic.params_mut().axpy(clr * disc * delta * vs, &v_grad);
                }
            }
            disc *= gamma;
            obs = step.observation;
            if step.terminated || truncated {
                break;
            }
        }
        Ok(EpisodeOutcome {
            episode_return: total,
            length,
            mean_exp_weight: risk.then(|| exp_sum / length as f64),
            clamp_events,
            diag,
        })
    }
}

struct EpisodeOutcome {
    episode_return: f64,
    length: usize,
    mean_exp_weight: Option<f64>,
    clamp_events: usize,
    diag: DiagnosticAccumulator,
}

/// Trains for `config.episodes` episodes.
pub fn train(env: &mut dyn Environment, agent: &mut Agent, config: &AlgoConfig, rng: &mut Rng) -> Result<TrainingLog> {
    let mut trainer = Trainer::new(config, agent)?;
    let mut log = TrainingLog::default();
    for _ in 0..config.episodes {
        log.records.push(trainer.run_episode(env, agent, rng)?);
    }
    Ok(log)
}

fn expect(config: &AlgoConfig, algorithm: Algorithm) -> Result<()> {
    if config.algorithm != algorithm {
        return Err(Error::Usage(format!(
            "config selects {}, not {algorithm}",
            config.algorithm
        )));
    }
    Ok(())
}

fn train_actor_only(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    let mut agent = Agent {
        policy: policy.clone(),
        critic: None,
    };
    let log = train(env, &mut agent, config, rng)?;
    *policy = agent.policy;
    Ok(log)
}

fn train_with_critic(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    value_fn: &mut ValueFunction,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    let mut agent = Agent {
        policy: policy.clone(),
        critic: Some(value_fn.clone()),
    };
    let log = train(env, &mut agent, config, rng)?;
    *policy = agent.policy;
    *value_fn = agent.critic.expect("critic kept");
    Ok(log)
}

pub fn train_reinforce(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    expect(config, Algorithm::Reinforce)?;
    train_actor_only(env, policy, config, rng)
}

pub fn train_rs_reinforce(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    expect(config, Algorithm::RsReinforce)?;
    train_actor_only(env, policy, config, rng)
}

pub fn train_reinforce_baseline(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    value_fn: &mut ValueFunction,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    expect(config, Algorithm::ReinforceBaseline)?;
    train_with_critic(env, policy, value_fn, config, rng)
}

pub fn train_oac(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    value_fn: &mut ValueFunction,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    expect(config, Algorithm::Oac)?;
    train_with_critic(env, policy, value_fn, config, rng)
}

/// `value_fn` predicts `V / |beta|`; see [`critic_output_scale`].
pub fn train_rs_oac(
    env: &mut dyn Environment,
    policy: &mut CategoricalPolicy,
    value_fn: &mut ValueFunction,
    config: &AlgoConfig,
    rng: &mut Rng,
) -> Result<TrainingLog> {
    expect(config, Algorithm::RsOac)?;
    train_with_critic(env, policy, value_fn, config, rng)
}
