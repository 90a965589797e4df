//! Small finite-horizon MDPs that can be enumerated exhaustively.

use crate::envs::{Environment, StepResult};
use crate::error::{Error, Result};
use crate::numkit::Rng;

pub const MAX_STATES: usize = 8;
pub const MAX_ACTIONS: usize = 3;
pub const MAX_HORIZON: usize = 6;

/// Tabular MDP with a finite horizon. Observations are one-hot state encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyMdp {
    n_states: usize,
    n_actions: usize,
    /// `P(s' | s, a)` at `[(s * n_actions + a) * n_states + s']`.
    transitions: Vec<f64>,
    /// `r(s, a)` at `[s * n_actions + a]`.
    rewards: Vec<f64>,
    initial: Vec<f64>,
    /// Entering a terminal state ends the episode.
    terminal: Vec<bool>,
    horizon: usize,
    gamma: f64,
    // environment cursor
    state: usize,
    steps: usize,
}

fn check_simplex(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Config(format!("{what}: probabilities must be non-negative")));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("{what}: row sums to {s}")));
    }
    Ok(())
}

impl TinyMdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial: Vec<f64>,
        terminal: Vec<bool>,
        horizon: usize,
        gamma: f64,
    ) -> Result<Self> {
        if !(1..=MAX_STATES).contains(&n_states) {
            return Err(Error::Config(format!("state count must be in 1..={MAX_STATES}")));
        }
        if !(1..=MAX_ACTIONS).contains(&n_actions) {
            return Err(Error::Config(format!("action count must be in 1..={MAX_ACTIONS}")));
        }
        if !(1..=MAX_HORIZON).contains(&horizon) {
            return Err(Error::Config(format!("horizon must be in 1..={MAX_HORIZON}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!("discount must lie in [0, 1], got {gamma}")));
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(Error::dim("TinyMdp transitions", n_states * n_actions * n_states, transitions.len()));
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::dim("TinyMdp rewards", n_states * n_actions, rewards.len()));
        }
        if initial.len() != n_states {
            return Err(Error::dim("TinyMdp initial", n_states, initial.len()));
        }
        if terminal.len() != n_states {
            return Err(Error::dim("TinyMdp terminal", n_states, terminal.len()));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("rewards must be finite".into()));
        }
        for row in transitions.chunks(n_states) {
            check_simplex(row, "transition")?;
        }
        check_simplex(&initial, "initial distribution")?;
        if initial.iter().zip(&terminal).any(|(p, t)| *t && *p > 0.0) {
            return Err(Error::Config("episodes cannot start in a terminal state".into()));
        }
        Ok(Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            initial,
            terminal,
            horizon,
            gamma,
            state: 0,
            steps: 0,
        })
    }

    /// Random dense instance: rewards uniform in `reward_range`, Dirichlet(1) rows, no terminal states.
    pub fn random(
        rng: &mut Rng,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        gamma: f64,
        reward_range: (f64, f64),
    ) -> Result<Self> {
        let mut simplex = |n: usize| {
            let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln()).collect();
            let s: f64 = w.iter().sum();
            let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
            let err = 1.0 - p.iter().sum::<f64>();
            p[0] += err;
            p
        };
        let transitions: Vec<f64> = (0..n_states * n_actions).flat_map(|_| simplex(n_states)).collect();
        let initial = simplex(n_states);
        let rewards = (0..n_states * n_actions)
            .map(|_| rng.uniform_range(reward_range.0, reward_range.1))
            .collect();
        Self::new(
            n_states,
            n_actions,
            transitions,
            rewards,
            initial,
            vec![false; n_states],
            horizon,
            gamma,
        )
    }

    /// One state, `rewards.len()` actions, one step.
    pub fn bandit(rewards: &[f64]) -> Result<Self> {
        let n_actions = rewards.len();
        Self::new(1, n_actions, vec![1.0; n_actions], rewards.to_vec(), vec![1.0], vec![false], 1, 1.0)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn initial(&self) -> &[f64] {
        &self.initial
    }
    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let at = (s * self.n_actions + a) * self.n_states;
        &self.transitions[at..at + self.n_states]
    }

    pub fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states];
        v[s] = 1.0;
        v
    }
}

impl Environment for TinyMdp {
    fn observation_dim(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn max_steps(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.state = rng.categorical(&self.initial);
        self.steps = 0;
        self.one_hot(self.state)
    }

    /// The horizon is part of the problem, so reaching it counts as termination.
    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult> {
        if action >= self.n_actions {
            return Err(Error::Usage(format!("action {action} out of range")));
        }
        let reward = self.reward(self.state, action);
        let next = rng.categorical(self.transition_row(self.state, action));
        self.state = next;
        self.steps += 1;
        Ok(StepResult {
            observation: self.one_hot(next),
            reward,
            terminated: self.terminal[next] || self.steps >= self.horizon,
            truncated: false,
        })
    }

    fn state_vector(&self) -> Vec<f64> {
        vec![self.state as f64]
    }
}
