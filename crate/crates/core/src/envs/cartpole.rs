//! Cart-pole balancing with Euler-integrated Barto–Sutton–Anderson dynamics.

use serde::{Deserialize, Serialize};

use super::{Environment, StepResult};
use crate::error::{Error, Result};
use crate::numkit::Rng;

pub const OBS_DIM: usize = 4;
pub const N_ACTIONS: usize = 2;
const RESET_RANGE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleConfig {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Nominal pole length `l`. It occupies the moment-arm slot of the
    /// equations of motion, exactly where the classic benchmark puts 0.5.
    pub pole_length: f64,
    pub force_mag: f64,
    pub dt: f64,
    /// Failure threshold on `|theta|`, radians.
    pub angle_limit: f64,
    pub x_limit: f64,
    pub max_steps: usize,
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_length: 0.5,
            force_mag: 10.0,
            dt: 0.02,
            angle_limit: 12.0_f64.to_radians(),
            x_limit: 2.4,
            max_steps: 200,
        }
    }
}

impl CartPoleConfig {
    pub fn pole_half_length(&self) -> f64 {
        0.5 * self.pole_length
    }

    fn total_mass(&self) -> f64 {
        self.cart_mass + self.pole_mass
    }

    fn pole_mass_length(&self) -> f64 {
        self.pole_mass * self.pole_length
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gravity", self.gravity),
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("pole_length", self.pole_length),
            ("force_mag", self.force_mag),
            ("dt", self.dt),
            ("angle_limit", self.angle_limit),
            ("x_limit", self.x_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("cartpole {name} must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("cartpole max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(x, x_dot, theta, theta_dot)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

pub fn reset(_config: &CartPoleConfig, rng: &mut Rng) -> CartPoleState {
    let mut draw = || rng.uniform_range(-RESET_RANGE, RESET_RANGE);
    CartPoleState {
        x: draw(),
        x_dot: draw(),
        theta: draw(),
        theta_dot: draw(),
    }
}

/// Advances one control interval. Returns the successor and whether it is a failure state.
pub fn step(
    config: &CartPoleConfig,
    state: &CartPoleState,
    action: usize,
) -> Result<(CartPoleState, bool)> {
    if action >= N_ACTIONS {
        return Err(Error::Usage(format!("cartpole action {action} out of range")));
    }
    let force = if action == 1 {
        config.force_mag
    } else {
        -config.force_mag
    };
    let (sin, cos) = state.theta.sin_cos();
    let total = config.total_mass();
    let pml = config.pole_mass_length();
    let temp = (force + pml * state.theta_dot * state.theta_dot * sin) / total;
    let theta_acc = (config.gravity * sin - cos * temp)
        / (config.pole_length * (4.0 / 3.0 - config.pole_mass * cos * cos / total));
    let x_acc = temp - pml * theta_acc * cos / total;

    let next = CartPoleState {
        x: state.x + config.dt * state.x_dot,
        x_dot: state.x_dot + config.dt * x_acc,
        theta: state.theta + config.dt * state.theta_dot,
        theta_dot: state.theta_dot + config.dt * theta_acc,
    };
    if !next.to_vec().iter().all(|v| v.is_finite()) {
        return Err(Error::Simulation("cartpole state became non-finite".into()));
    }
    let failed = next.x.abs() > config.x_limit || next.theta.abs() > config.angle_limit;
    Ok((next, failed))
}

/// Episodic wrapper: reward +1 on every step, including the failing one.
#[derive(Debug, Clone)]
pub struct CartPole {
    config: CartPoleConfig,
    state: CartPoleState,
    steps: usize,
}

impl CartPole {
    pub fn new(config: CartPoleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: CartPoleState {
                x: 0.0,
                x_dot: 0.0,
                theta: 0.0,
                theta_dot: 0.0,
            },
            steps: 0,
        })
    }

    pub fn config(&self) -> &CartPoleConfig {
        &self.config
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }
}

impl Environment for CartPole {
    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn n_actions(&self) -> usize {
        N_ACTIONS
    }

    fn max_steps(&self) -> usize {
        self.config.max_steps
    }

    fn reset(&mut self, rng: &mut Rng) -> Vec<f64> {
        self.state = reset(&self.config, rng);
        self.steps = 0;
        self.state.to_vec()
    }

    fn step(&mut self, action: usize, _rng: &mut Rng) -> Result<StepResult> {
        let (next, failed) = step(&self.config, &self.state, action)?;
        self.state = next;
        self.steps += 1;
        Ok(StepResult {
            observation: next.to_vec(),
            reward: 1.0,
            terminated: failed,
            truncated: !failed && self.steps >= self.config.max_steps,
        })
    }

    fn state_vector(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZERO: CartPoleState = CartPoleState {
        x: 0.0,
        x_dot: 0.0,
        theta: 0.0,
        theta_dot: 0.0,
    };

    #[test]
    fn push_right_from_rest() {
        // temp = 10/1.1; theta_acc = -temp / (0.5 (4/3 - 0.1/1.1)); x_acc = temp - 0.05 theta_acc / 1.1
        let cfg = CartPoleConfig::default();
        let temp: f64 = 10.0 / 1.1;
        let theta_acc = -temp / (0.5 * (4.0 / 3.0 - 0.1 / 1.1));
        let x_acc = temp - 0.05 * theta_acc / 1.1;
        assert!((theta_acc - -14.634146).abs() < 1e-5);
        assert!((x_acc - 9.756098).abs() < 1e-5);

        let (next, failed) = step(&cfg, &ZERO, 1).unwrap();
        assert!(!failed);
        assert_eq!(next.x, 0.0);
        assert_eq!(next.theta, 0.0);
        assert!((next.x_dot - 0.195122).abs() < 1e-6);
        assert!((next.theta_dot - -0.292683).abs() < 1e-6);
    }

    #[test]
    fn over_angle_terminates_with_reward() {
        let mut env = CartPole::new(CartPoleConfig::default()).unwrap();
        env.state = CartPoleState {
            theta: 12.0_f64.to_radians() + 1e-3,
            ..ZERO
        };
        let r = env.step(0, &mut Rng::new(0)).unwrap();
        assert!(r.terminated);
        assert!(!r.truncated);
        assert_eq!(r.reward, 1.0);
    }

    #[test]
    fn truncates_at_max_steps() {
        let cfg = CartPoleConfig {
            max_steps: 3,
            ..Default::default()
        };
        let mut env = CartPole::new(cfg).unwrap();
        let mut rng = Rng::new(0);
        env.reset(&mut rng);
        let mut last = None;
        for a in [0, 1, 0] {
            last = Some(env.step(a, &mut rng).unwrap());
        }
        let last = last.unwrap();
        assert!(last.truncated && !last.terminated);
    }

    #[test]
    fn reset_in_range_and_deterministic() {
        let cfg = CartPoleConfig::default();
        let a = reset(&cfg, &mut Rng::new(12));
        let b = reset(&cfg, &mut Rng::new(12));
        assert_eq!(a, b);
        let mut rng = Rng::new(1);
        for _ in 0..1000 {
            let s = reset(&cfg, &mut rng);
            assert!(s.to_vec().iter().all(|v| v.abs() <= RESET_RANGE));
        }
    }

    #[test]
    fn reset_means_near_zero() {
        // Uniform(-0.05, 0.05) has sd 0.05/sqrt(3); the mean of 1e4 draws has sd ~2.9e-4.
        let cfg = CartPoleConfig::default();
        let mut rng = Rng::new(99);
        let n = 10_000;
        let mut sums = [0.0; 4];
        for _ in 0..n {
            for (acc, v) in sums.iter_mut().zip(reset(&cfg, &mut rng).to_vec()) {
                *acc += v;
            }
        }
        let bound = 3.0 * (0.05 / 3f64.sqrt()) / (n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64).abs() < bound);
        }
    }

    #[test]
    fn invalid_action_and_config() {
        assert!(step(&CartPoleConfig::default(), &ZERO, 2).is_err());
        let bad = CartPoleConfig {
            pole_length: -1.0,
            ..Default::default()
        };
        assert!(CartPole::new(bad).is_err());
    }

    #[test]
    fn non_finite_state_is_simulation_error() {
        let s = CartPoleState {
            theta_dot: f64::INFINITY,
            ..ZERO
        };
        assert!(matches!(
            step(&CartPoleConfig::default(), &s, 0),
            Err(Error::Simulation(_))
        ));
    }
}
