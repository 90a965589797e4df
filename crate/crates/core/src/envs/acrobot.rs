//! Two-link underactuated pendulum, torque applied at the elbow joint.
//!
//! Equations of motion follow the textbook acrobot model, integrated with
//! classical RK4 over each control interval. Angles are measured from the
//! downward vertical (`theta1`) and relative to the first link (`theta2`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Environment, StepResult};
use crate::error::{Error, Result};
use crate::numkit::Rng;

pub const OBS_DIM: usize = 6;
pub const N_ACTIONS: usize = 3;
pub const TORQUES: [f64; N_ACTIONS] = [-1.0, 0.0, 1.0];
const RESET_RANGE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcrobotConfig {
    pub link1_length: f64,
    pub link2_length: f64,
    pub link1_mass: f64,
    pub link2_mass: f64,
    pub gravity: f64,
    pub dt: f64,
    /// Tip height above the pivot that ends the episode.
    pub goal_height: f64,
    pub max_vel1: f64,
    pub max_vel2: f64,
    pub max_steps: usize,
}

impl Default for AcrobotConfig {
    fn default() -> Self {
        Self {
            link1_length: 1.0,
            link2_length: 1.0,
            link1_mass: 1.0,
            link2_mass: 1.0,
            gravity: 9.8,
            dt: 0.2,
            goal_height: 1.0,
            max_vel1: 4.0 * PI,
            max_vel2: 9.0 * PI,
            max_steps: 500,
        }
    }
}

impl AcrobotConfig {
    /// Centre-of-mass offsets sit at mid-link.
    pub fn link1_com(&self) -> f64 {
        0.5 * self.link1_length
    }
    pub fn link2_com(&self) -> f64 {
        0.5 * self.link2_length
    }
    /// Moments of inertia scale as `m l^2`, giving 1.0 for the unit links.
    pub fn link1_inertia(&self) -> f64 {
        self.link1_mass * self.link1_length * self.link1_length
    }
    pub fn link2_inertia(&self) -> f64 {
        self.link2_mass * self.link2_length * self.link2_length
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("link1_length", self.link1_length),
            ("link2_length", self.link2_length),
            ("link1_mass", self.link1_mass),
            ("link2_mass", self.link2_mass),
            ("gravity", self.gravity),
            ("dt", self.dt),
            ("max_vel1", self.max_vel1),
            ("max_vel2", self.max_vel2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("acrobot {name} must be positive, got {v}")));
            }
        }
        if !self.goal_height.is_finite() {
            return Err(Error::Config("acrobot goal_height must be finite".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("acrobot max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(theta1, theta2, theta1_dot, theta2_dot)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcrobotState {
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
}

impl AcrobotState {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.theta1, self.theta2, self.theta1_dot, self.theta2_dot]
    }

    pub fn observation(&self) -> Vec<f64> {
        let (s1, c1) = self.theta1.sin_cos();
        let (s2, c2) = self.theta2.sin_cos();
        vec![c1, s1, c2, s2, self.theta1_dot, self.theta2_dot]
    }

    fn as_array(&self) -> [f64; 4] {
        [self.theta1, self.theta2, self.theta1_dot, self.theta2_dot]
    }
}

pub fn reset(_config: &AcrobotConfig, rng: &mut Rng) -> AcrobotState {
    let mut draw = || rng.uniform_range(-RESET_RANGE, RESET_RANGE);
    AcrobotState {
        theta1: draw(),
        theta2: draw(),
        theta1_dot: draw(),
        theta2_dot: draw(),
    }
}

fn derivatives(c: &AcrobotConfig, s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2) = (c.link1_mass, c.link2_mass);
    let l1 = c.link1_length;
    let (lc1, lc2) = (c.link1_com(), c.link2_com());
    let (i1, i2) = (c.link1_inertia(), c.link2_inertia());
    let g = c.gravity;
    let [t1, t2, w1, w2] = s;
    let (sin2, cos2) = t2.sin_cos();

    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * cos2) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * cos2) + i2;
    let phi2 = m2 * lc2 * g * (t1 + t2).sin();
    let phi1 = -m2 * l1 * lc2 * w2 * w2 * sin2 - 2.0 * m2 * l1 * lc2 * w2 * w1 * sin2
        + (m1 * lc1 + m2 * l1) * g * t1.sin()
        + phi2;
    let acc2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * w1 * w1 * sin2 - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let acc1 = -(d2 * acc2 + phi1) / d1;
    [w1, w2, acc1, acc2]
}

fn rk4(c: &AcrobotConfig, s: [f64; 4], torque: f64) -> [f64; 4] {
    let h = c.dt;
    let add = |a: [f64; 4], k: [f64; 4], f: f64| std::array::from_fn(|i| a[i] + f * k[i]);
    let k1 = derivatives(c, s, torque);
    let k2 = derivatives(c, add(s, k1, h / 2.0), torque);
    let k3 = derivatives(c, add(s, k2, h / 2.0), torque);
    let k4 = derivatives(c, add(s, k3, h), torque);
    std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == x {
        x
    } else {
        y
    }
}

/// Height of the free tip above the pivot.
pub fn tip_height(config: &AcrobotConfig, s: &AcrobotState) -> f64 {
    -config.link1_length * s.theta1.cos() - config.link2_length * (s.theta1 + s.theta2).cos()
}

/// Total mechanical energy with the pivot as the potential reference.
pub fn mechanical_energy(c: &AcrobotConfig, s: &AcrobotState) -> f64 {
    let (m1, m2) = (c.link1_mass, c.link2_mass);
    let l1 = c.link1_length;
    let (lc1, lc2) = (c.link1_com(), c.link2_com());
    let (i1, i2) = (c.link1_inertia(), c.link2_inertia());
    let cos2 = s.theta2.cos();
    let d11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * cos2) + i1 + i2;
    let d12 = m2 * (lc2 * lc2 + l1 * lc2 * cos2) + i2;
    let d22 = m2 * lc2 * lc2 + i2;
    let (w1, w2) = (s.theta1_dot, s.theta2_dot);
    let kinetic = 0.5 * (d11 * w1 * w1 + 2.0 * d12 * w1 * w2 + d22 * w2 * w2);
    let potential = -(m1 * lc1 + m2 * l1) * c.gravity * s.theta1.cos()
        - m2 * lc2 * c.gravity * (s.theta1 + s.theta2).cos();
    kinetic + potential
}

/// Integrates one control interval. Returns the successor and whether the goal height was reached.
pub fn step(
    config: &AcrobotConfig,
    state: &AcrobotState,
    action: usize,
) -> Result<(AcrobotState, bool)> {
    let torque = *TORQUES
        .get(action)
        .ok_or_else(|| Error::Usage(format!("acrobot action {action} out of range")))?;
    let [t1, t2, w1, w2] = rk4(config, state.as_array(), torque);
    let next = AcrobotState {
        theta1: wrap_angle(t1),
        theta2: wrap_angle(t2),
        theta1_dot: w1.clamp(-config.max_vel1, config.max_vel1),
        theta2_dot: w2.clamp(-config.max_vel2, config.max_vel2),
    };
    if !next.as_array().iter().all(|v| v.is_finite()) {
        return Err(Error::Simulation("acrobot state became non-finite".into()));
    }
    let reached = tip_height(config, &next) > config.goal_height;
    Ok((next, reached))
}

/// Episodic wrapper: reward -1 per step until the goal, 0 on the step that reaches it.
#[derive(Debug, Clone)]
pub struct Acrobot {
    config: AcrobotConfig,
    state: AcrobotState,
    steps: usize,
}

impl Acrobot {
    pub fn new(config: AcrobotConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: AcrobotState {
                theta1: 0.0,
                theta2: 0.0,
                theta1_dot: 0.0,
                theta2_dot: 0.0,
            },
            steps: 0,
        })
    }

    pub fn config(&self) -> &AcrobotConfig {
        &self.config
    }

    pub fn state(&self) -> AcrobotState {
        self.state
    }
}

impl Environment for Acrobot {
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
        self.state.observation()
    }

    fn step(&mut self, action: usize, _rng: &mut Rng) -> Result<StepResult> {
        let (next, reached) = step(&self.config, &self.state, action)?;
        self.state = next;
        self.steps += 1;
        Ok(StepResult {
            observation: next.observation(),
            reward: if reached { 0.0 } else { -1.0 },
            terminated: reached,
            truncated: !reached && self.steps >= self.config.max_steps,
        })
    }

    fn state_vector(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REST: AcrobotState = AcrobotState {
        theta1: 0.0,
        theta2: 0.0,
        theta1_dot: 0.0,
        theta2_dot: 0.0,
    };

    #[test]
    fn rest_is_fixed_point() {
        let (next, reached) = step(&AcrobotConfig::default(), &REST, 1).unwrap();
        assert_eq!(next, REST);
        assert!(!reached);
    }

    #[test]
    fn torque_moves_elbow() {
        let (next, _) = step(&AcrobotConfig::default(), &REST, 2).unwrap();
        assert!(next.theta2_dot > 0.0);
    }

    #[test]
    fn energy_conserved_without_torque() {
        let cfg = AcrobotConfig::default();
        let mut s = AcrobotState {
            theta1: 0.1,
            theta2: -0.08,
            theta1_dot: 0.05,
            theta2_dot: -0.1,
        };
        let e0 = mechanical_energy(&cfg, &s);
        for _ in 0..50 {
            s = step(&cfg, &s, 1).unwrap().0;
            let e = mechanical_energy(&cfg, &s);
            assert!(((e - e0) / e0).abs() < 0.01, "drift {e} vs {e0}");
        }
    }

    #[test]
    fn energy_conserved_with_perturbed_link() {
        let cfg = AcrobotConfig {
            link1_length: 1.4,
            ..Default::default()
        };
        let mut s = AcrobotState {
            theta1: -0.1,
            theta2: 0.1,
            theta1_dot: 0.0,
            theta2_dot: 0.1,
        };
        let e0 = mechanical_energy(&cfg, &s);
        for _ in 0..50 {
            s = step(&cfg, &s, 1).unwrap().0;
        }
        assert!(((mechanical_energy(&cfg, &s) - e0) / e0).abs() < 0.01);
    }

    #[test]
    fn upright_reaches_goal() {
        let cfg = AcrobotConfig::default();
        let up = AcrobotState {
            theta1: PI - 0.01,
            ..REST
        };
        assert!(tip_height(&cfg, &up) > cfg.goal_height);
        let mut env = Acrobot::new(cfg).unwrap();
        env.state = up;
        let r = env.step(1, &mut Rng::new(0)).unwrap();
        assert!(r.terminated);
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn velocities_clamped_and_angles_wrapped() {
        let cfg = AcrobotConfig::default();
        let s = AcrobotState {
            theta1: 3.0,
            theta2: -3.0,
            theta1_dot: 100.0,
            theta2_dot: -100.0,
        };
        let (n, _) = step(&cfg, &s, 0).unwrap();
        assert!(n.theta1_dot.abs() <= cfg.max_vel1);
        assert!(n.theta2_dot.abs() <= cfg.max_vel2);
        assert!(n.theta1.abs() <= PI && n.theta2.abs() <= PI);
    }

    #[test]
    fn reset_range_and_observation_shape() {
        let cfg = AcrobotConfig::default();
        let mut rng = Rng::new(8);
        for _ in 0..1000 {
            let s = reset(&cfg, &mut rng);
            assert!(s.to_vec().iter().all(|v| v.abs() <= RESET_RANGE));
            assert_eq!(s.observation().len(), OBS_DIM);
        }
    }

    #[test]
    fn bad_action() {
        assert!(step(&AcrobotConfig::default(), &REST, 3).is_err());
    }
}
