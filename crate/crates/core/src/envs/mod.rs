//! Seedable classic-control simulators behind a uniform episodic interface.

pub mod acrobot;
pub mod cartpole;

use serde::{Deserialize, Serialize};

pub use acrobot::{Acrobot, AcrobotConfig, AcrobotState};
pub use cartpole::{CartPole, CartPoleConfig, CartPoleState};

use crate::error::{Error, Result};
use crate::numkit::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Goal reached or failure: no continuation value.
    pub terminated: bool,
    /// Time limit hit: the state itself is not terminal.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// An episodic environment with a discrete action set.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn max_steps(&self) -> usize;
    fn reset(&mut self, rng: &mut Rng) -> Vec<f64>;
    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult>;
    /// Raw internal state, for trajectory dumps.
    fn state_vector(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    CartPole,
    Acrobot,
}

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Acrobot => "acrobot",
        }
    }

    /// The physical parameter swept in robustness studies.
    pub fn perturbable_parameter(&self) -> &'static str {
        match self {
            EnvKind::CartPole => "pole_length",
            EnvKind::Acrobot => "link1_length",
        }
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(EnvKind::CartPole),
            "acrobot" => Ok(EnvKind::Acrobot),
            other => Err(Error::Config(format!("unknown environment `{other}`"))),
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical configuration of either simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvConfig {
    CartPole(CartPoleConfig),
    Acrobot(AcrobotConfig),
}

impl EnvConfig {
    pub fn default_for(kind: EnvKind) -> Self {
        match kind {
            EnvKind::CartPole => EnvConfig::CartPole(CartPoleConfig::default()),
            EnvKind::Acrobot => EnvConfig::Acrobot(AcrobotConfig::default()),
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            EnvConfig::CartPole(_) => EnvKind::CartPole,
            EnvConfig::Acrobot(_) => EnvKind::Acrobot,
        }
    }

    pub fn observation_dim(&self) -> usize {
        match self {
            EnvConfig::CartPole(_) => cartpole::OBS_DIM,
            EnvConfig::Acrobot(_) => acrobot::OBS_DIM,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            EnvConfig::CartPole(_) => cartpole::N_ACTIONS,
            EnvConfig::Acrobot(_) => acrobot::N_ACTIONS,
        }
    }

    pub fn max_steps(&self) -> usize {
        match self {
            EnvConfig::CartPole(c) => c.max_steps,
            EnvConfig::Acrobot(c) => c.max_steps,
        }
    }

    /// Current value of the perturbable physical parameter.
    pub fn perturbable_value(&self) -> f64 {
        match self {
            EnvConfig::CartPole(c) => c.pole_length,
            EnvConfig::Acrobot(c) => c.link1_length,
        }
    }

    /// Returns a copy with one physical parameter replaced; derived
    /// quantities are computed from it on demand.
    pub fn perturb(&self, parameter: &str, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("{parameter} must be positive, got {value}")));
        }
        match (self, parameter) {
            (EnvConfig::CartPole(c), "pole_length") => Ok(EnvConfig::CartPole(CartPoleConfig {
                pole_length: value,
                ..c.clone()
            })),
            (EnvConfig::Acrobot(c), "link1_length") => Ok(EnvConfig::Acrobot(AcrobotConfig {
                link1_length: value,
                ..c.clone()
            })),
            _ => Err(Error::Config(format!(
                "parameter `{parameter}` cannot be perturbed on {}",
                self.kind()
            ))),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment + Send>> {
        Ok(match self {
            EnvConfig::CartPole(c) => Box::new(CartPole::new(c.clone())?),
            EnvConfig::Acrobot(c) => Box::new(Acrobot::new(c.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturb_identity() {
        let base = EnvConfig::default_for(EnvKind::CartPole);
        assert_eq!(base.perturb("pole_length", 0.5).unwrap(), base);
    }

    #[test]
    fn perturb_pole_length() {
        let base = EnvConfig::default_for(EnvKind::CartPole);
        let EnvConfig::CartPole(c) = base.perturb("pole_length", 2.0).unwrap() else {
            panic!()
        };
        assert_eq!(c.pole_half_length(), 1.0);
    }

    #[test]
    fn perturb_link1() {
        let base = EnvConfig::default_for(EnvKind::Acrobot);
        let EnvConfig::Acrobot(c) = base.perturb("link1_length", 1.4).unwrap() else {
            panic!()
        };
        assert_eq!(c.link1_length, 1.4);
        assert!((c.link1_inertia() - 1.96).abs() < 1e-12);
        assert_eq!(c.link1_com(), 0.7);
    }

    #[test]
    fn perturb_errors() {
        let cp = EnvConfig::default_for(EnvKind::CartPole);
        assert!(cp.perturb("link1_length", 1.0).is_err());
        assert!(cp.perturb("pole_length", 0.0).is_err());
        assert!(cp.perturb("pole_length", -1.0).is_err());
        assert!(cp.perturb("mass", 1.0).is_err());
    }

    #[test]
    fn episode_bounds_under_random_actions() {
        for kind in [EnvKind::CartPole, EnvKind::Acrobot] {
            let cfg = EnvConfig::default_for(kind);
            let mut env = cfg.build().unwrap();
            let mut rng = Rng::new(3);
            for _ in 0..20 {
                env.reset(&mut rng);
                let (mut ret, mut len) = (0.0, 0);
                loop {
                    let a = (rng.uniform() * env.n_actions() as f64) as usize;
                    let r = env.step(a, &mut rng).unwrap();
                    ret += r.reward;
                    len += 1;
                    if r.done() {
                        break;
                    }
                }
                assert!(len <= cfg.max_steps());
                match kind {
                    EnvKind::CartPole => assert!((1.0..=200.0).contains(&ret)),
                    EnvKind::Acrobot => assert!((-500.0..=0.0).contains(&ret)),
                }
            }
        }
    }

    #[test]
    fn determinism_of_action_sequences() {
        let run = |kind| {
            let mut env = EnvConfig::default_for(kind).build().unwrap();
            let mut rng = Rng::new(17);
            let mut trace = env.reset(&mut rng);
            for t in 0..60 {
                let r = env.step(t % env.n_actions(), &mut rng).unwrap();
                let done = r.done();
                trace.extend(r.observation);
                if done {
                    break;
                }
            }
            trace
        };
        for kind in [EnvKind::CartPole, EnvKind::Acrobot] {
            let (a, b) = (run(kind), run(kind));
            assert_eq!(
                a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
