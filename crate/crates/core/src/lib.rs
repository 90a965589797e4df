//! Risk-sensitive policy-gradient toolkit: exponential-criterion REINFORCE and
//! actor-critic learners, classic-control simulators, risk statistics and
//! exact oracles on small MDPs.

pub mod algos;
pub mod envs;
pub mod error;
pub mod harness;
pub mod numkit;
pub mod policy;
pub mod riskmath;

pub use algos::{AlgoConfig, Algorithm, Trajectory};
pub use envs::{EnvConfig, EnvKind};
pub use error::{Error, Result};
pub use harness::{Checkpoint, ExperimentConfig, ResultRow};
pub use numkit::{ParamVector, Rng};
pub use riskmath::{RiskReport, TinyMdp};
