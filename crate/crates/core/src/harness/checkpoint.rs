//! Checkpoint documents.
//!
//! A checkpoint is a JSON object:
//!
//! ```text
//! format_version  1
//! env             environment config, tagged by "kind"
//! dims            {"observation", "hidden", "actions"}
//! policy          flat policy parameters
//! critic          flat critic parameters, or null
//! algo            training config snapshot
//! seed            campaign seed of the run
//! ```
//!
//! Flat parameters list each layer row-major in the order `W1 (hidden x
//! observation), b1, W2 (outputs x hidden), b2`; the critic has one output.
//! Every number is written with 17 significant digits.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::algos::{Agent, AlgoConfig};
use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::numkit::{Mlp, MlpDims, ParamVector};
use crate::policy::{CategoricalPolicy, ValueFunction};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointDims {
    pub observation: usize,
    pub hidden: usize,
    pub actions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub env: EnvConfig,
    pub algo: AlgoConfig,
    pub seed: u64,
    pub agent: Agent,
}

#[derive(Serialize)]
struct DocOut<'a> {
    format_version: u32,
    env: &'a EnvConfig,
    dims: CheckpointDims,
    policy: Vec<Box<RawValue>>,
    critic: Option<Vec<Box<RawValue>>>,
    algo: &'a AlgoConfig,
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocIn {
    format_version: u32,
    env: EnvConfig,
    dims: CheckpointDims,
    policy: Vec<f64>,
    critic: Option<Vec<f64>>,
    algo: AlgoConfig,
    seed: u64,
}

fn raw_numbers(params: &[f64]) -> Result<Vec<Box<RawValue>>> {
    params
        .iter()
        .map(|x| {
            if !x.is_finite() {
                return Err(Error::Checkpoint(format!("non-finite parameter {x}")));
            }
            RawValue::from_string(format!("{x:.16e}")).map_err(Error::from)
        })
        .collect()
}

fn net_from(dims: MlpDims, params: Vec<f64>, what: &str) -> Result<Mlp> {
    if params.len() != dims.param_count() {
        return Err(Error::Checkpoint(format!(
            "{what} has {} parameters, dims need {}",
            params.len(),
            dims.param_count()
        )));
    }
    if params.iter().any(|x| !x.is_finite()) {
        return Err(Error::Checkpoint(format!("{what} holds a non-finite parameter")));
    }
    Mlp::from_params(dims, ParamVector::from(params))
}

impl Checkpoint {
    pub fn dims(&self) -> CheckpointDims {
        let d = self.agent.policy.net().dims();
        CheckpointDims {
            observation: d.input,
            hidden: d.hidden,
            actions: d.output,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = DocOut {
            format_version: FORMAT_VERSION,
            env: &self.env,
            dims: self.dims(),
            policy: raw_numbers(self.agent.policy.params())?,
            critic: self.agent.critic.as_ref().map(|c| raw_numbers(c.params())).transpose()?,
            algo: &self.algo,
            seed: self.seed,
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed document: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => return Err(Error::Checkpoint(format!("unsupported format_version {v}"))),
            None => return Err(Error::Checkpoint("missing format_version".into())),
        }
        let doc: DocIn = serde_json::from_value(value).map_err(|e| Error::Checkpoint(e.to_string()))?;
        debug_assert_eq!(doc.format_version, FORMAT_VERSION);
        doc.algo.routed().validate()?;
        let d = doc.dims;
        if d.observation != doc.env.observation_dim() || d.actions != doc.env.n_actions() {
            return Err(Error::Checkpoint(format!(
                "dims {}x{} do not fit {} ({}x{})",
                d.observation,
                d.actions,
                doc.env.kind(),
                doc.env.observation_dim(),
                doc.env.n_actions()
            )));
        }
        if d.hidden == 0 {
            return Err(Error::Checkpoint("hidden width is zero".into()));
        }
        let policy = CategoricalPolicy::new(net_from(
            MlpDims::new(d.observation, d.hidden, d.actions),
            doc.policy,
            "policy",
        )?)?;
        if doc.critic.is_some() != doc.algo.routed().algorithm.uses_critic() {
            return Err(Error::Checkpoint(format!(
                "critic presence does not match algorithm {}",
                doc.algo.algorithm
            )));
        }
        let critic = doc
            .critic
            .map(|p| net_from(MlpDims::new(d.observation, d.hidden, 1), p, "critic").and_then(ValueFunction::new))
            .transpose()?;
        Ok(Self {
            env: doc.env,
            algo: doc.algo,
            seed: doc.seed,
            agent: Agent { policy, critic },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::algos::write_file(path, self.to_json_string()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Rejects a checkpoint whose network does not fit `env` with `hidden` units.
    pub fn check_architecture(&self, env: &EnvConfig, hidden: usize) -> Result<()> {
        let d = self.dims();
        let want = CheckpointDims {
            observation: env.observation_dim(),
            hidden,
            actions: env.n_actions(),
        };
        if d != want || self.env.kind() != env.kind() {
            return Err(Error::Checkpoint(format!(
                "architecture {d:?} on {} does not match {want:?} on {}",
                self.env.kind(),
                env.kind()
            )));
        }
        Ok(())
    }
}
