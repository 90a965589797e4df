use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algos::{AlgoConfig, Algorithm};
use crate::envs::{EnvConfig, EnvKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// Test frozen agents on perturbed copies of the environment.
    Perturb { parameter: String, values: Vec<f64> },
    /// Train and test one agent per risk parameter.
    Beta { values: Vec<f64> },
}

/// How test episodes pick actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPolicy {
    Sample,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algo: AlgoConfig,
    pub hidden: usize,
    pub n_train_episodes: usize,
    pub n_test_episodes: usize,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub out_dir: PathBuf,
    /// Worker threads across cells; 0 uses every core.
    pub jobs: usize,
    /// Tail probability of the reported VaR/CVaR.
    pub risk_level: f64,
    pub test_policy: TestPolicy,
    /// Trailing-100 mean that counts as solved; defaults per environment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

pub fn default_hidden(kind: EnvKind) -> usize {
    match kind {
        EnvKind::CartPole => 16,
        EnvKind::Acrobot => 256,
    }
}

pub fn default_threshold(kind: EnvKind) -> f64 {
    match kind {
        EnvKind::CartPole => 195.0,
        EnvKind::Acrobot => -100.0,
    }
}

/// `EXPRL_SEED`: either a comma-separated seed list or a single value.
pub fn seeds_from_env() -> Option<Vec<u64>> {
    let raw = std::env::var("EXPRL_SEED").ok()?;
    raw.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn overlay(base: &mut toml::Table, user: &toml::Table) {
    for (k, v) in user {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => overlay(b, u),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<toml::Table> {
    toml::Table::try_from(value).map_err(|e| Error::Config(e.to_string()))
}

fn section<'a>(root: &'a toml::Table, key: &str) -> Result<Option<&'a toml::Table>> {
    match root.get(key) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(Error::Config(format!("`{key}` must be a table"))),
    }
}

impl ExperimentConfig {
    /// Defaults for one cell family; the per-environment tuned learning rates apply.
    pub fn defaults(kind: EnvKind, algorithm: Algorithm, beta: f64) -> Self {
        let algo = AlgoConfig::tuned(algorithm, kind, beta);
        Self {
            env: EnvConfig::default_for(kind),
            hidden: default_hidden(kind),
            n_train_episodes: algo.episodes,
            n_test_episodes: 500,
            seeds: seeds_from_env().unwrap_or_else(|| (0..10).collect()),
            sweep: None,
            out_dir: PathBuf::from("runs"),
            jobs: 0,
            risk_level: 0.1,
            test_policy: TestPolicy::Sample,
            threshold: None,
            algo,
        }
    }

    /// Resolves a partial document: the environment kind and algorithm pick
    /// the defaults, and every key present in the document overrides them.
    pub fn from_table(user: &toml::Table) -> Result<Self> {
        let env_user = section(user, "env")?;
        let algo_user = section(user, "algo")?;
        let kind: EnvKind = match env_user.and_then(|t| t.get("kind")) {
            Some(v) => v.as_str().ok_or_else(|| Error::Config("env.kind must be a string".into()))?.parse()?,
            None => EnvKind::CartPole,
        };
        let algorithm: Algorithm = match algo_user.and_then(|t| t.get("algorithm")) {
            Some(v) => v
                .as_str()
                .ok_or_else(|| Error::Config("algo.algorithm must be a string".into()))?
                .parse()?,
            None => Algorithm::Reinforce,
        };
        let beta = match algo_user.and_then(|t| t.get("beta")) {
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::Config("algo.beta must be a number".into()))?,
            None => 0.0,
        };
        let mut base = to_table(&Self::defaults(kind, algorithm, beta))?;
        let mut user = user.clone();
        if !user.contains_key("hidden") {
            user.insert("hidden".into(), toml::Value::Integer(default_hidden(kind) as i64));
        }
        overlay(&mut base, &user);
        let mut cfg: Self = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.algo.episodes = cfg.n_train_episodes;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(&table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kind(&self) -> EnvKind {
        self.env.kind()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or_else(|| default_threshold(self.kind()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        if self.n_train_episodes == 0 || self.n_test_episodes == 0 {
            return Err(Error::Config("episode counts must be positive".into()));
        }
        if !(self.risk_level > 0.0 && self.risk_level < 1.0) {
            return Err(Error::Config("risk_level must lie in (0, 1)".into()));
        }
        match &self.sweep {
            Some(Sweep::Perturb { parameter, values }) => {
                if values.is_empty() {
                    return Err(Error::Config("perturbation sweep needs values".into()));
                }
                for v in values {
                    self.env.perturb(parameter, *v)?;
                }
            }
            Some(Sweep::Beta { values }) => {
                if values.is_empty() {
                    return Err(Error::Config("beta sweep needs values".into()));
                }
                if values.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Config("beta values must be finite".into()));
                }
            }
            None => {}
        }
        self.algo.routed().validate()
    }
}

/// Default robustness grid for an environment.
pub fn default_perturbation_grid(kind: EnvKind) -> Vec<f64> {
    match kind {
        EnvKind::CartPole => vec![0.2, 0.5, 1.0, 1.5, 2.0],
        EnvKind::Acrobot => vec![0.6, 0.8, 1.0, 1.2, 1.4],
    }
}

pub fn default_beta_grid() -> Vec<f64> {
    vec![-0.05, -0.01, -0.005, 0.005, 0.01, 0.05]
}

/// JSON Schema of the experiment document.
pub fn config_schema() -> serde_json::Value {
    let num = json!({"type": "number"});
    let pos_int = json!({"type": "integer", "minimum": 1});
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "exprl experiment",
        "type": "object",
        "additionalProperties": false,
        "properties": {
            "hidden": pos_int,
            "n_train_episodes": pos_int,
            "n_test_episodes": pos_int,
            "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "out_dir": {"type": "string"},
            "jobs": {"type": "integer", "minimum": 0},
            "risk_level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "test_policy": {"enum": ["sample", "greedy"]},
            "threshold": num,
            "env": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["cartpole", "acrobot"]},
                    "gravity": num, "cart_mass": num, "pole_mass": num, "pole_length": num,
                    "force_mag": num, "dt": num, "angle_limit": num, "x_limit": num,
                    "link1_length": num, "link2_length": num, "link1_mass": num, "link2_mass": num,
                    "goal_height": num, "max_vel1": num, "max_vel2": num,
                    "max_steps": pos_int
                }
            },
            "algo": {
                "type": "object",
                "additionalProperties": false,
                "properties": {
                    "algorithm": {"enum": ["reinforce", "reinforce_baseline", "oac", "rs_reinforce", "rs_oac"]},
                    "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "beta": num,
                    "actor_lr": {"type": "number", "exclusiveMinimum": 0},
                    "critic_lr": {"type": "number", "exclusiveMinimum": 0},
                    "lr_schedule": {"enum": ["constant", "inverse_linear"]},
                    "lr_decay": {"type": "number", "minimum": 0},
                    "decay_trigger": num,
                    "episodes": pos_int,
                    "seed": {"type": "integer", "minimum": 0},
                    "roac_target": {"enum": ["alg5_literal", "successor_state", "alg5", "successor"]},
                    "roac_bootstrap": {"enum": ["additive", "certainty_equivalent"]},
                    "actor_signal": {"enum": ["literal", "advantage"]},
                    "exp_clamp": {"type": "number", "exclusiveMinimum": 0},
                    "update_mode": {"enum": ["adam", "sgd_per_step"]},
                    "divergence_factor": {"type": "number", "exclusiveMinimum": 1}
                }
            },
            "sweep": {
                "oneOf": [
                    {
                        "type": "object",
                        "additionalProperties": false,
                        "required": ["kind", "parameter", "values"],
                        "properties": {
                            "kind": {"const": "perturb"},
                            "parameter": {"enum": ["pole_length", "link1_length"]},
                            "values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
                        }
                    },
                    {
                        "type": "object",
                        "additionalProperties": false,
                        "required": ["kind", "values"],
                        "properties": {
                            "kind": {"const": "beta"},
                            "values": {"type": "array", "items": num, "minItems": 1}
                        }
                    }
                ]
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("seeds = [1, 2]").unwrap();
        assert_eq!(c.kind(), EnvKind::CartPole);
        assert_eq!(c.hidden, 16);
        assert_eq!(c.n_train_episodes, 1000);
        assert_eq!(c.n_test_episodes, 500);
        assert_eq!(c.algo.gamma, 0.99);
        assert_eq!(c.seeds, vec![1, 2]);
    }

    #[test]
    fn overrides_and_tuned_defaults() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            seeds = [0]
            n_train_episodes = 50
            [env]
            kind = "acrobot"
            link1_length = 1.2
            [algo]
            algorithm = "rs-reinforce"
            beta = 0.01
            roac_target = "alg5"
            "#,
        )
        .unwrap();
        assert_eq!(c.kind(), EnvKind::Acrobot);
        assert_eq!(c.hidden, 256);
        assert_eq!(c.env.perturbable_value(), 1.2);
        assert_eq!(c.algo.algorithm, Algorithm::RsReinforce);
        assert_eq!(c.algo.episodes, 50);
        assert_eq!(c.algo.decay_trigger, Some(-100.0));
        assert_eq!(c.algo.roac_target, crate::algos::RoacTarget::Alg5Literal);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::defaults(EnvKind::CartPole, Algorithm::RsOac, -0.01);
        c.sweep = Some(Sweep::Perturb {
            parameter: "pole_length".into(),
            values: vec![0.5, 1.0],
        });
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[algo]\nalgorithm = \"ppo\"").is_err());
        assert!(ExperimentConfig::from_toml_str("[algo]\nalgorithm = \"rs_oac\"\nbeta = \"x\"").is_err());
        let routed = ExperimentConfig::from_toml_str("[algo]\nalgorithm = \"rs_oac\"").unwrap();
        assert_eq!(routed.algo.routed().algorithm, Algorithm::Oac);
        assert!(ExperimentConfig::from_toml_str(
            "[sweep]\nkind = \"perturb\"\nparameter = \"link1_length\"\nvalues = [1.0]"
        )
        .is_err());
    }

    #[test]
    fn schema_lists_every_serialized_key() {
        let schema = config_schema();
        let c = ExperimentConfig::defaults(EnvKind::Acrobot, Algorithm::RsOac, 0.01);
        let doc = serde_json::to_value(&c).unwrap();
        let props = &schema["properties"];
        for (k, v) in doc.as_object().unwrap() {
            assert!(props.get(k).is_some(), "top-level {k}");
            if k == "env" || k == "algo" {
                for sub in v.as_object().unwrap().keys() {
                    assert!(props[k]["properties"].get(sub).is_some(), "{k}.{sub}");
                }
            }
        }
        let cp = serde_json::to_value(ExperimentConfig::defaults(EnvKind::CartPole, Algorithm::Oac, 0.0)).unwrap();
        for sub in cp["env"].as_object().unwrap().keys() {
            assert!(props["env"]["properties"].get(sub).is_some(), "env.{sub}");
        }
    }
}
