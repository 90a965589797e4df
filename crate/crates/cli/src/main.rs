use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exprl_core::harness::{
    self, checks, default_beta_grid, default_perturbation_grid, Checkpoint, ExperimentConfig, ResultRow, RunStatus,
    Sweep, TestPolicy,
};
use exprl_core::{EnvKind, Error, Result, Rng};

#[derive(Parser)]
#[command(name = "exprl", version, about = "Risk-sensitive policy-gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and test one agent per seed.
    Train(Common),
    /// Test trained checkpoints on perturbed environments.
    SweepPerturb {
        #[command(flatten)]
        common: Common,
        /// Physical parameter to vary (default: pole_length / link1_length).
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        /// Directory holding the checkpoints (default: <out>/checkpoints).
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Train the checkpoints first.
        #[arg(long)]
        train: bool,
    },
    /// Train and test one agent per risk parameter and seed.
    SweepBeta {
        #[command(flatten)]
        common: Common,
        /// Comma-separated beta values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        betas: Option<Vec<f64>>,
    },
    /// Test a checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Test episodes.
        #[arg(long, default_value_t = 500)]
        episodes: usize,
        /// Seed of the test stream (default: the checkpoint's seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Value of the perturbable physical parameter.
        #[arg(long)]
        param_value: Option<f64>,
        /// Act greedily instead of sampling.
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value_t = 0.1)]
        risk_level: f64,
        /// Write the returns as CSV.
        #[arg(long)]
        returns: Option<PathBuf>,
        /// Write one episode's states, actions and rewards as CSV.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
    /// Randomized self-checks; prints one JSON object per check.
    Oracle {
        #[command(subcommand)]
        check: OracleCheck,
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
    },
    /// Print the JSON Schema of the config file.
    Schema,
}

#[derive(Subcommand, Clone, Copy)]
enum OracleCheck {
    Duality {
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    Bellman {
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["cartpole", "acrobot"])]
    env: Option<String>,
    #[arg(long, value_parser = ["reinforce", "reinforce-baseline", "oac", "rs-reinforce", "rs-oac"])]
    algo: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Use seeds 0..N (default: EXPRL_SEED, else 0..10).
    #[arg(long)]
    seeds: Option<u64>,
    /// Training episodes per run.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    test_episodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Plain SGD with one update per time step.
    #[arg(long)]
    sgd_per_step: bool,
    #[arg(long, value_parser = ["alg5", "successor"])]
    roac_target: Option<String>,
}

fn table_mut<'a>(root: &'a mut toml::Table, key: &str) -> Result<&'a mut toml::Table> {
    root.entry(key)
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("`{key}` must be a table")))
}

impl Common {
    fn document(&self) -> Result<toml::Table> {
        let mut doc = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                text.parse::<toml::Table>().map_err(|e| Error::Config(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        if let Some(env) = &self.env {
            let t = table_mut(&mut doc, "env")?;
            if t.get("kind").and_then(|k| k.as_str()) != Some(env) {
                t.clear();
                t.insert("kind".into(), env.clone().into());
            }
        }
        {
            let algo = table_mut(&mut doc, "algo")?;
            if let Some(a) = &self.algo {
                algo.insert("algorithm".into(), a.clone().into());
            }
            if let Some(b) = self.beta {
                algo.insert("beta".into(), b.into());
            }
            if self.sgd_per_step {
                algo.insert("update_mode".into(), "sgd_per_step".into());
            }
            if let Some(t) = &self.roac_target {
                algo.insert("roac_target".into(), t.clone().into());
            }
        }
        if let Some(n) = self.seeds {
            doc.insert(
                "seeds".into(),
                toml::Value::Array((0..n as i64).map(toml::Value::Integer).collect()),
            );
        }
        if let Some(n) = self.episodes {
            doc.insert("n_train_episodes".into(), (n as i64).into());
        }
        if let Some(n) = self.test_episodes {
            doc.insert("n_test_episodes".into(), (n as i64).into());
        }
        if let Some(out) = &self.out {
            doc.insert("out_dir".into(), out.display().to_string().into());
        }
        if let Some(j) = self.jobs {
            doc.insert("jobs".into(), (j as i64).into());
        }
        Ok(doc)
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_table(&self.document()?)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

fn print_rows(rows: &[ResultRow]) {
    println!("{:<40} {:>9} {:>9} {:>9} {:>9}  status", "run", "param", "mean", "std", "cvar");
    for r in rows {
        let status = match r.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed => format!("failed: {}", r.error.as_deref().unwrap_or("")),
        };
        println!(
            "{:<40} {:>9} {:>9} {:>9} {:>9}  {}",
            r.run_id,
            r.param_value,
            opt(r.mean),
            opt(r.std),
            opt(r.cvar),
            status
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let rep = harness::run_training(&cfg)?;
            print_rows(&rep.rows());
            println!("wrote {}", rep.out_dir.display());
        }
        Command::SweepPerturb {
            common,
            param,
            values,
            checkpoints,
            train,
        } => {
            let mut cfg = common.resolve()?;
            let kind: EnvKind = cfg.kind();
            let (param, values) = match (&cfg.sweep, param, values) {
                (Some(Sweep::Perturb { parameter, values: v }), p, vals) => {
                    (p.unwrap_or(parameter.clone()), vals.unwrap_or(v.clone()))
                }
                (_, p, vals) => (
                    p.unwrap_or_else(|| kind.perturbable_parameter().to_string()),
                    vals.unwrap_or_else(|| default_perturbation_grid(kind)),
                ),
            };
            cfg.sweep = Some(Sweep::Perturb {
                parameter: param,
                values,
            });
            cfg.validate()?;
            if train {
                let rep = harness::run_training(&cfg)?;
                print_rows(&rep.rows());
            }
            let dir = checkpoints.unwrap_or_else(|| cfg.out_dir.join("checkpoints"));
            let rep = harness::run_robustness_sweep(&cfg, &dir)?;
            print_rows(&rep.rows());
            println!("wrote {}", rep.out_dir.display());
        }
        Command::SweepBeta { common, betas } => {
            let mut cfg = common.resolve()?;
            let values = match (&cfg.sweep, betas) {
                (_, Some(b)) => b,
                (Some(Sweep::Beta { values }), None) => values.clone(),
                _ => default_beta_grid(),
            };
            cfg.sweep = Some(Sweep::Beta { values });
            let rep = harness::run_beta_sweep(&cfg)?;
            print_rows(&rep.rows());
            println!("wrote {}", rep.out_dir.display());
        }
        Command::Evaluate {
            checkpoint,
            episodes,
            seed,
            param_value,
            greedy,
            risk_level,
            returns,
            dump_trajectory,
        } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let env = match param_value {
                Some(v) => ckpt.env.perturb(ckpt.env.kind().perturbable_parameter(), v)?,
                None => ckpt.env.clone(),
            };
            let mode = if greedy { TestPolicy::Greedy } else { TestPolicy::Sample };
            let seed = seed.unwrap_or(ckpt.seed);
            if episodes > 0 {
                let (rets, rep) = harness::evaluate(&ckpt, &env, episodes, mode, risk_level, seed)?;
                println!("{}", serde_json::to_string(&rep)?);
                if let Some(path) = returns {
                    harness::write_returns(&path, &rets)?;
                }
            }
            if let Some(path) = dump_trajectory {
                // a stream of its own, so dumping does not shift the test episodes
                let mut rng = Rng::substream(seed, 3);
                let n = harness::dump_trajectory(&env, &ckpt.agent.policy, mode, &mut rng, &path)?;
                eprintln!("{n} steps written to {}", path.display());
            }
        }
        Command::Oracle { check, seed } => {
            let rep = match check {
                OracleCheck::Duality { instances } => checks::duality_suite(instances, seed)?,
                OracleCheck::Bellman { instances } => checks::bellman_suite(instances, seed)?,
                OracleCheck::Gradcheck { probes } => checks::gradcheck(probes, seed)?,
            };
            println!("{}", serde_json::to_string(&rep)?);
            return Ok(rep.pass);
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&harness::config_schema())?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
