use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{run_id, write_results, Checkpoint, ExperimentConfig, ResultRow, RunStatus, Sweep, TestPolicy, THRESHOLD_WINDOW};
use crate::algos::{rollout, write_file, Agent, AlgoConfig, Algorithm, TrainingLog, Trainer};
use crate::envs::{EnvConfig, EnvKind};
use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::policy::CategoricalPolicy;
use crate::riskmath::{risk_report, RiskReport};

const INIT_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

/// Result of one run; `log` keeps the records up to a failure.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: ResultRow,
    pub log: Option<TrainingLog>,
    pub returns: Option<Vec<f64>>,
    pub checkpoint: Option<Checkpoint>,
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub out_dir: PathBuf,
    pub cells: Vec<CellOutcome>,
}

impl CampaignReport {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }
}

#[derive(Debug, Clone)]
struct TrainSpec {
    env: EnvConfig,
    algo: AlgoConfig,
    hidden: usize,
    seed: u64,
    n_test: usize,
    test_policy: TestPolicy,
    risk_level: f64,
    threshold: f64,
}

fn empty_row(id: String, seed: u64, algo: &AlgoConfig, param_value: f64) -> ResultRow {
    ResultRow {
        run_id: id,
        seed,
        algorithm: algo.algorithm,
        beta: algo.beta,
        param_value,
        mean: None,
        std: None,
        var: None,
        cvar: None,
        episodes_to_threshold: None,
        status: RunStatus::Failed,
        error: None,
    }
}

fn fill_stats(row: &mut ResultRow, rep: &RiskReport) {
    row.mean = Some(rep.mean);
    row.std = Some(rep.std);
    row.var = Some(rep.var_p);
    row.cvar = Some(rep.cvar_p);
    row.status = RunStatus::Ok;
}

/// Undiscounted returns of `n` frozen-policy episodes.
pub fn test_returns(
    env_cfg: &EnvConfig,
    policy: &CategoricalPolicy,
    n: usize,
    mode: TestPolicy,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut env = env_cfg.build()?;
    let max_steps = env.max_steps();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let ret = match mode {
            TestPolicy::Sample => rollout(env.as_mut(), policy, rng, max_steps)?.total_reward(),
            TestPolicy::Greedy => {
                let mut obs = env.reset(rng);
                let mut total = 0.0;
                for _ in 0..max_steps {
                    let step = env.step(policy.greedy_action(&obs)?, rng)?;
                    total += step.reward;
                    if step.done() {
                        break;
                    }
                    obs = step.observation;
                }
                total
            }
        };
        out.push(ret);
    }
    Ok(out)
}

fn train_cell(spec: &TrainSpec) -> CellOutcome {
    let id = run_id(spec.algo.algorithm, spec.algo.beta, spec.seed);
    let mut row = empty_row(id, spec.seed, &spec.algo, spec.env.perturbable_value());
    let mut log = TrainingLog::default();
    let result = (|| -> Result<(Vec<f64>, Checkpoint)> {
        let mut env = spec.env.build()?;
        let algo = AlgoConfig {
            seed: spec.seed,
            ..spec.algo.clone()
        };
        let mut init = Rng::substream(spec.seed, INIT_STREAM);
        let mut agent = Agent::new(env.observation_dim(), env.n_actions(), spec.hidden, &algo, &mut init)?;
        let mut trainer = Trainer::new(&algo, &agent)?;
        let mut rng = Rng::substream(spec.seed, TRAIN_STREAM);
        for _ in 0..algo.episodes {
            log.records.push(trainer.run_episode(env.as_mut(), &mut agent, &mut rng)?);
        }
        let mut test_rng = Rng::substream(spec.seed, TEST_STREAM);
        let returns = test_returns(&spec.env, &agent.policy, spec.n_test, spec.test_policy, &mut test_rng)?;
        let ckpt = Checkpoint {
            env: spec.env.clone(),
            algo,
            seed: spec.seed,
            agent,
        };
        Ok((returns, ckpt))
    })();
    row.episodes_to_threshold = log.episodes_to_threshold(THRESHOLD_WINDOW, spec.threshold);
    match result.and_then(|(returns, ckpt)| Ok((risk_report(&returns, spec.risk_level)?, returns, ckpt))) {
        Ok((rep, returns, ckpt)) => {
            fill_stats(&mut row, &rep);
            CellOutcome {
                row,
                log: Some(log),
                returns: Some(returns),
                checkpoint: Some(ckpt),
            }
        }
        Err(e) => {
            row.error = Some(e.to_string());
            CellOutcome {
                row,
                log: (!log.records.is_empty()).then_some(log),
                returns: None,
                checkpoint: None,
            }
        }
    }
}

/// Runs `f` over `items` on `jobs` worker threads, keeping input order.
fn parallel_map<T: Sync, U: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Result<Vec<U>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// Writes raw returns as `episode,return` CSV.
pub fn write_returns(path: &Path, returns: &[f64]) -> Result<()> {
    write_file(path, &returns_csv(returns)?)
}

fn returns_csv(returns: &[f64]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Rec {
        episode: usize,
        #[serde(rename = "return")]
        ret: f64,
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, r) in returns.iter().enumerate() {
        w.serialize(Rec { episode: i + 1, ret: *r })?;
    }
    w.into_inner().map_err(|e| Error::Usage(e.to_string()))
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
    write_file(path, &bytes)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Groups outcomes by (algorithm, beta) in first-appearance order.
fn groups(cells: &[CellOutcome]) -> Vec<((Algorithm, f64), Vec<&CellOutcome>)> {
    let mut out: Vec<((Algorithm, f64), Vec<&CellOutcome>)> = Vec::new();
    for c in cells {
        let key = (c.row.algorithm, c.row.beta);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(c),
            None => out.push((key, vec![c])),
        }
    }
    out
}

#[derive(Serialize)]
struct CurveRow {
    algorithm: Algorithm,
    beta: f64,
    episode: usize,
    mean: Option<f64>,
    std: Option<f64>,
    n_runs: usize,
}

fn training_curve(cells: &[CellOutcome], n_episodes: usize) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    for ((algorithm, beta), members) in groups(cells) {
        for ep in 0..n_episodes {
            let vals: Vec<f64> = members
                .iter()
                .filter_map(|c| c.log.as_ref()?.records.get(ep).map(|r| r.episode_return))
                .collect();
            let (mean, std) = if vals.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&vals);
                (Some(m), Some(s))
            };
            rows.push(CurveRow {
                algorithm,
                beta,
                episode: ep + 1,
                mean,
                std,
                n_runs: vals.len(),
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct SummaryRow {
    algorithm: Algorithm,
    beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    param_value: Option<f64>,
    mean: Option<f64>,
    cvar: Option<f64>,
    n_runs: usize,
}

fn summarize(algorithm: Algorithm, beta: f64, param_value: Option<f64>, rows: &[&ResultRow]) -> SummaryRow {
    let ok: Vec<_> = rows.iter().filter(|r| r.status == RunStatus::Ok).collect();
    let avg = |f: fn(&ResultRow) -> Option<f64>| {
        let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    SummaryRow {
        algorithm,
        beta,
        param_value,
        mean: avg(|r| r.mean),
        cvar: avg(|r| r.cvar),
        n_runs: ok.len(),
    }
}

fn write_training_outputs(cfg: &ExperimentConfig, cells: &[CellOutcome]) -> Result<()> {
    let out = &cfg.out_dir;
    write_file(&out.join("config.toml"), cfg.to_toml_string()?.as_bytes())?;
    for c in cells {
        let id = &c.row.run_id;
        if let Some(ckpt) = &c.checkpoint {
            ckpt.save(&out.join("checkpoints").join(format!("{id}.json")))?;
        }
        if let Some(log) = &c.log {
            log.write_csv(&out.join("logs").join(format!("{id}.csv")))?;
            log.write_jsonl(&out.join("logs").join(format!("{id}.jsonl")))?;
        }
        if let Some(returns) = &c.returns {
            write_file(&out.join("returns").join(format!("{id}.csv")), &returns_csv(returns)?)?;
        }
    }
    write_results(&out.join("results.csv"), &cells.iter().map(|c| c.row.clone()).collect::<Vec<_>>())?;
    write_csv_rows(
        &out.join("figures").join("training_curve.csv"),
        &training_curve(cells, cfg.n_train_episodes),
    )
}

fn train_specs(cfg: &ExperimentConfig, algo: &AlgoConfig) -> Vec<TrainSpec> {
    let algo = AlgoConfig {
        episodes: cfg.n_train_episodes,
        ..algo.routed()
    };
    cfg.seeds
        .iter()
        .map(|&seed| TrainSpec {
            env: cfg.env.clone(),
            algo: algo.clone(),
            hidden: cfg.hidden,
            seed,
            n_test: cfg.n_test_episodes,
            test_policy: cfg.test_policy,
            risk_level: cfg.risk_level,
            threshold: cfg.threshold(),
        })
        .collect()
}

/// Trains and tests one agent per seed; failed runs become failure rows.
pub fn run_training(cfg: &ExperimentConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let specs = train_specs(cfg, &cfg.algo);
    let cells = parallel_map(cfg.jobs, &specs, train_cell)?;
    write_training_outputs(cfg, &cells)?;
    Ok(CampaignReport {
        out_dir: cfg.out_dir.clone(),
        cells,
    })
}

/// Trains and tests one agent per (beta, seed). Non-zero betas run the
/// risk-sensitive form of the configured algorithm, `beta = 0` its
/// risk-neutral counterpart.
pub fn run_beta_sweep(cfg: &ExperimentConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let betas = match &cfg.sweep {
        Some(Sweep::Beta { values }) => values.clone(),
        _ => return Err(Error::Config("beta sweep needs `sweep.kind = \"beta\"`".into())),
    };
    let rs = cfg.algo.algorithm.risk_sensitive_counterpart();
    let specs: Vec<TrainSpec> = betas
        .iter()
        .flat_map(|&beta| {
            train_specs(
                cfg,
                &AlgoConfig {
                    algorithm: rs,
                    beta,
                    ..cfg.algo.clone()
                },
            )
        })
        .collect();
    let cells = parallel_map(cfg.jobs, &specs, train_cell)?;
    write_training_outputs(cfg, &cells)?;
    let summary: Vec<SummaryRow> = groups(&cells)
        .into_iter()
        .map(|((alg, beta), members)| {
            let rows: Vec<&ResultRow> = members.iter().map(|c| &c.row).collect();
            summarize(alg, beta, None, &rows)
        })
        .collect();
    write_csv_rows(&cfg.out_dir.join("figures").join("beta_sensitivity.csv"), &summary)?;
    Ok(CampaignReport {
        out_dir: cfg.out_dir.clone(),
        cells,
    })
}

#[derive(Debug, Clone)]
struct PerturbSpec {
    checkpoint: PathBuf,
    run_id: String,
    seed: u64,
    algo: AlgoConfig,
    env: EnvConfig,
    hidden: usize,
    n_test: usize,
    test_policy: TestPolicy,
    risk_level: f64,
}

fn perturb_cell(spec: &PerturbSpec) -> CellOutcome {
    let mut row = empty_row(spec.run_id.clone(), spec.seed, &spec.algo, spec.env.perturbable_value());
    let result = (|| -> Result<(RiskReport, Vec<f64>)> {
        let ckpt = Checkpoint::load(&spec.checkpoint)?;
        ckpt.check_architecture(&spec.env, spec.hidden)?;
        let mut rng = Rng::substream(spec.seed, TEST_STREAM);
        let returns = test_returns(&spec.env, &ckpt.agent.policy, spec.n_test, spec.test_policy, &mut rng)?;
        Ok((risk_report(&returns, spec.risk_level)?, returns))
    })();
    match result {
        Ok((rep, returns)) => {
            fill_stats(&mut row, &rep);
            CellOutcome {
                row,
                log: None,
                returns: Some(returns),
                checkpoint: None,
            }
        }
        Err(e) => {
            row.error = Some(e.to_string());
            CellOutcome {
                row,
                log: None,
                returns: None,
                checkpoint: None,
            }
        }
    }
}

/// Tests the checkpoints of a finished campaign on perturbed copies of the
/// training environment. The test stream is the one used after training, so
/// the identity perturbation reproduces the in-distribution statistics.
pub fn run_robustness_sweep(cfg: &ExperimentConfig, checkpoint_dir: &Path) -> Result<CampaignReport> {
    cfg.validate()?;
    let (parameter, values) = match &cfg.sweep {
        Some(Sweep::Perturb { parameter, values }) => (parameter.clone(), values.clone()),
        _ => return Err(Error::Config("robustness sweep needs `sweep.kind = \"perturb\"`".into())),
    };
    let algo = cfg.algo.routed();
    let mut specs = Vec::new();
    for &v in &values {
        let env = cfg.env.perturb(&parameter, v)?;
        for &seed in &cfg.seeds {
            let id = run_id(algo.algorithm, algo.beta, seed);
            specs.push(PerturbSpec {
                checkpoint: checkpoint_dir.join(format!("{id}.json")),
                run_id: format!("{id}_{parameter}{v}"),
                seed,
                algo: algo.clone(),
                env: env.clone(),
                hidden: cfg.hidden,
                n_test: cfg.n_test_episodes,
                test_policy: cfg.test_policy,
                risk_level: cfg.risk_level,
            });
        }
    }
    let cells = parallel_map(cfg.jobs, &specs, perturb_cell)?;
    let out = &cfg.out_dir;
    for c in &cells {
        if let Some(returns) = &c.returns {
            write_file(
                &out.join("returns").join(format!("{}.csv", c.row.run_id)),
                &returns_csv(returns)?,
            )?;
        }
    }
    write_results(&out.join("robustness.csv"), &cells.iter().map(|c| c.row.clone()).collect::<Vec<_>>())?;
    let summary: Vec<SummaryRow> = values
        .iter()
        .map(|&v| {
            let rows: Vec<&ResultRow> = cells
                .iter()
                .map(|c| &c.row)
                .filter(|r| r.param_value == v)
                .collect();
            summarize(algo.algorithm, algo.beta, Some(v), &rows)
        })
        .collect();
    write_csv_rows(&out.join("figures").join("robustness.csv"), &summary)?;
    Ok(CampaignReport {
        out_dir: out.clone(),
        cells,
    })
}

/// Test statistics of a checkpoint on `env`, drawing from the test stream of `seed`.
pub fn evaluate(
    ckpt: &Checkpoint,
    env: &EnvConfig,
    n: usize,
    mode: TestPolicy,
    risk_level: f64,
    seed: u64,
) -> Result<(Vec<f64>, RiskReport)> {
    if env.kind() != ckpt.env.kind() {
        return Err(Error::Checkpoint(format!(
            "checkpoint was trained on {}, not {}",
            ckpt.env.kind(),
            env.kind()
        )));
    }
    let mut rng = Rng::substream(seed, TEST_STREAM);
    let returns = test_returns(env, &ckpt.agent.policy, n, mode, &mut rng)?;
    let rep = risk_report(&returns, risk_level)?;
    Ok((returns, rep))
}

fn state_columns(kind: EnvKind) -> [&'static str; 4] {
    match kind {
        EnvKind::CartPole => ["x", "x_dot", "theta", "theta_dot"],
        EnvKind::Acrobot => ["theta1", "theta2", "theta1_dot", "theta2_dot"],
    }
}

/// Plays one episode and writes `step,<state>,action,reward,terminated,truncated`,
/// where the state is the one in which the action was taken.
pub fn dump_trajectory(
    env_cfg: &EnvConfig,
    policy: &CategoricalPolicy,
    mode: TestPolicy,
    rng: &mut Rng,
    path: &Path,
) -> Result<usize> {
    let mut env = env_cfg.build()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step"];
    header.extend(state_columns(env_cfg.kind()));
    header.extend(["action", "reward", "terminated", "truncated"]);
    w.write_record(&header)?;
    let mut obs = env.reset(rng);
    let mut steps = 0;
    for t in 0..env.max_steps() {
        let state = env.state_vector();
        let action = match mode {
            TestPolicy::Sample => policy.sample_action(&obs, rng)?.0,
            TestPolicy::Greedy => policy.greedy_action(&obs)?,
        };
        let step = env.step(action, rng)?;
        let mut rec = vec![t.to_string()];
        rec.extend(state.iter().map(|x| x.to_string()));
        rec.extend([
            action.to_string(),
            step.reward.to_string(),
            step.terminated.to_string(),
            step.truncated.to_string(),
        ]);
        w.write_record(&rec)?;
        steps += 1;
        if step.done() {
            break;
        }
        obs = step.observation;
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
    write_file(path, &bytes)?;
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke(dir: &Path, alg: Algorithm, beta: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(EnvKind::CartPole, alg, beta);
        cfg.seeds = vec![0, 1];
        cfg.n_train_episodes = 20;
        cfg.algo.episodes = 20;
        cfg.n_test_episodes = 10;
        cfg.hidden = 8;
        cfg.jobs = 1;
        cfg.out_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn training_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = smoke(dir.path(), Algorithm::RsReinforce, -0.01);
        let rep = run_training(&cfg).unwrap();
        assert_eq!(rep.cells.len(), 2);
        for c in &rep.cells {
            assert_eq!(c.row.status, RunStatus::Ok);
            let id = &c.row.run_id;
            assert!(dir.path().join(format!("checkpoints/{id}.json")).exists());
            assert!(dir.path().join(format!("logs/{id}.jsonl")).exists());
            let raw = std::fs::read_to_string(dir.path().join(format!("returns/{id}.csv"))).unwrap();
            assert_eq!(raw.lines().count(), 11);
        }
        let curve = std::fs::read_to_string(dir.path().join("figures/training_curve.csv")).unwrap();
        assert_eq!(curve.lines().count(), 21);
        assert!(curve.starts_with("algorithm,beta,episode,mean,std,n_runs\n"));
        let back = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn checkpoint_reproduces_test_returns() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = smoke(dir.path(), Algorithm::Oac, 0.0);
        let rep = run_training(&cfg).unwrap();
        let cell = &rep.cells[1];
        let ckpt = Checkpoint::load(&dir.path().join(format!("checkpoints/{}.json", cell.row.run_id))).unwrap();
        let (returns, stats) = evaluate(&ckpt, &cfg.env, 10, TestPolicy::Sample, 0.1, cell.row.seed).unwrap();
        assert_eq!(Some(returns), cell.returns);
        assert_eq!(Some(stats.cvar_p), cell.row.cvar);
    }

    #[test]
    fn divergence_becomes_failure_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = smoke(dir.path(), Algorithm::Reinforce, 0.0);
        cfg.algo.actor_lr = 50.0;
        cfg.algo.divergence_factor = 1.5;
        let rep = run_training(&cfg).unwrap();
        for c in &rep.cells {
            assert_eq!(c.row.status, RunStatus::Failed);
            assert!(c.row.error.as_deref().unwrap().contains("diverged"));
            assert!(c.row.mean.is_none());
        }
        let rows = super::super::read_results(&dir.path().join("results.csv")).unwrap();
        assert_eq!(rows, rep.rows());
    }

    #[test]
    fn robustness_identity_and_missing_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = smoke(dir.path(), Algorithm::Reinforce, 0.0);
        let trained = run_training(&cfg).unwrap();
        cfg.seeds = vec![0, 1, 7];
        cfg.sweep = Some(Sweep::Perturb {
            parameter: "pole_length".into(),
            values: vec![0.5, 1.0],
        });
        let rep = run_robustness_sweep(&cfg, &dir.path().join("checkpoints")).unwrap();
        assert_eq!(rep.cells.len(), 6);
        for (a, b) in trained.cells.iter().zip(&rep.cells[..2]) {
            assert_eq!(a.row.mean, b.row.mean);
            assert_eq!(a.row.cvar, b.row.cvar);
        }
        assert_eq!(rep.cells[2].row.status, RunStatus::Failed);
        assert_eq!(rep.cells[5].row.status, RunStatus::Failed);
        assert_eq!(rep.cells[3].row.param_value, 1.0);
        let fig = std::fs::read_to_string(dir.path().join("figures/robustness.csv")).unwrap();
        assert!(fig.starts_with("algorithm,beta,param_value,mean,cvar,n_runs\n"));
        assert_eq!(fig.lines().count(), 3);
    }

    #[test]
    fn beta_sweep_routes_zero() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = smoke(dir.path(), Algorithm::RsReinforce, -0.01);
        cfg.seeds = vec![4];
        cfg.sweep = Some(Sweep::Beta {
            values: vec![-0.01, 0.0],
        });
        let rep = run_beta_sweep(&cfg).unwrap();
        let algs: Vec<_> = rep.cells.iter().map(|c| c.row.algorithm).collect();
        assert_eq!(algs, vec![Algorithm::RsReinforce, Algorithm::Reinforce]);
        let fig = std::fs::read_to_string(dir.path().join("figures/beta_sensitivity.csv")).unwrap();
        assert_eq!(fig.lines().next().unwrap(), "algorithm,beta,mean,cvar,n_runs");
        assert_eq!(fig.lines().count(), 3);
    }

    #[test]
    fn cell_order_does_not_matter() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = smoke(dir.path(), Algorithm::ReinforceBaseline, 0.0);
        let a = run_training(&cfg).unwrap().rows();
        cfg.seeds.reverse();
        let mut b = run_training(&cfg).unwrap().rows();
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_dump() {
        let dir = tempfile::tempdir().unwrap();
        let env = EnvConfig::default_for(EnvKind::Acrobot);
        let policy = CategoricalPolicy::random(6, 4, 3, &mut Rng::new(1)).unwrap();
        let path = dir.path().join("t.csv");
        let n = dump_trajectory(&env, &policy, TestPolicy::Greedy, &mut Rng::new(2), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,theta1,theta2,theta1_dot,theta2_dot,action,reward,terminated,truncated");
        assert_eq!(lines.len(), n + 1);
        assert!(lines[n].ends_with("true,false") || lines[n].ends_with("false,true"));
        assert!(lines[1..n].iter().all(|l| l.ends_with("false,false")));
    }
}
