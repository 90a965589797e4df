//! Exact evaluation on [`TinyMdp`] instances by exhaustive trajectory
//! enumeration and by backward induction.

use super::TinyMdp;
use crate::error::{Error, Result};
use crate::numkit::ParamVector;
use crate::policy::CategoricalPolicy;

/// `|S|^(H+1) * |A|^H` must not exceed this.
pub const ENUMERATION_BUDGET: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `J = E[R]`
    RiskNeutral,
    /// `J = beta E[exp(beta R)]`
    Exponential { beta: f64 },
}

/// One complete trajectory with its probability under the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub prob: f64,
}

impl ExactTrajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
    }
}

/// `grad log pi(a | s)` for every state-action pair.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    n_actions: usize,
    grads: Vec<ParamVector>,
}

impl ScoreTable {
    pub fn new(mdp: &TinyMdp, policy: &CategoricalPolicy) -> Result<Self> {
        check_policy(mdp, policy)?;
        let mut grads = Vec::with_capacity(mdp.n_states() * mdp.n_actions());
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                grads.push(policy.log_prob_grad(&mdp.one_hot(s), a)?);
            }
        }
        Ok(Self {
            n_actions: mdp.n_actions(),
            grads,
        })
    }

    pub fn get(&self, s: usize, a: usize) -> &ParamVector {
        &self.grads[s * self.n_actions + a]
    }

    /// `sum_t grad log pi(a_t | s_t)` along a trajectory.
    pub fn trajectory_score(&self, tau: &ExactTrajectory) -> ParamVector {
        let mut acc = ParamVector::zeros(self.grads[0].len());
        for (s, a) in tau.states.iter().zip(&tau.actions) {
            acc.axpy(1.0, self.get(*s, *a));
        }
        acc
    }
}

fn check_policy(mdp: &TinyMdp, policy: &CategoricalPolicy) -> Result<()> {
    let dims = policy.net().dims();
    if dims.input != mdp.n_states() {
        return Err(Error::dim("policy input vs. state count", mdp.n_states(), dims.input));
    }
    if dims.output != mdp.n_actions() {
        return Err(Error::dim("policy output vs. action count", mdp.n_actions(), dims.output));
    }
    Ok(())
}

fn policy_table(mdp: &TinyMdp, policy: &CategoricalPolicy) -> Result<Vec<Vec<f64>>> {
    check_policy(mdp, policy)?;
    (0..mdp.n_states())
        .map(|s| policy.probabilities(&mdp.one_hot(s)))
        .collect()
}

pub fn enumeration_cost(mdp: &TinyMdp) -> f64 {
    let h = mdp.horizon() as i32;
    (mdp.n_states() as f64).powi(h + 1) * (mdp.n_actions() as f64).powi(h)
}

/// Every trajectory with positive probability, where
/// `rho(tau) = p0(s0) prod_t pi(a_t|s_t) P(s_{t+1}|s_t,a_t)`.
pub fn enumerate_trajectories(mdp: &TinyMdp, policy: &CategoricalPolicy) -> Result<Vec<ExactTrajectory>> {
    let cost = enumeration_cost(mdp);
    if cost > ENUMERATION_BUDGET {
        return Err(Error::Budget {
            needed: cost,
            budget: ENUMERATION_BUDGET,
        });
    }
    let pi = policy_table(mdp, policy)?;
    let mut out = Vec::new();
    let mut prefix = ExactTrajectory {
        states: Vec::new(),
        actions: Vec::new(),
        rewards: Vec::new(),
        prob: 1.0,
    };
    for (s0, &p0) in mdp.initial().iter().enumerate() {
        if p0 > 0.0 {
            prefix.prob = p0;
            extend(mdp, &pi, s0, &mut prefix, &mut out);
        }
    }
    Ok(out)
}

fn extend(
    mdp: &TinyMdp,
    pi: &[Vec<f64>],
    s: usize,
    prefix: &mut ExactTrajectory,
    out: &mut Vec<ExactTrajectory>,
) {
    let base_prob = prefix.prob;
    for a in 0..mdp.n_actions() {
        let pa = pi[s][a];
        if pa == 0.0 {
            continue;
        }
        for (s_next, &pt) in mdp.transition_row(s, a).iter().enumerate() {
            if pt == 0.0 {
                continue;
            }
            prefix.states.push(s);
            prefix.actions.push(a);
            prefix.rewards.push(mdp.reward(s, a));
            prefix.prob = base_prob * pa * pt;
            if mdp.is_terminal(s_next) || prefix.len() == mdp.horizon() {
                out.push(prefix.clone());
            } else {
                extend(mdp, pi, s_next, prefix, out);
            }
            prefix.states.pop();
            prefix.actions.pop();
            prefix.rewards.pop();
        }
    }
    prefix.prob = base_prob;
}

/// `sum_tau rho(tau) f(tau)` over all trajectories.
pub fn trajectory_expectation<F>(mdp: &TinyMdp, policy: &CategoricalPolicy, mut f: F) -> Result<ParamVector>
where
    F: FnMut(&ExactTrajectory) -> Result<ParamVector>,
{
    let mut acc = ParamVector::zeros(policy.params().len());
    for tau in enumerate_trajectories(mdp, policy)? {
        let v = f(&tau)?;
        acc.axpy(tau.prob, &v);
    }
    Ok(acc)
}

/// Exact objective and its gradient via `grad J = E[payoff(tau) grad log rho(tau)]`.
pub fn enumerate_objective(
    mdp: &TinyMdp,
    policy: &CategoricalPolicy,
    criterion: Criterion,
) -> Result<(f64, ParamVector)> {
    let scores = ScoreTable::new(mdp, policy)?;
    let mut j = 0.0;
    let mut grad = ParamVector::zeros(policy.params().len());
    for tau in enumerate_trajectories(mdp, policy)? {
        let ret = tau.discounted_return(mdp.gamma());
        let payoff = match criterion {
            Criterion::RiskNeutral => ret,
            Criterion::Exponential { beta } => beta * (beta * ret).exp(),
        };
        j += tau.prob * payoff;
        grad.axpy(tau.prob * payoff, &scores.trajectory_score(&tau));
    }
    Ok((j, grad))
}

#[derive(Debug, Clone)]
pub struct BellmanSolution {
    /// `values[k][s]` for stage `k = 0..=H`, with `values[H] = 1`.
    pub values: Vec<Vec<f64>>,
    /// `beta * E_{s0}[V_0(s0)]`
    pub objective: f64,
}

/// Backward induction of the multiplicative recursion
/// `V_k(s) = sum_a pi(a|s) e^{beta r(s,a)} sum_s' P(s'|s,a) V_{k+1}(s')`.
pub fn multiplicative_bellman_solve(
    mdp: &TinyMdp,
    policy: &CategoricalPolicy,
    beta: f64,
) -> Result<BellmanSolution> {
    if mdp.gamma() != 1.0 {
        return Err(Error::Config(
            "the multiplicative recursion is only well-posed here for gamma = 1 (finite horizon); \
             with discounting the continuation term has no unambiguous exponential form"
                .into(),
        ));
    }
    if beta == 0.0 {
        return Err(Error::Config("beta must be non-zero".into()));
    }
    let pi = policy_table(mdp, policy)?;
    let (n, h) = (mdp.n_states(), mdp.horizon());
    let mut values = vec![vec![1.0; n]; h + 1];
    for k in (0..h).rev() {
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            let mut v = 0.0;
            for (a, &pa) in pi[s].iter().enumerate() {
                let cont: f64 = mdp
                    .transition_row(s, a)
                    .iter()
                    .zip(&values[k + 1])
                    .map(|(p, v)| p * v)
                    .sum();
                v += pa * (beta * mdp.reward(s, a)).exp() * cont;
            }
            values[k][s] = v;
        }
    }
    let objective = beta * mdp.initial().iter().zip(&values[0]).map(|(p, v)| p * v).sum::<f64>();
    Ok(BellmanSolution { values, objective })
}

/// Risk-neutral stage values `V_k(s) = E[R_k | s_k = s]` by backward induction.
pub fn risk_neutral_values(mdp: &TinyMdp, policy: &CategoricalPolicy) -> Result<Vec<Vec<f64>>> {
    let pi = policy_table(mdp, policy)?;
    let (n, h) = (mdp.n_states(), mdp.horizon());
    let mut values = vec![vec![0.0; n]; h + 1];
    for k in (0..h).rev() {
        for s in 0..n {
            if mdp.is_terminal(s) {
                continue;
            }
            values[k][s] = pi[s]
                .iter()
                .enumerate()
                .map(|(a, pa)| {
                    let cont: f64 = mdp
                        .transition_row(s, a)
                        .iter()
                        .zip(&values[k + 1])
                        .map(|(p, v)| p * v)
                        .sum();
                    pa * (mdp.reward(s, a) + mdp.gamma() * cont)
                })
                .sum();
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{finite_diff_grad, Matrix, Mlp, MlpDims, Rng};

    fn policy_for(mdp: &TinyMdp, rng: &mut Rng) -> CategoricalPolicy {
        CategoricalPolicy::random(mdp.n_states(), 4, mdp.n_actions(), rng).unwrap()
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = Rng::new(3);
        let mdp = TinyMdp::random(&mut rng, 3, 2, 4, 1.0, (0.0, 1.0)).unwrap();
        let pi = policy_for(&mdp, &mut rng);
        let total: f64 = enumerate_trajectories(&mdp, &pi).unwrap().iter().map(|t| t.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_single_trajectory() {
        // Two states, action-independent deterministic cycle 0 -> 1 -> 0.
        let mdp = TinyMdp::new(
            2,
            2,
            vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0],
            vec![0.5, 0.5, 2.0, 2.0],
            vec![1.0, 0.0],
            vec![false, false],
            3,
            1.0,
        )
        .unwrap();
        let mut rng = Rng::new(0);
        let pi = policy_for(&mdp, &mut rng);
        let beta = -0.3;
        let (j, _) = enumerate_objective(&mdp, &pi, Criterion::Exponential { beta }).unwrap();
        let r = 0.5 + 2.0 + 0.5;
        assert!((j - beta * (beta * r).exp()).abs() < 1e-14);
    }

    #[test]
    fn bandit_closed_form() {
        let mdp = TinyMdp::bandit(&[1.0, 0.0]).unwrap();
        let w1 = Matrix::zeros(2, 1);
        let w2 = Matrix::zeros(2, 2);
        let logits = [0.4, -0.3];
        let pi = CategoricalPolicy::new(Mlp::from_layers(&w1, &[0.0, 0.0], &w2, &logits).unwrap()).unwrap();
        let (j, g) = enumerate_objective(&mdp, &pi, Criterion::RiskNeutral).unwrap();
        let sigma = 1.0 / (1.0 + (-(0.4f64 + 0.3)).exp());
        assert!((j - sigma).abs() < 1e-15);
        // only the output biases affect pi here; dsigma/db2 = ±sigma(1 - sigma)
        let n = g.len();
        assert!((g[n - 2] - sigma * (1.0 - sigma)).abs() < 1e-15);
        assert!((g[n - 1] + sigma * (1.0 - sigma)).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(8);
        for criterion in [Criterion::RiskNeutral, Criterion::Exponential { beta: 0.7 }, Criterion::Exponential { beta: -1.1 }] {
            let mdp = TinyMdp::random(&mut rng, 3, 2, 3, 0.9, (-1.0, 1.0)).unwrap();
            let pi = policy_for(&mdp, &mut rng);
            let dims = pi.net().dims();
            let (_, g) = enumerate_objective(&mdp, &pi, criterion).unwrap();
            let fd = finite_diff_grad(
                |t| {
                    let p = CategoricalPolicy::new(Mlp::from_params(dims, t.clone()).unwrap()).unwrap();
                    enumerate_objective(&mdp, &p, criterion).unwrap().0
                },
                pi.params(),
                1e-5,
            );
            for (a, b) in g.iter().zip(fd.iter()) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bellman_matches_enumeration() {
        let mut rng = Rng::new(12);
        for _ in 0..10 {
            let mdp = TinyMdp::random(&mut rng, 4, 3, 4, 1.0, (-1.0, 1.0)).unwrap();
            let pi = policy_for(&mdp, &mut rng);
            let beta = rng.uniform_range(-1.0, 1.0);
            let (j, _) = enumerate_objective(&mdp, &pi, Criterion::Exponential { beta }).unwrap();
            let sol = multiplicative_bellman_solve(&mdp, &pi, beta).unwrap();
            assert!(((sol.objective - j) / j).abs() < 1e-12);
        }
    }

    #[test]
    fn bellman_zero_rewards_and_one_stage() {
        let mut rng = Rng::new(2);
        let mut mdp = TinyMdp::random(&mut rng, 3, 2, 3, 1.0, (0.0, 0.0)).unwrap();
        let pi = policy_for(&mdp, &mut rng);
        let sol = multiplicative_bellman_solve(&mdp, &pi, 0.4).unwrap();
        assert!(sol.values.iter().flatten().all(|v| (v - 1.0).abs() < 1e-15));
        assert!((sol.objective - 0.4).abs() < 1e-15);

        mdp = TinyMdp::random(&mut rng, 3, 2, 1, 1.0, (-1.0, 1.0)).unwrap();
        let sol = multiplicative_bellman_solve(&mdp, &pi, -0.5).unwrap();
        for s in 0..3 {
            let p = pi.probabilities(&mdp.one_hot(s)).unwrap();
            let v: f64 = (0..2).map(|a| p[a] * (-0.5 * mdp.reward(s, a)).exp()).sum();
            assert!((sol.values[0][s] - v).abs() < 1e-15);
        }
    }

    #[test]
    fn bellman_rejects_discounting() {
        let mut rng = Rng::new(2);
        let mdp = TinyMdp::random(&mut rng, 2, 2, 2, 0.9, (0.0, 1.0)).unwrap();
        let pi = policy_for(&mdp, &mut rng);
        assert!(matches!(multiplicative_bellman_solve(&mdp, &pi, 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn risk_neutral_values_match_enumeration() {
        let mut rng = Rng::new(21);
        let mdp = TinyMdp::random(&mut rng, 3, 2, 4, 0.8, (-1.0, 1.0)).unwrap();
        let pi = policy_for(&mdp, &mut rng);
        let v = risk_neutral_values(&mdp, &pi).unwrap();
        let (j, _) = enumerate_objective(&mdp, &pi, Criterion::RiskNeutral).unwrap();
        let from_values: f64 = mdp.initial().iter().zip(&v[0]).map(|(p, v)| p * v).sum();
        assert!((j - from_values).abs() < 1e-12);
    }

    #[test]
    fn budget_guard() {
        let mut rng = Rng::new(0);
        let mdp = TinyMdp::random(&mut rng, 8, 3, 6, 1.0, (0.0, 1.0)).unwrap();
        let pi = CategoricalPolicy::random(8, 2, 3, &mut rng).unwrap();
        assert!(matches!(enumerate_trajectories(&mdp, &pi), Err(Error::Budget { .. })));
        let wrong = CategoricalPolicy::new(Mlp::zeros(MlpDims::new(2, 2, 3)).unwrap()).unwrap();
        assert!(enumerate_trajectories(&mdp, &wrong).is_err());
    }
}
