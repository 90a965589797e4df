//! Risk-theoretic kernel: exponential-criterion evaluation, free energy and
//! KL duality, lower-tail VaR/CVaR, and exhaustive oracles on tiny MDPs.

mod duality;
mod oracle;
mod stats;
mod tiny_mdp;

pub use duality::{
    duality_check, free_energy, gibbs_tilt, kl_divergence, variational_value, DualityReport, FiniteDist,
};
pub use oracle::{
    enumerate_objective, enumerate_trajectories, enumeration_cost, multiplicative_bellman_solve,
    risk_neutral_values, trajectory_expectation, BellmanSolution, Criterion, ExactTrajectory, ScoreTable,
    ENUMERATION_BUDGET,
};
pub use stats::{risk_report, RiskReport};
pub use tiny_mdp::{TinyMdp, MAX_ACTIONS, MAX_HORIZON, MAX_STATES};

/// Exponential objective `beta * mean(exp(beta R))` over return samples.
pub fn exponential_objective(beta: f64, returns: &[f64]) -> f64 {
    beta * returns.iter().map(|r| (beta * r).exp()).sum::<f64>() / returns.len() as f64
}

/// Empirical `(1/beta) log mean(exp(beta R))`; the sample mean at `beta = 0`.
pub fn log_exp_objective(beta: f64, returns: &[f64]) -> crate::Result<f64> {
    let p = FiniteDist::uniform(returns.len())?;
    free_energy(beta, returns, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_exp_objective_brackets_mean() {
        let r = [1.0, 5.0, 9.0];
        let mean = 5.0;
        assert!(log_exp_objective(-0.1, &r).unwrap() < mean);
        assert!(log_exp_objective(0.1, &r).unwrap() > mean);
        assert_eq!(log_exp_objective(0.0, &r).unwrap(), mean);
    }

    #[test]
    fn small_beta_moment_expansion() {
        // beta E[e^{beta R}] = beta + beta^2 E[R] + beta^3/2 E[R^2] + O(beta^4)
        let r = [0.5, -1.0, 2.0, 1.5];
        let m1 = r.iter().sum::<f64>() / 4.0;
        let m2 = r.iter().map(|x| x * x).sum::<f64>() / 4.0;
        let m3 = r.iter().map(|x| x * x * x).sum::<f64>() / 4.0;
        for beta in [1e-2, -1e-2, 3e-3, -3e-3] {
            let lhs = exponential_objective(beta, &r);
            let series = beta + beta * beta * m1 + beta.powi(3) / 2.0 * m2;
            let next = (beta.powi(4) / 6.0 * m3).abs();
            assert!((lhs - series).abs() <= 2.0 * next + 1e-18);
        }
    }

    proptest! {
        #[test]
        fn free_energy_nondecreasing_in_beta(
            z in proptest::collection::vec(-5.0f64..5.0, 2..6),
            seed in 0u64..1000,
        ) {
            let mut rng = crate::numkit::Rng::new(seed);
            let w: Vec<f64> = z.iter().map(|_| rng.uniform() + 0.01).collect();
            let p = FiniteDist::from_weights(&w).unwrap();
            let betas: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
            let vals: Vec<f64> = betas.iter().map(|b| free_energy(*b, &z, &p).unwrap()).collect();
            for pair in vals.windows(2) {
                prop_assert!(pair[1] >= pair[0] - 1e-12);
            }
        }
    }
}
