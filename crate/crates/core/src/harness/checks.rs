//! Self-checks behind `exprl oracle`: each compares a library routine with an
//! independent oracle on randomized instances.

use serde::Serialize;

use crate::error::Result;
use crate::numkit::{finite_diff_grad, max_relative_error, Mlp, MlpDims, ParamVector, Rng};
use crate::policy::{CategoricalPolicy, ValueFunction};
use crate::riskmath::{
    duality_check, enumerate_objective, enumeration_cost, multiplicative_bellman_solve, Criterion, FiniteDist,
    TinyMdp,
};

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const DUALITY_GAP_TOLERANCE: f64 = 1e-10;
pub const DUALITY_EXCESS_TOLERANCE: f64 = 1e-9;
pub const BELLMAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: &'static str,
    pub instances: usize,
    /// Worst error over all instances.
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<(String, f64)>,
}

/// The four trained architectures: (name, input, hidden, outputs).
pub const ARCHITECTURES: [(&str, usize, usize, usize); 4] = [
    ("cartpole_policy", 4, 16, 2),
    ("cartpole_value", 4, 16, 1),
    ("acrobot_policy", 6, 256, 3),
    ("acrobot_value", 6, 256, 1),
];

fn perturbed_net(dims: MlpDims, rng: &mut Rng) -> Result<Mlp> {
    let mut net = Mlp::random(dims, rng)?;
    // push the biases away from zero so rectifier kinks are not all at x = 0
    for p in net.params_mut().iter_mut() {
        *p += 0.1 * rng.standard_normal();
    }
    Ok(net)
}

/// True when no single-coordinate step of size `h` can move a hidden
/// pre-activation across zero, so central differences see a smooth function.
pub fn kink_free(net: &Mlp, x: &[f64], h: f64) -> bool {
    let d = net.dims();
    let margin = h * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..d.hidden).all(|k| {
        let pre = net.b1()[k] + crate::numkit::dot(&net.w1()[k * d.input..(k + 1) * d.input], x);
        pre.abs() > margin
    })
}

/// Analytic score and value gradients against central differences,
/// `probes` random (parameters, input) pairs per architecture. Pairs with a
/// rectifier kink inside the difference step are redrawn.
pub fn gradcheck(probes: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = Rng::new(seed);
    let mut details = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, input, hidden, output) in ARCHITECTURES {
        let dims = MlpDims::new(input, hidden, output);
        let mut arch_worst: f64 = 0.0;
        let mut redrawn = 0;
        for _ in 0..probes {
            let (net, x) = loop {
                let net = perturbed_net(dims, &mut rng)?;
                let x: Vec<f64> = (0..input).map(|_| rng.standard_normal()).collect();
                if kink_free(&net, &x, GRADCHECK_STEP) {
                    break (net, x);
                }
                redrawn += 1;
            };
            let err = if output == 1 {
                let v = ValueFunction::new(net)?;
                let (_, g) = v.value_and_grad(&x)?;
                let fd = finite_diff_grad(
                    |th: &ParamVector| {
                        ValueFunction::new(Mlp::from_params(dims, th.clone()).expect("dims"))
                            .and_then(|v| v.value(&x))
                            .expect("finite value")
                    },
                    v.params(),
                    GRADCHECK_STEP,
                );
                max_relative_error(&g, &fd)
            } else {
                let pol = CategoricalPolicy::new(net)?;
                let a = rng.categorical(&vec![1.0; output]);
                let g = pol.log_prob_grad(&x, a)?;
                let fd = finite_diff_grad(
                    |th: &ParamVector| {
                        CategoricalPolicy::new(Mlp::from_params(dims, th.clone()).expect("dims"))
                            .and_then(|p| p.log_prob(&x, a))
                            .expect("finite log-probability")
                    },
                    pol.params(),
                    GRADCHECK_STEP,
                );
                max_relative_error(&g, &fd)
            };
            arch_worst = arch_worst.max(err);
        }
        worst = worst.max(arch_worst);
        details.push((name.to_string(), arch_worst));
        details.push((format!("{name}_redrawn"), redrawn as f64));
    }
    Ok(CheckReport {
        check: "gradcheck",
        instances: probes * ARCHITECTURES.len(),
        worst,
        tolerance: GRADCHECK_TOLERANCE,
        pass: worst < GRADCHECK_TOLERANCE,
        details,
    })
}

/// Free-energy duality on random (P, Z, beta), alternating the sign of beta.
/// `worst` is the largest gap; the search excess is reported in `details`.
pub fn duality_suite(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = Rng::new(seed);
    let mut worst_gap: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..instances {
        let n = 2 + (rng.next_u64() % 7) as usize;
        let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        if i % 4 == 3 {
            w[0] = 0.0;
        }
        let p = FiniteDist::from_weights(&w)?;
        let z: Vec<f64> = (0..n).map(|_| rng.uniform_range(-5.0, 5.0)).collect();
        let mag = rng.uniform_range(0.01, 2.0);
        let beta = if i % 2 == 0 { mag } else { -mag };
        let rep = duality_check(beta, &z, &p, &mut rng, 200)?;
        worst_gap = worst_gap.max(rep.gap);
        worst_excess = worst_excess.max(rep.max_candidate_excess);
    }
    Ok(CheckReport {
        check: "duality",
        instances,
        worst: worst_gap,
        tolerance: DUALITY_GAP_TOLERANCE,
        pass: worst_gap < DUALITY_GAP_TOLERANCE && worst_excess <= DUALITY_EXCESS_TOLERANCE,
        details: vec![("max_candidate_excess".into(), worst_excess)],
    })
}

/// Random undiscounted tiny MDP with a random one-hot policy network.
pub fn random_instance(rng: &mut Rng, max_horizon: usize) -> Result<(TinyMdp, CategoricalPolicy)> {
    loop {
        let s = 2 + (rng.next_u64() % 3) as usize;
        let a = 2 + (rng.next_u64() % 2) as usize;
        let h = 1 + (rng.next_u64() % max_horizon as u64) as usize;
        let mdp = TinyMdp::random(rng, s, a, h, 1.0, (-1.0, 1.0))?;
        if enumeration_cost(&mdp) > 2e5 {
            continue;
        }
        let mut net = Mlp::random(MlpDims::new(s, 4, a), rng)?;
        for p in net.params_mut().iter_mut() {
            *p += 0.5 * rng.standard_normal();
        }
        return Ok((mdp, CategoricalPolicy::new(net)?));
    }
}

/// Backward induction of the multiplicative recursion against exhaustive enumeration.
pub fn bellman_suite(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let (mdp, policy) = random_instance(&mut rng, 5)?;
        let mag = rng.uniform_range(0.05, 1.0);
        let beta = if i % 2 == 0 { mag } else { -mag };
        let bell = multiplicative_bellman_solve(&mdp, &policy, beta)?.objective;
        let (enumerated, _) = enumerate_objective(&mdp, &policy, Criterion::Exponential { beta })?;
        worst = worst.max((bell - enumerated).abs() / enumerated.abs());
    }
    Ok(CheckReport {
        check: "bellman",
        instances,
        worst,
        tolerance: BELLMAN_TOLERANCE,
        pass: worst <= BELLMAN_TOLERANCE,
        details: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let g = gradcheck(2, 1).unwrap();
        assert!(g.pass, "{g:?}");
        assert_eq!(g.details.len(), 8);
        assert!(duality_suite(10, 2).unwrap().pass);
        assert!(bellman_suite(5, 3).unwrap().pass);
    }

    #[test]
    fn report_serializes() {
        let r = bellman_suite(1, 0).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["check"], "bellman");
        assert!(v.get("details").is_none());
    }
}
