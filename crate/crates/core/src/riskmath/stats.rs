//! Lower-tail risk statistics of trajectory returns.
//!
//! Returns are rewards, so the risky tail is the low end:
//! `VaR_p = inf { r : P(R <= r) > p }` and `CVaR_p = E[R | R <= VaR_p]`,
//! both evaluated on the empirical distribution with the strict inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub var_p: f64,
    pub cvar_p: f64,
    pub p: f64,
    pub n_samples: usize,
}

pub fn risk_report(samples: &[f64], p: f64) -> Result<RiskReport> {
    if samples.is_empty() {
        return Err(Error::Usage("risk report needs at least one sample".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("risk level p must lie in (0, 1), got {p}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite return sample".into()));
    }
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);

    // Walk distinct values; the CDF at a value counts every tied sample.
    let mut var_p = sorted[n - 1];
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == v {
            j += 1;
        }
        if j as f64 / n as f64 > p {
            var_p = v;
            break;
        }
        i = j;
    }
    let tail: Vec<f64> = sorted.iter().copied().take_while(|x| *x <= var_p).collect();
    let cvar_p = tail.iter().sum::<f64>() / tail.len() as f64;

    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(RiskReport {
        mean,
        std,
        var_p,
        cvar_p,
        p,
        n_samples: n,
    })
}
