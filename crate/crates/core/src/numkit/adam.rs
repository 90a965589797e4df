use serde::{Deserialize, Serialize};

use super::ParamVector;
use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Moment estimates for the bias-corrected Adam update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self::with_constants(len, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS)
    }

    pub fn with_constants(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step_count: 0,
            beta1,
            beta2,
            eps,
        }
    }
}

/// One Adam descent step: `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
///
/// A gradient with any non-finite entry is refused and leaves both `params`
/// and `state` untouched.
pub fn adam_step(
    params: &mut ParamVector,
    grad: &[f64],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if grad.len() != params.len() {
        return Err(Error::dim("adam_step grad", params.len(), grad.len()));
    }
    if state.m.len() != params.len() {
        return Err(Error::dim("adam_step state", params.len(), state.m.len()));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("non-finite gradient; Adam step refused".into()));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2) = (state.beta1, state.beta2);
    for (((p, &g), m), v) in params
        .as_mut_slice()
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_everything() {
        let mut p = ParamVector::from(vec![1.0, -2.0]);
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        assert_eq!(p.as_slice(), &[1.0, -2.0]);
        assert_eq!(s.m, vec![0.0, 0.0]);
        assert_eq!(s.v, vec![0.0, 0.0]);
        assert_eq!(s.step_count, 1);
    }

    #[test]
    fn first_step_is_lr_sized() {
        // m_hat = v_hat = 1 after bias correction, so the step is lr / (1 + eps).
        let mut p = ParamVector::from(vec![0.0]);
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, 0.1).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_refused() {
        let mut p = ParamVector::from(vec![0.5]);
        let mut s = AdamState::new(1);
        let err = adam_step(&mut p, &[f64::NAN], &mut s, 0.1);
        assert!(matches!(err, Err(Error::Numerical(_))));
        assert_eq!(p[0], 0.5);
        assert_eq!(s.step_count, 0);
    }

    #[test]
    fn bad_lr_and_lengths() {
        let mut p = ParamVector::from(vec![0.5]);
        let mut s = AdamState::new(1);
        assert!(adam_step(&mut p, &[1.0], &mut s, 0.0).is_err());
        assert!(adam_step(&mut p, &[1.0, 2.0], &mut s, 0.1).is_err());
    }

    #[test]
    fn repeated_runs_bit_identical() {
        let run = || {
            let mut rng = crate::numkit::Rng::new(77);
            let mut p = ParamVector::from(vec![0.0; 5]);
            let mut s = AdamState::new(5);
            for _ in 0..100 {
                let g: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
                adam_step(&mut p, &g, &mut s, 0.01).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = ParamVector::from(vec![3.0, -4.0]);
        let mut s = AdamState::new(2);
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            adam_step(&mut p, &g, &mut s, 0.05).unwrap();
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2));
    }
}
