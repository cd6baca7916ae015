//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_step_size(self, step_size: f64) -> Self {
        Self { step_size, ..self }
    }
}

/// First and second moment estimates of one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// Applies one Adam update at step `t` (1-based) in place.
///
/// # Panics
///
/// If the slices and state differ in length or `t == 0`.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    t: u64,
) {
    assert!(t >= 1, "Adam steps are counted from 1");
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    assert_eq!(params.len(), state.v.len());
    let t = t.min(i32::MAX as u64) as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= cfg.step_size * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let cfg = AdamConfig::default();
        let mut params = [1.0, -2.0];
        let mut state = AdamState {
            m: vec![0.5, -0.5],
            v: vec![0.1, 0.2],
        };
        adam_step(&mut params, &[0.0, 0.0], &mut state, &cfg, 3);
        // moments decay, parameters still move by the remaining momentum
        assert_eq!(state.m, vec![0.45, -0.45]);
        assert!((state.v[0] - 0.0999).abs() < 1e-15);

        let mut params = [1.0, -2.0];
        let mut state = AdamState::new(2);
        adam_step(&mut params, &[0.0, 0.0], &mut state, &cfg, 1);
        assert_eq!(params, [1.0, -2.0]);
        assert_eq!(state, AdamState::new(2));
    }

    #[test]
    fn first_step_moves_by_step_size() {
        // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
        let cfg = AdamConfig::default();
        for g in [3.0, -0.25, 1e-3] {
            let mut p = [0.0];
            let mut state = AdamState::new(1);
            adam_step(&mut p, &[g], &mut state, &cfg, 1);
            let expected = -cfg.step_size * g / (g.abs() + cfg.epsilon);
            assert!(
                (p[0] - expected).abs() < 1e-15,
                "{g}: {} vs {expected}",
                p[0]
            );
            assert!((p[0].abs() - cfg.step_size).abs() < 1e-7);
        }
    }

    #[test]
    fn pure_function_of_inputs() {
        let cfg = AdamConfig::default();
        let run = || {
            let mut p = vec![0.3, 0.7];
            let mut s = AdamState {
                m: vec![0.1, 0.0],
                v: vec![0.01, 0.02],
            };
            adam_step(&mut p, &[0.5, -1.0], &mut s, &cfg, 4);
            (p, s)
        };
        assert_eq!(run(), run());
    }
}
