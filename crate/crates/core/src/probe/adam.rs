//! Adam with bias correction and decoupled weight decay.

use crate::head::ParamGroup;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            first_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
        }
    }
}

/// One optimizer update. Weight decay shrinks decayed groups by
/// `lr * wd * p` before the Adam delta is applied.
pub fn adam_step(
    params: &mut [ParamGroup<'_>],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    config: &AdamConfig,
) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient group count");
    assert_eq!(params.len(), state.first_moment.len(), "optimizer state group count");
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - config.beta1.powi(t);
    let c2 = 1.0 - config.beta2.powi(t);
    let lr = config.learning_rate;
    for (k, group) in params.iter_mut().enumerate() {
        let g = &grads[k];
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        assert_eq!(group.values.len(), g.len(), "gradient shape for group {k}");
        for i in 0..g.len() {
            if group.decay {
                group.values[i] -= lr * config.weight_decay * group.values[i];
            }
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            group.values[i] -= lr * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}
