//! Adam with bias correction and the step learning-rate schedule.

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64, cfg: AdamConfig) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powf(state.t as f64);
    let c2 = 1.0 - cfg.beta2.powf(state.t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= lr * mh / (vh.sqrt() + cfg.eps);
    }
}

/// `base * 0.2^(epoch / 5)`, epochs counted from zero.
pub fn lr_schedule(epoch: usize, base: f64) -> f64 {
    lr_schedule_with(epoch, base, 0.2, 5)
}

pub fn lr_schedule_with(epoch: usize, base: f64, factor: f64, every: usize) -> f64 {
    base * factor.powi((epoch / every.max(1)) as i32)
}
