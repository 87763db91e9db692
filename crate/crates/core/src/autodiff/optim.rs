//! AdamW with decoupled weight decay and the cosine annealing schedule.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::tensor::{GradMap, ParamStore};

#[derive(Debug, Clone)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-4 }
    }
}

/// Per-parameter first/second moments plus the shared step count.
#[derive(Debug, Clone, Default)]
pub struct AdamWState {
    pub moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
    pub step: u64,
}

impl AdamWState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One AdamW step. Decoupled decay shrinks the parameters before the moment
/// update is applied; missing gradients are treated as zero.
pub fn adamw_step(
    state: &mut AdamWState,
    params: &mut ParamStore,
    grads: &GradMap,
    cfg: &AdamWConfig,
    lr: f64,
) -> Result<()> {
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);

    for (name, arr) in params.iter_mut() {
        let zero;
        let g = match grads.get(name) {
            Some(g) => {
                if g.len() != arr.len() {
                    return Err(Error::Shape(format!(
                        "gradient for {name} has {} values, parameter has {}",
                        g.len(),
                        arr.len()
                    )));
                }
                g
            }
            None => {
                zero = vec![0.0; arr.len()];
                &zero
            }
        };
        let (m, v) = state
            .moments
            .entry(name.clone())
            .or_insert_with(|| (vec![0.0; arr.len()], vec![0.0; arr.len()]));
        if cfg.weight_decay != 0.0 {
            let shrink = 1.0 - lr * cfg.weight_decay;
            for p in arr.data.iter_mut() {
                *p *= shrink;
            }
        }
        for i in 0..arr.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            arr.data[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// Cosine annealing: lr(t) = η_min + (lr0 − η_min)(1 + cos(π·min(t,T)/T))/2.
#[derive(Debug, Clone, Copy)]
pub struct CosineSchedule {
    pub lr0: f64,
    pub t_max: u64,
    pub eta_min: f64,
}

impl CosineSchedule {
    /// Schedule with η_min = 0.01·lr0 and T_max = half the epoch budget.
    pub fn standard(lr0: f64, total_epochs: u64) -> Self {
        CosineSchedule { lr0, t_max: (total_epochs / 2).max(1), eta_min: 0.01 * lr0 }
    }

    pub fn lr_at(&self, epoch: u64) -> f64 {
        let t = epoch.min(self.t_max) as f64;
        self.eta_min
            + (self.lr0 - self.eta_min)
                * (1.0 + (std::f64::consts::PI * t / self.t_max as f64).cos())
                / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Arr;

    #[test]
    fn zero_gradients_no_decay_leave_params() {
        let mut params = ParamStore::new();
        params.insert("w".into(), Arr::from_vec(1, 3, vec![1.0, -2.0, 0.5]));
        let mut state = AdamWState::new();
        let cfg = AdamWConfig { weight_decay: 0.0, ..Default::default() };
        let grads = GradMap::new();
        adamw_step(&mut state, &mut params, &grads, &cfg, cfg.lr).unwrap();
        assert_eq!(params["w"].data, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let mut params = ParamStore::new();
        params.insert("w".into(), Arr::scalar(0.7));
        let mut state = AdamWState::new();
        let cfg = AdamWConfig { lr: 1e-3, weight_decay: 0.01, ..Default::default() };
        let mut grads = GradMap::new();
        let g = 0.3;
        grads.insert("w".into(), vec![g]);
        adamw_step(&mut state, &mut params, &grads, &cfg, cfg.lr).unwrap();

        // Hand evaluation of the same update.
        let mut w = 0.7 * (1.0 - 1e-3 * 0.01);
        let m = (1.0 - 0.9) * g;
        let v = (1.0 - 0.999) * g * g;
        let m_hat = m / (1.0 - 0.9f64);
        let v_hat = v / (1.0 - 0.999f64);
        w -= 1e-3 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((params["w"].data[0] - w).abs() < 1e-15);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let s = CosineSchedule::standard(1e-4, 50);
        assert_eq!(s.t_max, 25);
        assert!((s.lr_at(0) - 1e-4).abs() < 1e-18);
        assert!((s.lr_at(25) - 1e-6).abs() < 1e-18);
        assert!((s.lr_at(40) - 1e-6).abs() < 1e-18); // clamped past T_max
        // halfway: mean of lr0 and eta_min plus the cosine term at π/2 = 0.
        let mid = s.lr_at(12);
        assert!(mid < 1e-4 && mid > 1e-6);
    }

    #[test]
    fn deterministic_updates() {
        let run = || {
            let mut params = ParamStore::new();
            params.insert("w".into(), Arr::from_vec(1, 2, vec![0.1, 0.2]));
            let mut state = AdamWState::new();
            let cfg = AdamWConfig::default();
            for step in 0..10 {
                let mut grads = GradMap::new();
                grads.insert("w".into(), vec![0.01 * step as f64, -0.02]);
                adamw_step(&mut state, &mut params, &grads, &cfg, cfg.lr).unwrap();
            }
            params["w"].data.clone()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }
}
