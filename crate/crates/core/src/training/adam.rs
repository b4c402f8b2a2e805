use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dense, Params};

/// Anything exposing its parameters as a fixed list of flat slices.
pub trait ParamSet {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;
}

impl ParamSet for Params {
    fn slices(&self) -> Vec<&[f64]> {
        Params::slices(self)
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        Params::slices_mut(self)
    }
}

impl ParamSet for Dense {
    fn slices(&self) -> Vec<&[f64]> {
        vec![self.weight.data(), &self.bias]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weight.data_mut(), &mut self.bias]
    }
}

impl ParamSet for Vec<f64> {
    fn slices(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment accumulators mirroring a [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new<P: ParamSet + ?Sized>(params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self { m: zeros.clone(), v: zeros, step: 0 }
    }
}

/// One bias-corrected Adam update applied element-wise.
pub fn adam_step<P: ParamSet + ?Sized>(
    params: &mut P,
    grads: &P,
    state: &mut OptimizerState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    let grads = grads.slices();
    let mut params = params.slices_mut();
    if params.len() != grads.len()
        || params.len() != state.m.len()
        || params.iter().zip(&grads).zip(&state.m).any(|((p, g), m)| p.len() != g.len() || p.len() != m.len())
    {
        return Err(Error::Dimension("Adam parameter, gradient and state shapes differ".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for ((p, g), (m, v)) in params.iter_mut().zip(&grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_first_step_is_noop() {
        let mut p = vec![1.0, -2.0, 3.0];
        let g = vec![0.0; 3];
        let mut s = OptimizerState::new(&p);
        adam_step(&mut p, &g, &mut s, 1e-3, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0];
        let mut s = OptimizerState::new(&p);
        adam_step(&mut p, &vec![1.0], &mut s, 1e-3, &AdamConfig::default()).unwrap();
        assert!((p[0] + 1e-3).abs() < 1e-10, "{}", p[0]);
    }

    #[test]
    fn two_steps_match_hand_recurrence() {
        let cfg = AdamConfig::default();
        let (lr, g) = (0.01, 0.5);
        let mut p = vec![0.3];
        let mut s = OptimizerState::new(&p);
        adam_step(&mut p, &vec![g], &mut s, lr, &cfg).unwrap();
        adam_step(&mut p, &vec![g], &mut s, lr, &cfg).unwrap();

        let (mut x, mut m, mut v) = (0.3f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            x -= lr * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p[0] - x).abs() < 1e-12);
        assert_eq!(s.step, 2);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![0.0, 1.0];
        let mut s = OptimizerState::new(&p);
        assert!(adam_step(&mut p, &vec![1.0], &mut s, 1e-3, &AdamConfig::default()).is_err());
    }
}
