//! Adam optimizer with decoupled decay flags.

use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to the gradient of decay-flagged parameters.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.001,
        }
    }
}

/// First/second moment estimates, laid out parallel to the [`ParamSet`].
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub step: u64,
    pub(crate) m: Vec<Tensor>,
    pub(crate) v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, params: &ParamSet) -> Self {
        let m = params
            .iter()
            .map(|(_, p)| Tensor::zeros(p.value.shape().to_vec()))
            .collect::<Vec<_>>();
        let v = m.clone();
        AdamState {
            cfg,
            step: 0,
            m,
            v,
        }
    }

    /// One Adam update over every parameter, then clear gradients.
    ///
    /// The L2 term `decay * value` joins the raw gradient before the moment
    /// update, so decay passes through the same adaptive scaling as the loss
    /// gradient. A non-finite gradient aborts before any value changes.
    pub fn apply(&mut self, params: &mut ParamSet) -> Result<()> {
        for (_, p) in params.iter() {
            if !p.grad.is_finite() {
                return Err(Error::NonFiniteGrad {
                    param: p.name.clone(),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (id, p) in params.iter_mut() {
            let m = self.m[id.index()].data_mut();
            let v = self.v[id.index()].data_mut();
            let decay = if p.decay { c.weight_decay } else { 0.0 };
            let value = p.value.data_mut();
            let grad = p.grad.data_mut();
            for i in 0..value.len() {
                let g = grad[i] + decay * value[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                grad[i] = 0.0;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn scalar_param(value: f64, decay: bool) -> (ParamSet, crate::numerics::ParamId) {
        let mut ps = ParamSet::new();
        let id = ps.register("w", Tensor::scalar(value), decay);
        (ps, id)
    }

    #[test]
    fn zero_grad_no_decay_is_identity() {
        let (mut ps, id) = scalar_param(3.5, false);
        let mut adam = AdamState::new(AdamConfig::default(), &ps);
        adam.apply(&mut ps).unwrap();
        assert_eq!(ps.value(id).data()[0], 3.5);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        // Bias correction makes the first Adam step exactly -lr * sign(g),
        // up to the eps regularizer.
        let (mut ps, id) = scalar_param(0.0, false);
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(cfg, &ps);
        ps.get_mut(id).grad.data_mut()[0] = 1.0;
        adam.apply(&mut ps).unwrap();
        assert!((ps.value(id).data()[0] + 0.1).abs() < 1e-8);
        // Gradient cleared by the step.
        assert_eq!(ps.get(id).grad.data()[0], 0.0);
    }

    #[test]
    fn decay_alone_shrinks_toward_zero() {
        let (mut ps, id) = scalar_param(1.0, true);
        let mut adam = AdamState::new(
            AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
            &ps,
        );
        adam.apply(&mut ps).unwrap();
        let after = ps.value(id).data()[0];
        assert!(after < 1.0 && after > 0.0);
    }

    #[test]
    fn non_finite_gradient_aborts_without_mutation() {
        let (mut ps, id) = scalar_param(2.0, false);
        let mut adam = AdamState::new(AdamConfig::default(), &ps);
        ps.get_mut(id).grad.data_mut()[0] = f64::NAN;
        match adam.apply(&mut ps) {
            Err(Error::NonFiniteGrad { param }) => assert_eq!(param, "w"),
            other => panic!("expected non-finite gradient error, got {other:?}"),
        }
        assert_eq!(ps.value(id).data()[0], 2.0);
        assert_eq!(adam.step, 0);
    }

    #[test]
    fn two_steps_match_hand_recurrence() {
        let (mut ps, id) = scalar_param(0.0, false);
        let cfg = AdamConfig {
            lr: 0.1,
            eps: 0.0,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(cfg, &ps);
        // Constant gradient 2.0 for both steps; track the recurrence by hand.
        let (b1, b2) = (0.9, 0.999);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut w = 0.0;
        for t in 1..=2 {
            ps.get_mut(id).grad.data_mut()[0] = 2.0;
            adam.apply(&mut ps).unwrap();
            m = b1 * m + (1.0 - b1) * 2.0;
            v = b2 * v + (1.0 - b2) * 4.0;
            let m_hat = m / (1.0 - b1f(t, b1));
            let v_hat = v / (1.0 - b1f(t, b2));
            w -= 0.1 * m_hat / v_hat.sqrt();
        }
        assert!((ps.value(id).data()[0] - w).abs() < 1e-12);
    }

    fn b1f(t: u64, b: f64) -> f64 {
        b.powi(t as i32)
    }
}
