//! Two-layer Q-network, action selection, and the exploration schedule.

use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamId, ParamSet, Tensor, Var};
use crate::rng::Rng;
use rand::Rng as _;

/// Fixed-output head: state in, K action values out, tanh between layers.
#[derive(Debug, Clone)]
pub struct QNetwork {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub in_width: usize,
    pub hidden: usize,
    pub k: usize,
}

impl QNetwork {
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        in_width: usize,
        hidden: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if k == 0 || in_width == 0 || hidden == 0 {
            return Err(Error::Contract("q-network dimensions must be positive".into()));
        }
        let scale = 1.0 / (hidden as f64).sqrt();
        Ok(QNetwork {
            w1: ps.register_normal(&format!("{name}.w1"), vec![hidden, in_width], scale, rng, true),
            b1: ps.register_zeros(&format!("{name}.b1"), vec![hidden, 1], false),
            w2: ps.register_normal(&format!("{name}.w2"), vec![k, hidden], scale, rng, true),
            b2: ps.register_zeros(&format!("{name}.b2"), vec![k, 1], false),
            in_width,
            hidden,
            k,
        })
    }

    /// Differentiable forward for training.
    pub fn forward(&self, g: &mut Graph, ps: &ParamSet, s: Var) -> Result<Var> {
        let w1 = g.param(ps, self.w1);
        let b1 = g.param(ps, self.b1);
        let w2 = g.param(ps, self.w2);
        let b2 = g.param(ps, self.b2);
        let pre1 = g.matmul(w1, s)?;
        let pre1 = g.add(pre1, b1)?;
        let h = g.tanh(pre1);
        let pre2 = g.matmul(w2, h)?;
        g.add(pre2, b2)
    }

    /// Plain evaluation for action selection and TD targets (no tape).
    pub fn values(&self, ps: &ParamSet, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.in_width {
            return Err(Error::Shape {
                op: "q_values",
                lhs: vec![self.in_width],
                rhs: vec![s.len()],
            });
        }
        let sv = Tensor::vector(s.to_vec());
        let mut h = ps.value(self.w1).matmul(&sv)?;
        for (v, b) in h.data_mut().iter_mut().zip(ps.value(self.b1).data()) {
            *v = (*v + b).tanh();
        }
        let mut out = ps.value(self.w2).matmul(&h)?;
        for (v, b) in out.data_mut().iter_mut().zip(ps.value(self.b2).data()) {
            *v += b;
        }
        Ok(out.data().to_vec())
    }
}

/// Argmax with lowest-index tie-breaking.
pub fn greedy_action(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy over the Q-values of `s`.
pub fn select_action(
    net: &QNetwork,
    ps: &ParamSet,
    s: &[f64],
    eps: f64,
    rng: &mut Rng,
) -> Result<usize> {
    debug_assert!((0.0..=1.0).contains(&eps));
    if rng.gen::<f64>() < eps {
        return Ok(rng.gen_range(0..net.k));
    }
    Ok(greedy_action(&net.values(ps, s)?))
}

/// Linear decay from `start` to `floor` over `decay_steps`, then constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSchedule {
    pub start: f64,
    pub floor: f64,
    pub decay_steps: u64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            start: 0.1,
            floor: 0.01,
            decay_steps: 1,
        }
    }
}

impl EpsSchedule {
    /// Decay spread over the first half of a `max_steps` run.
    pub fn over_half(start: f64, floor: f64, max_steps: u64) -> Self {
        EpsSchedule {
            start,
            floor,
            decay_steps: (max_steps / 2).max(1),
        }
    }

    pub fn eps(&self, step: u64) -> f64 {
        let frac = (step as f64 / self.decay_steps as f64).min(1.0);
        self.start + (self.floor - self.start) * frac
    }
}
