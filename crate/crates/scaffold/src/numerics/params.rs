//! Named trainable parameters.
//!
//! Parameters live outside any one computation graph so several graphs
//! (per-sentence encoders, the Q-network, replayed transitions) can read the
//! same weights and accumulate into the same gradient buffers.

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::rng::Rng;
use rand_distr::{Distribution, Normal};

/// Stable index of a parameter inside its [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One trainable tensor plus its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// Weight matrices get L2 decay; biases and embeddings do not.
    pub decay: bool,
}

/// Registry of all trainable state for a model.
///
/// Registration order is the canonical parameter order for optimizers and
/// checkpoints, so it must be deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    params: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    /// Register a tensor initialized from `N(0, scale^2)`.
    pub fn register_normal(
        &mut self,
        name: &str,
        shape: Vec<usize>,
        scale: f64,
        rng: &mut Rng,
        decay: bool,
    ) -> ParamId {
        let count: usize = shape.iter().product();
        let dist = Normal::new(0.0, scale).expect("finite init scale");
        let data: Vec<f64> = (0..count).map(|_| dist.sample(rng)).collect();
        self.register(name, Tensor::new(shape, data).expect("consistent init shape"), decay)
    }

    /// Register a zero-initialized tensor (the usual choice for biases).
    pub fn register_zeros(&mut self, name: &str, shape: Vec<usize>, decay: bool) -> ParamId {
        self.register(name, Tensor::zeros(shape), decay)
    }

    pub fn register(&mut self, name: &str, value: Tensor, decay: bool) -> ParamId {
        debug_assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter name {name}"
        );
        let grad = Tensor::zeros(value.shape().to_vec());
        self.params.push(Parameter {
            name: name.to_string(),
            value,
            grad,
            decay,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &mut Parameter)> {
        self.params
            .iter_mut()
            .enumerate()
            .map(|(i, p)| (ParamId(i), p))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Add `g` into the gradient accumulator for `id`.
    pub fn accumulate_grad(&mut self, id: ParamId, g: &Tensor) -> Result<()> {
        let p = &mut self.params[id.0];
        if p.grad.shape() != g.shape() {
            return Err(Error::Shape {
                op: "accumulate_grad",
                lhs: p.grad.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
        for (acc, v) in p.grad.data_mut().iter_mut().zip(g.data().iter()) {
            *acc += v;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(0.0);
        }
    }

    /// Copy every value from `src` (used for target-network sync).
    /// Both sets must have identical layout.
    pub fn copy_values_from(&mut self, src: &ParamSet) -> Result<()> {
        if self.len() != src.len() {
            return Err(Error::Compatibility(format!(
                "parameter count mismatch: {} vs {}",
                self.len(),
                src.len()
            )));
        }
        for (dst, s) in self.params.iter_mut().zip(src.params.iter()) {
            if dst.value.shape() != s.value.shape() {
                return Err(Error::Compatibility(format!(
                    "parameter {} shape mismatch",
                    dst.name
                )));
            }
            dst.value.data_mut().copy_from_slice(s.value.data());
        }
        Ok(())
    }

    /// Total number of scalar weights.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}
