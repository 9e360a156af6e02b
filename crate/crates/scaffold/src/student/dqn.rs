//! DQN update over stored numeric states, and target-network sync.
//!
//! This path trains the Q-head alone; the full-network recompute that also
//! trains the encoders lives with the model assembly in the harness. Both
//! share the target rule implemented here.

use crate::error::Result;
use crate::numerics::{AdamState, Graph, ParamSet, Var};
use crate::rng::Rng;
use crate::student::qnet::QNetwork;
use crate::student::replay::ReplayBuffer;

/// Loss is None when the buffer cannot fill a batch (reported, not an error).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnOutcome {
    pub loss: Option<f64>,
}

/// TD target: `r` for terminal transitions, else `r + γ max_a' Q_target(s')`.
pub fn td_target(
    net: &QNetwork,
    target: &ParamSet,
    r: f64,
    s_next: &[f64],
    terminal: bool,
    gamma: f64,
) -> Result<f64> {
    if terminal {
        return Ok(r);
    }
    let q_next = net.values(target, s_next)?;
    let best = q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(r + gamma * best)
}

/// Mean squared TD error over the taken actions of a uniform mini-batch,
/// followed by one Adam step on the online parameters.
pub fn dqn_update(
    buffer: &ReplayBuffer,
    net: &QNetwork,
    online: &mut ParamSet,
    target: &ParamSet,
    adam: &mut AdamState,
    gamma: f64,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<DqnOutcome> {
    if buffer.len() < batch_size {
        return Ok(DqnOutcome { loss: None });
    }
    let picks = buffer.sample_indices(batch_size, rng);
    let mut g = Graph::new();
    let mut errs: Vec<Var> = Vec::with_capacity(batch_size);
    for idx in picks {
        let tr = buffer.get(idx);
        let y = td_target(net, target, tr.r, &tr.s_next, tr.terminal, gamma)?;
        let sv = g.input_vector(tr.s.clone());
        let qv = net.forward(&mut g, online, sv)?;
        let qa = g.pick(qv, tr.a)?;
        let yv = g.input_vector(vec![y]);
        let diff = g.sub(qa, yv)?;
        errs.push(g.hadamard(diff, diff)?);
    }
    let stacked = g.concat_rows(&errs)?;
    let loss = g.mean(stacked);
    g.backward(loss, online)?;
    let value = g.value(loss).data()[0];
    adam.apply(online)?;
    Ok(DqnOutcome { loss: Some(value) })
}

/// Copy every online value into the target set.
pub fn sync_target(online: &ParamSet, target: &mut ParamSet) -> Result<()> {
    target.copy_values_from(online)
}
