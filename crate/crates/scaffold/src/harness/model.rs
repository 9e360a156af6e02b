//! Full-network assembly: embeddings, sentence/question encoders, attention,
//! gated memory, question-sentence fusion and the Q-head, wired exactly as the
//! agent uses them at every question event. One struct owns the parameter ids;
//! forward paths exist in three forms: a differentiable single step, a
//! differentiable whole-episode unroll (for gradient checking), and tape-free
//! numeric evaluation for acting.

use crate::encoders::{encode_question, encode_sentence, EmbeddingTable, LstmLayer};
use crate::error::{Error, Result};
use crate::memory::{memory_update, soft_attention, AttentionParams, BarMode, GateParams};
use crate::numerics::{AdamState, Graph, ParamId, ParamSet, Tensor, Var};
use crate::rng::Rng;
use crate::student::{assemble_state, qs_encode, Interaction, QNetwork, QSParams, RecomputeCtx, ReplayBuffer};
use rand::Rng as _;

/// Dimensions and wiring switches of one model instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnSpec {
    pub d: usize,
    pub n_max: usize,
    pub vocab_size: usize,
    /// Action count (answer candidates).
    pub k: usize,
    pub q_hidden: usize,
    pub interaction: Interaction,
    /// When false the attention block is absent: no attention parameters
    /// exist and the state shrinks by d * n_max.
    pub attention_in_state: bool,
    /// Per-candidate feature width; 0 selects the fixed K-output head.
    pub feats: usize,
}

impl SnSpec {
    /// Width of the assembled state vector.
    pub fn state_width(&self) -> usize {
        if self.attention_in_state {
            self.d * (self.n_max + 2)
        } else {
            2 * self.d
        }
    }
}

/// Shared two-layer scorer applied to `[state; features(a)]` once per
/// candidate; lets one set of weights rank any number of candidates.
#[derive(Debug, Clone)]
pub struct PcHead {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub in_width: usize,
    pub hidden: usize,
}

impl PcHead {
    pub fn new(ps: &mut ParamSet, name: &str, in_width: usize, hidden: usize, rng: &mut Rng) -> Self {
        let scale = 1.0 / (hidden as f64).sqrt();
        PcHead {
            w1: ps.register_normal(&format!("{name}.w1"), vec![hidden, in_width], scale, rng, true),
            b1: ps.register_zeros(&format!("{name}.b1"), vec![hidden, 1], false),
            w2: ps.register_normal(&format!("{name}.w2"), vec![1, hidden], scale, rng, true),
            b2: ps.register_zeros(&format!("{name}.b2"), vec![1, 1], false),
            in_width,
            hidden,
        }
    }

    fn score_var(&self, g: &mut Graph, ps: &ParamSet, joint: Var) -> Result<Var> {
        let w1 = g.param(ps, self.w1);
        let b1 = g.param(ps, self.b1);
        let w2 = g.param(ps, self.w2);
        let b2 = g.param(ps, self.b2);
        let pre1 = g.matmul(w1, joint)?;
        let pre1 = g.add(pre1, b1)?;
        let h = g.tanh(pre1);
        let pre2 = g.matmul(w2, h)?;
        g.add(pre2, b2)
    }

    fn score_numeric(&self, ps: &ParamSet, joint: &[f64]) -> Result<f64> {
        let jv = Tensor::vector(joint.to_vec());
        let mut h = ps.value(self.w1).matmul(&jv)?;
        for (v, b) in h.data_mut().iter_mut().zip(ps.value(self.b1).data()) {
            *v = (*v + b).tanh();
        }
        let mut out = ps.value(self.w2).matmul(&h)?;
        for (v, b) in out.data_mut().iter_mut().zip(ps.value(self.b2).data()) {
            *v += b;
        }
        Ok(out.data()[0])
    }
}

/// Action-value head: a fixed K-way net, or a per-candidate scorer when
/// candidates carry match features.
#[derive(Debug, Clone)]
pub enum Head {
    Fixed(QNetwork),
    PerCandidate(PcHead),
}

/// The complete model; every parameter is registered on one [`ParamSet`] in
/// construction order, which checkpoints rely on.
#[derive(Debug, Clone)]
pub struct SnModel {
    pub spec: SnSpec,
    pub emb: EmbeddingTable,
    pub sent: LstmLayer,
    pub quest: LstmLayer,
    pub attn: Option<AttentionParams>,
    pub gate: GateParams,
    pub qs: QSParams,
    pub head: Head,
}

/// Graph nodes produced by one differentiable step.
pub struct StepForward {
    pub state: Var,
    pub h_last: Var,
    pub m_next: Var,
    /// Numeric attention summary (importance input); None without attention.
    pub m_bar: Option<Tensor>,
}

/// Numeric outputs of one acting step (no tape).
#[derive(Debug, Clone)]
pub struct StepNumerics {
    pub state: Vec<f64>,
    pub q: Vec<f64>,
}

/// Numeric outputs of folding one sentence into memory.
#[derive(Debug, Clone)]
pub struct FoldNumerics {
    pub m_next: Vec<f64>,
    pub m_bar: Option<Tensor>,
    pub h_last: Vec<f64>,
}

impl SnModel {
    pub fn new(ps: &mut ParamSet, spec: SnSpec, rng: &mut Rng) -> Result<Self> {
        if spec.d == 0 || spec.n_max == 0 || spec.vocab_size == 0 || spec.k == 0 {
            return Err(Error::Contract("model dimensions must be positive".into()));
        }
        let emb = EmbeddingTable::new(ps, "emb", spec.vocab_size, spec.d, rng);
        let sent = LstmLayer::new(ps, "sent", spec.d, spec.d, rng);
        let quest = LstmLayer::new(ps, "quest", spec.d, spec.d, rng);
        let attn = if spec.attention_in_state {
            Some(AttentionParams::new(ps, "att", spec.d, rng))
        } else {
            None
        };
        let gate = GateParams::new(ps, "gate", spec.d, rng);
        let qs = QSParams::new(ps, "qs", spec.d, spec.interaction, rng);
        let head = if spec.feats > 0 {
            Head::PerCandidate(PcHead::new(
                ps,
                "head",
                spec.state_width() + spec.feats,
                spec.q_hidden,
                rng,
            ))
        } else {
            Head::Fixed(QNetwork::new(ps, "head", spec.state_width(), spec.q_hidden, spec.k, rng)?)
        };
        Ok(SnModel {
            spec,
            emb,
            sent,
            quest,
            attn,
            gate,
            qs,
            head,
        })
    }

    /// One differentiable question-event step. `memory` is the episode
    /// memory before the current sentence folds in; attention, fusion and
    /// the state all read that same pre-update memory, and `m_next` is the
    /// folded memory for the caller to carry forward.
    pub fn forward_step(
        &self,
        g: &mut Graph,
        ps: &ParamSet,
        sentence: &[usize],
        question: &[usize],
        memory: Var,
    ) -> Result<StepForward> {
        let enc = encode_sentence(g, ps, &self.emb, &self.sent, sentence)?;
        let q = encode_question(g, ps, &self.emb, &self.quest, question)?;
        let (m_flat, m_bar) = match &self.attn {
            Some(attn) => {
                let rec = soft_attention(g, ps, attn, &enc, memory, self.spec.n_max, BarMode::Mean)?;
                (Some(rec.m_flat), Some(rec.m_bar))
            }
            None => (None, None),
        };
        let o = qs_encode(g, ps, &self.qs, memory, &enc, q.h_q)?;
        let state = assemble_state(g, o, m_flat, q.h_q)?;
        let (_, m_next) = memory_update(g, ps, &self.gate, enc.h_last, memory)?;
        Ok(StepForward {
            state,
            h_last: enc.h_last,
            m_next,
            m_bar,
        })
    }

    /// Differentiable Q-values (k x 1) for a state node.
    pub fn q_values_var(
        &self,
        g: &mut Graph,
        ps: &ParamSet,
        state: Var,
        feats: Option<&[Vec<f64>]>,
    ) -> Result<Var> {
        match &self.head {
            Head::Fixed(net) => {
                if feats.is_some() {
                    return Err(Error::Contract(
                        "fixed head takes no per-candidate features".into(),
                    ));
                }
                net.forward(g, ps, state)
            }
            Head::PerCandidate(pc) => {
                let feats = feats.ok_or_else(|| {
                    Error::Contract("per-candidate head requires match features".into())
                })?;
                if feats.len() != self.spec.k {
                    return Err(Error::Contract(format!(
                        "feature rows {} != candidate count {}",
                        feats.len(),
                        self.spec.k
                    )));
                }
                let mut scores = Vec::with_capacity(feats.len());
                for f in feats {
                    if f.len() != self.spec.feats {
                        return Err(Error::Contract(format!(
                            "feature width {} != {}",
                            f.len(),
                            self.spec.feats
                        )));
                    }
                    let fv = g.input_vector(f.clone());
                    let joint = g.concat_rows(&[state, fv])?;
                    scores.push(pc.score_var(g, ps, joint)?);
                }
                g.concat_rows(&scores)
            }
        }
    }

    /// Tape-free Q-values for a numeric state (action selection, TD targets).
    pub fn head_values(
        &self,
        ps: &ParamSet,
        state: &[f64],
        feats: Option<&[Vec<f64>]>,
    ) -> Result<Vec<f64>> {
        match &self.head {
            Head::Fixed(net) => {
                if feats.is_some() {
                    return Err(Error::Contract(
                        "fixed head takes no per-candidate features".into(),
                    ));
                }
                net.values(ps, state)
            }
            Head::PerCandidate(pc) => {
                let feats = feats.ok_or_else(|| {
                    Error::Contract("per-candidate head requires match features".into())
                })?;
                let mut joint = Vec::with_capacity(state.len() + self.spec.feats);
                let mut out = Vec::with_capacity(feats.len());
                for f in feats {
                    joint.clear();
                    joint.extend_from_slice(state);
                    joint.extend_from_slice(f);
                    out.push(pc.score_numeric(ps, &joint)?);
                }
                Ok(out)
            }
        }
    }

    /// Acting path: state and Q-values of a question event, numerically.
    pub fn step_numeric(
        &self,
        ps: &ParamSet,
        sentence: &[usize],
        question: &[usize],
        memory: &[f64],
        feats: Option<&[Vec<f64>]>,
    ) -> Result<StepNumerics> {
        let mut g = Graph::new();
        let mem = g.input_vector(memory.to_vec());
        let fwd = self.forward_step(&mut g, ps, sentence, question, mem)?;
        let state = g.value(fwd.state).data().to_vec();
        let q = self.head_values(ps, &state, feats)?;
        Ok(StepNumerics { state, q })
    }

    /// Fold one sentence into the episode memory, numerically. Also returns
    /// the attention summary (importance input) and the sentence encoding's
    /// final hidden state, which the next step's recompute context stores.
    pub fn fold_numeric(&self, ps: &ParamSet, sentence: &[usize], memory: &[f64]) -> Result<FoldNumerics> {
        let mut g = Graph::new();
        let mem = g.input_vector(memory.to_vec());
        let enc = encode_sentence(&mut g, ps, &self.emb, &self.sent, sentence)?;
        let m_bar = match &self.attn {
            Some(attn) => Some(
                soft_attention(&mut g, ps, attn, &enc, mem, self.spec.n_max, BarMode::Mean)?.m_bar,
            ),
            None => None,
        };
        let (_, m_next) = memory_update(&mut g, ps, &self.gate, enc.h_last, mem)?;
        Ok(FoldNumerics {
            m_next: g.value(m_next).data().to_vec(),
            m_bar,
            h_last: g.value(enc.h_last).data().to_vec(),
        })
    }

    /// Differentiable whole-episode unroll: fold every sentence but the last
    /// into memory on one tape, then run the question step on the last.
    /// Gradients flow through every fold, so a gradient check over this path
    /// exercises the complete network.
    pub fn unroll_state(
        &self,
        g: &mut Graph,
        ps: &ParamSet,
        sentences: &[Vec<usize>],
        question: &[usize],
    ) -> Result<StepForward> {
        let last = sentences
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::Contract("unroll needs at least one sentence".into()))?;
        let mut memory = g.input(Tensor::zeros(vec![self.spec.d, 1]));
        for sentence in &sentences[..last] {
            let enc = encode_sentence(g, ps, &self.emb, &self.sent, sentence)?;
            let (_, m_next) = memory_update(g, ps, &self.gate, enc.h_last, memory)?;
            memory = m_next;
        }
        self.forward_step(g, ps, &sentences[last], question, memory)
    }

    /// Rebuild the stored step's state differentiably from its recompute
    /// context. When the context carries the previous sentence's numerics,
    /// the pre-step memory is itself recomputed through the gate, giving the
    /// gate parameters a one-step gradient path.
    pub fn recompute_state(&self, g: &mut Graph, ps: &ParamSet, ctx: &RecomputeCtx) -> Result<Var> {
        let memory = match (&ctx.prev_h_last, &ctx.prev_memory) {
            (Some(h), Some(m)) => {
                let hv = g.input_vector(h.clone());
                let mv = g.input_vector(m.clone());
                let (_, m_t) = memory_update(g, ps, &self.gate, hv, mv)?;
                m_t
            }
            (None, None) => g.input_vector(ctx.memory_in.clone()),
            _ => {
                return Err(Error::Contract(
                    "recompute context must carry both previous numerics or neither".into(),
                ))
            }
        };
        let fwd = self.forward_step(g, ps, &ctx.sentence_tokens, &ctx.question_tokens, memory)?;
        Ok(fwd.state)
    }
}

/// Mean squared TD error over a uniform mini-batch, with every online
/// Q-value recomputed through the full network, then one Adam step.
/// Returns None (and does nothing) until the buffer can fill a batch.
pub fn recompute_update(
    model: &SnModel,
    buffer: &ReplayBuffer,
    online: &mut ParamSet,
    target: &ParamSet,
    adam: &mut AdamState,
    gamma: f64,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Option<f64>> {
    if buffer.len() < batch_size {
        return Ok(None);
    }
    let picks = buffer.sample_indices(batch_size, rng);
    let mut g = Graph::new();
    let mut errs: Vec<Var> = Vec::with_capacity(batch_size);
    for idx in picks {
        let tr = buffer.get(idx);
        let ctx = tr.ctx.as_ref().ok_or_else(|| {
            Error::Contract("full-network update requires recompute contexts".into())
        })?;
        let y = if tr.terminal {
            tr.r
        } else {
            let q_next = model.head_values(target, &tr.s_next, ctx.match_feats_next.as_deref())?;
            let best = q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            tr.r + gamma * best
        };
        let state = model.recompute_state(&mut g, online, ctx)?;
        let qv = model.q_values_var(&mut g, online, state, ctx.match_feats.as_deref())?;
        let qa = g.pick(qv, tr.a)?;
        let yv = g.input_vector(vec![y]);
        let diff = g.sub(qa, yv)?;
        errs.push(g.hadamard(diff, diff)?);
    }
    let stacked = g.concat_rows(&errs)?;
    let loss = g.mean(stacked);
    g.backward(loss, online)?;
    let value = g.value(loss).data()[0];
    if !value.is_finite() {
        online.zero_grads();
        return Err(Error::NonFiniteGrad {
            param: "loss".into(),
        });
    }
    adam.apply(online)?;
    Ok(Some(value))
}

/// ε-greedy over already-computed Q-values.
pub fn select_from_values(q: &[f64], eps: f64, rng: &mut Rng) -> usize {
    debug_assert!(!q.is_empty());
    if rng.gen::<f64>() < eps {
        rng.gen_range(0..q.len())
    } else {
        crate::student::greedy_action(q)
    }
}

/// Central finite-difference audit of the whole network: fold several
/// sentences through attention and the memory gate, build the state for a
/// question, score it with the action-value head, and take a squared error
/// against a fixed random target. Every parameter's analytic gradient is
/// compared coordinate by coordinate.
pub fn full_forward_grad_report(
    seed: u64,
    d: usize,
    sentence_len: usize,
    n_max: usize,
    k: usize,
    h: f64,
    tolerance: f64,
) -> Result<crate::numerics::GradReport> {
    let mut rng = crate::rng::seeded(seed, crate::rng::stream::INIT);
    let vocab_size = 24;
    let spec = SnSpec {
        d,
        n_max,
        vocab_size,
        k,
        q_hidden: d,
        interaction: Interaction::Hadamard,
        attention_in_state: true,
        feats: 0,
    };
    let mut ps = ParamSet::new();
    let model = SnModel::new(&mut ps, spec, &mut rng)?;
    let sentences: Vec<Vec<usize>> = (0..3)
        .map(|_| (0..sentence_len).map(|_| rng.gen_range(2..vocab_size)).collect())
        .collect();
    let question: Vec<usize> = (0..sentence_len).map(|_| rng.gen_range(2..vocab_size)).collect();
    let target: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let loss_fn = |ps: &mut ParamSet, accumulate: bool| -> Result<f64> {
        let mut g = Graph::new();
        let fwd = model.unroll_state(&mut g, ps, &sentences, &question)?;
        let q = model.q_values_var(&mut g, ps, fwd.state, None)?;
        let tgt = g.input(Tensor::vector(target.clone()));
        let diff = g.sub(q, tgt)?;
        let sq = g.hadamard(diff, diff)?;
        let loss = g.mean(sq);
        let out = g.value(loss).data()[0];
        if accumulate {
            g.backward(loss, ps)?;
        }
        Ok(out)
    };
    crate::numerics::grad_check(&mut ps, loss_fn, h, tolerance)
}

/// Supervised reference model: one LSTM over the whole text followed by a
/// linear layer to K classes.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub emb: EmbeddingTable,
    pub lstm: LstmLayer,
    pub w: ParamId,
    pub b: ParamId,
    pub k: usize,
}

impl BaselineModel {
    pub fn new(ps: &mut ParamSet, vocab_size: usize, d: usize, k: usize, rng: &mut Rng) -> Self {
        let emb = EmbeddingTable::new(ps, "base.emb", vocab_size, d, rng);
        let lstm = LstmLayer::new(ps, "base.lstm", d, d, rng);
        let scale = 1.0 / (d as f64).sqrt();
        let w = ps.register_normal("base.w", vec![k, d], scale, rng, true);
        let b = ps.register_zeros("base.b", vec![k, 1], false);
        BaselineModel { emb, lstm, w, b, k }
    }

    /// Differentiable logits for one token sequence.
    pub fn logits_var(&self, g: &mut Graph, ps: &ParamSet, tokens: &[usize]) -> Result<Var> {
        let enc = encode_sentence(g, ps, &self.emb, &self.lstm, tokens)?;
        let w = g.param(ps, self.w);
        let b = g.param(ps, self.b);
        let pre = g.matmul(w, enc.h_last)?;
        g.add(pre, b)
    }

    /// Numeric logits for evaluation.
    pub fn logits(&self, ps: &ParamSet, tokens: &[usize]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let v = self.logits_var(&mut g, ps, tokens)?;
        Ok(g.value(v).data().to_vec())
    }
}
