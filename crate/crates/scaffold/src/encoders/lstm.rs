//! Embedding table, LSTM layer, and stacked LSTM.

use crate::error::Result;
use crate::numerics::{Graph, ParamId, ParamSet, Var};
use crate::rng::Rng;

/// Trainable |V| x d embedding matrix. Lookup is a differentiable row read.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub param: ParamId,
    pub vocab_size: usize,
    pub dim: usize,
}

impl EmbeddingTable {
    /// Rows drawn from N(0, 1/d); embeddings are exempt from weight decay.
    pub fn new(ps: &mut ParamSet, name: &str, vocab_size: usize, dim: usize, rng: &mut Rng) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let param = ps.register_normal(name, vec![vocab_size, dim], scale, rng, false);
        EmbeddingTable {
            param,
            vocab_size,
            dim,
        }
    }

    /// Token row as a d-column vector.
    pub fn embed(&self, g: &mut Graph, ps: &ParamSet, token: usize) -> Result<Var> {
        let table = g.param(ps, self.param);
        g.row_as_column(table, token)
    }
}

/// One LSTM layer. Gate preactivations are a single fused product; the
/// row ranges are input, forget, candidate, output in that order.
#[derive(Debug, Clone)]
pub struct LstmLayer {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub d_in: usize,
    pub d: usize,
}

impl LstmLayer {
    /// Weights from N(0, 1/d); forget-gate bias starts at 1 so early
    /// training does not erase the cell state.
    pub fn new(ps: &mut ParamSet, name: &str, d_in: usize, d: usize, rng: &mut Rng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        let w_ih = ps.register_normal(&format!("{name}.w_ih"), vec![4 * d, d_in], scale, rng, true);
        let w_hh = ps.register_normal(&format!("{name}.w_hh"), vec![4 * d, d], scale, rng, true);
        let bias = ps.register_zeros(&format!("{name}.bias"), vec![4 * d, 1], false);
        for v in &mut ps.get_mut(bias).value.data_mut()[d..2 * d] {
            *v = 1.0;
        }
        LstmLayer {
            w_ih,
            w_hh,
            bias,
            d_in,
            d,
        }
    }

    pub fn zero_state(&self, g: &mut Graph) -> (Var, Var) {
        let h = g.input_vector(vec![0.0; self.d]);
        let c = g.input_vector(vec![0.0; self.d]);
        (h, c)
    }

    /// One step: consume `x` with state `(h, c)`, produce the next state.
    pub fn step(
        &self,
        g: &mut Graph,
        ps: &ParamSet,
        x: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var)> {
        let d = self.d;
        let w_ih = g.param(ps, self.w_ih);
        let w_hh = g.param(ps, self.w_hh);
        let bias = g.param(ps, self.bias);
        let ix = g.matmul(w_ih, x)?;
        let hh = g.matmul(w_hh, h)?;
        let pre = g.add(ix, hh)?;
        let pre = g.add(pre, bias)?;
        let i_gate = {
            let s = g.slice_rows(pre, 0, d)?;
            g.sigmoid(s)
        };
        let f_gate = {
            let s = g.slice_rows(pre, d, d)?;
            g.sigmoid(s)
        };
        let cand = {
            let s = g.slice_rows(pre, 2 * d, d)?;
            g.tanh(s)
        };
        let o_gate = {
            let s = g.slice_rows(pre, 3 * d, d)?;
            g.sigmoid(s)
        };
        let keep = g.hadamard(f_gate, c)?;
        let write = g.hadamard(i_gate, cand)?;
        let c_next = g.add(keep, write)?;
        let c_act = g.tanh(c_next);
        let h_next = g.hadamard(o_gate, c_act)?;
        Ok((h_next, c_next))
    }

    /// Run over a sequence from zero state; returns per-step hiddens.
    pub fn run(&self, g: &mut Graph, ps: &ParamSet, inputs: &[Var]) -> Result<Vec<Var>> {
        let (mut h, mut c) = self.zero_state(g);
        let mut out = Vec::with_capacity(inputs.len());
        for &x in inputs {
            let (nh, nc) = self.step(g, ps, x, h, c)?;
            h = nh;
            c = nc;
            out.push(h);
        }
        Ok(out)
    }
}

/// Stacked LSTM. Layer 1 may start from a supplied hidden state (its cell
/// state still starts at zero); higher layers always start at zero.
#[derive(Debug, Clone)]
pub struct LstmStack {
    pub layers: Vec<LstmLayer>,
}

impl LstmStack {
    pub fn new(ps: &mut ParamSet, name: &str, d_in: usize, d: usize, depth: usize, rng: &mut Rng) -> Self {
        let layers = (0..depth)
            .map(|l| {
                let input = if l == 0 { d_in } else { d };
                LstmLayer::new(ps, &format!("{name}.l{l}"), input, d, rng)
            })
            .collect();
        LstmStack { layers }
    }

    /// Returns the top layer's per-step outputs and its final hidden state.
    pub fn forward(
        &self,
        g: &mut Graph,
        ps: &ParamSet,
        inputs: &[Var],
        initial_hidden: Option<Var>,
    ) -> Result<(Vec<Var>, Var)> {
        if inputs.is_empty() {
            return Err(crate::error::Error::EmptyInput("lstm_stack_forward"));
        }
        let mut seq: Vec<Var> = inputs.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let (mut h, mut c) = layer.zero_state(g);
            if li == 0 {
                if let Some(h0) = initial_hidden {
                    h = h0;
                }
            }
            let mut next = Vec::with_capacity(seq.len());
            for &x in &seq {
                let (nh, nc) = layer.step(g, ps, x, h, c)?;
                h = nh;
                c = nc;
                next.push(h);
            }
            seq = next;
        }
        let last = *seq.last().expect("non-empty checked above");
        Ok((seq, last))
    }
}
