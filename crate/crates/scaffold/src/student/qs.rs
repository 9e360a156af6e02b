//! Question-sentence encoder: fuse each word state with the question, run
//! the fused sequence through a 3-layer LSTM seeded by the fused memory.

use crate::encoders::{LstmStack, SentenceEncoding};
use crate::error::Result;
use crate::numerics::{Graph, ParamId, ParamSet, Var};
use crate::rng::Rng;

/// How a word/memory vector combines with the question vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interaction {
    /// Elementwise product: the un-summed inner product, keeps dimension d.
    #[default]
    Hadamard,
    /// tanh(W [a; b]): a small trained fusion layer.
    Mlp,
}

#[derive(Debug, Clone)]
pub struct QSParams {
    pub stack: LstmStack,
    pub interaction: Interaction,
    /// Fusion weights, present only for [`Interaction::Mlp`].
    pub mlp_w: Option<ParamId>,
    pub mlp_b: Option<ParamId>,
    pub d: usize,
}

impl QSParams {
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        d: usize,
        interaction: Interaction,
        rng: &mut Rng,
    ) -> Self {
        let stack = LstmStack::new(ps, &format!("{name}.stack"), d, d, 3, rng);
        let (mlp_w, mlp_b) = match interaction {
            Interaction::Hadamard => (None, None),
            Interaction::Mlp => {
                let scale = 1.0 / (d as f64).sqrt();
                let w = ps.register_normal(&format!("{name}.fuse_w"), vec![d, 2 * d], scale, rng, true);
                let b = ps.register_zeros(&format!("{name}.fuse_b"), vec![d, 1], false);
                (Some(w), Some(b))
            }
        };
        QSParams {
            stack,
            interaction,
            mlp_w,
            mlp_b,
            d,
        }
    }

    fn fuse(&self, g: &mut Graph, ps: &ParamSet, a: Var, b: Var) -> Result<Var> {
        match self.interaction {
            Interaction::Hadamard => g.hadamard(a, b),
            Interaction::Mlp => {
                let w = g.param(ps, self.mlp_w.expect("mlp params registered"));
                let bias = g.param(ps, self.mlp_b.expect("mlp params registered"));
                let cat = g.concat_rows(&[a, b])?;
                let pre = g.matmul(w, cat)?;
                let pre = g.add(pre, bias)?;
                Ok(g.tanh(pre))
            }
        }
    }
}

/// Eq-4 style fusion: the fused memory seeds layer 1, the fused words are
/// the sequence, and the output is the stack's final hidden state.
pub fn qs_encode(
    g: &mut Graph,
    ps: &ParamSet,
    qs: &QSParams,
    memory: Var,
    sent: &SentenceEncoding,
    h_q: Var,
) -> Result<Var> {
    let h0 = qs.fuse(g, ps, memory, h_q)?;
    let fused = sent
        .hiddens
        .iter()
        .map(|&h| qs.fuse(g, ps, h, h_q))
        .collect::<Result<Vec<_>>>()?;
    let (_, o) = qs.stack.forward(g, ps, &fused, Some(h0))?;
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;
    use crate::rng::{seeded, stream};

    fn sentence_from(g: &mut Graph, cols: &[Vec<f64>]) -> SentenceEncoding {
        let hiddens: Vec<Var> = cols.iter().map(|c| g.input_vector(c.clone())).collect();
        let h_cols = g.concat_cols(&hiddens).unwrap();
        SentenceEncoding {
            h_last: *hiddens.last().unwrap(),
            n: hiddens.len(),
            hiddens,
            h_cols,
        }
    }

    #[test]
    fn zero_question_annihilates_hadamard_encoding() {
        let mut rng = seeded(1, stream::INIT);
        let mut ps = ParamSet::new();
        let qs = QSParams::new(&mut ps, "qs", 3, Interaction::Hadamard, &mut rng);
        // Zero biases so tanh/sigmoid structure maps zero input to zero output.
        for layer in &qs.stack.layers {
            ps.get_mut(layer.bias).value.data_mut().fill(0.0);
        }
        let mut g = Graph::new();
        let s = sentence_from(&mut g, &[vec![0.5, -0.5, 0.25], vec![0.9, 0.1, -0.3]]);
        let mem = g.input_vector(vec![0.3, 0.3, 0.3]);
        let hq = g.input_vector(vec![0.0, 0.0, 0.0]);
        let o = qs_encode(&mut g, &ps, &qs, mem, &s, hq).unwrap();
        assert!(g.value(o).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_ones_question_is_the_hadamard_identity() {
        let mut rng = seeded(2, stream::INIT);
        let mut ps = ParamSet::new();
        let qs = QSParams::new(&mut ps, "qs", 3, Interaction::Hadamard, &mut rng);
        let cols = vec![vec![0.4, -0.1, 0.8], vec![-0.6, 0.2, 0.0]];
        let mem = vec![0.25, 0.5, -0.75];

        let mut g = Graph::new();
        let s = sentence_from(&mut g, &cols);
        let mv = g.input_vector(mem.clone());
        let ones = g.input_vector(vec![1.0; 3]);
        let o_fused = qs_encode(&mut g, &ps, &qs, mv, &s, ones).unwrap();

        // Fusing with ones must equal running the raw sequence directly.
        let mv2 = g.input_vector(mem);
        let raw: Vec<Var> = s.hiddens.clone();
        let (_, o_raw) = qs.stack.forward(&mut g, &ps, &raw, Some(mv2)).unwrap();
        assert_eq!(g.value(o_fused).data(), g.value(o_raw).data());
    }

    #[test]
    fn matches_scalar_reference_composition() {
        // Hadamard fusion then the stack; the stack itself is oracle-tested,
        // so verify the fusion wiring: inputs to the stack are a ⊙ h_q.
        let mut rng = seeded(3, stream::INIT);
        let mut ps = ParamSet::new();
        let qs = QSParams::new(&mut ps, "qs", 4, Interaction::Hadamard, &mut rng);
        let cols = vec![
            vec![0.3, -0.1, 0.8, 0.0],
            vec![-0.5, 0.2, 0.2, 1.0],
            vec![0.0, 0.9, -0.7, 0.4],
        ];
        let mem = vec![0.2, -0.2, 0.4, -0.4];
        let hq = vec![0.5, 0.25, -0.5, 1.0];

        let mut g = Graph::new();
        let s = sentence_from(&mut g, &cols);
        let mv = g.input_vector(mem.clone());
        let hqv = g.input_vector(hq.clone());
        let o = qs_encode(&mut g, &ps, &qs, mv, &s, hqv).unwrap();

        let fused: Vec<Var> = cols
            .iter()
            .map(|c| {
                let prod: Vec<f64> = c.iter().zip(hq.iter()).map(|(a, b)| a * b).collect();
                g.input_vector(prod)
            })
            .collect();
        let h0: Vec<f64> = mem.iter().zip(hq.iter()).map(|(a, b)| a * b).collect();
        let h0v = g.input(Tensor::vector(h0));
        let (_, expect) = qs.stack.forward(&mut g, &ps, &fused, Some(h0v)).unwrap();
        for (a, b) in g.value(o).data().iter().zip(g.value(expect).data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mlp_interaction_trains_its_fusion_weights() {
        use crate::numerics::grad_check;
        let mut rng = seeded(4, stream::INIT);
        let mut ps = ParamSet::new();
        let qs = QSParams::new(&mut ps, "qs", 3, Interaction::Mlp, &mut rng);
        let qs2 = qs.clone();
        let loss = move |ps: &mut ParamSet, accumulate: bool| {
            let mut g = Graph::new();
            let s = sentence_from(&mut g, &[vec![0.4, -0.2, 0.7]]);
            let mem = g.input_vector(vec![0.2, -0.3, 0.6]);
            let hq = g.input_vector(vec![0.9, 0.0, -0.4]);
            let o = qs_encode(&mut g, ps, &qs2, mem, &s, hq)?;
            let sq = g.hadamard(o, o)?;
            let l = g.mean(sq);
            if accumulate {
                g.backward(l, ps)?;
            }
            Ok(g.value(l).data()[0])
        };
        let report = grad_check(&mut ps, loss, 1e-5, 1e-4).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
        let fuse_errs: Vec<_> = report
            .per_param
            .iter()
            .filter(|(n, _)| n.starts_with("qs.fuse"))
            .collect();
        assert_eq!(fuse_errs.len(), 2);
    }
}
