//! Episode memory: word-by-word soft attention against the running memory
//! vector and the gated additive memory update.

use crate::encoders::SentenceEncoding;
use crate::error::Result;
use crate::numerics::{Graph, ParamId, ParamSet, Tensor, Var};
use crate::rng::Rng;

/// The running d-vector summary of everything read this episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMemory {
    pub m: Tensor,
    /// Sentences folded in since the last reset.
    pub t: usize,
}

impl EpisodeMemory {
    /// Episodes start with no memory.
    pub fn new(d: usize) -> Self {
        EpisodeMemory {
            m: Tensor::zeros(vec![d, 1]),
            t: 0,
        }
    }

    pub fn reset(&mut self) {
        self.m.data_mut().fill(0.0);
        self.t = 0;
    }

    pub fn d(&self) -> usize {
        self.m.rows()
    }

    /// Enter the current memory into a graph as a constant. Gradients stop
    /// here: each sentence step trains on its own slice of the episode.
    pub fn as_var(&self, g: &mut Graph) -> Var {
        g.input(self.m.clone())
    }

    /// Install the updated memory value produced by [`memory_update`].
    pub fn advance(&mut self, m_next: Tensor) {
        self.m = m_next;
        self.t += 1;
    }
}

/// Attention projections: one for the word states, one for the memory.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub w_x: ParamId,
    pub w_h: ParamId,
    pub d: usize,
}

impl AttentionParams {
    pub fn new(ps: &mut ParamSet, name: &str, d: usize, rng: &mut Rng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        AttentionParams {
            w_x: ps.register_normal(&format!("{name}.w_x"), vec![d, d], scale, rng, true),
            w_h: ps.register_normal(&format!("{name}.w_h"), vec![d, d], scale, rng, true),
            d,
        }
    }
}

/// Gate projections for the memory update.
#[derive(Debug, Clone)]
pub struct GateParams {
    pub w_c: ParamId,
    pub w_p: ParamId,
    pub d: usize,
}

impl GateParams {
    pub fn new(ps: &mut ParamSet, name: &str, d: usize, rng: &mut Rng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        GateParams {
            w_c: ps.register_normal(&format!("{name}.w_c"), vec![d, d], scale, rng, true),
            w_p: ps.register_normal(&format!("{name}.w_p"), vec![d, d], scale, rng, true),
            d,
        }
    }
}

/// How the per-sentence attention summary collapses across words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BarMode {
    /// Mean keeps every coordinate in (0,1), so the importance threshold is
    /// independent of sentence length.
    #[default]
    Mean,
    Sum,
}

/// Attention of one sentence against the episode memory.
#[derive(Debug, Clone)]
pub struct AttentionRecord {
    /// d x n; column i is the un-normalized attention of word i.
    pub m_matrix: Var,
    /// Column-major flatten, zero-padded/truncated to d * n_max.
    pub m_flat: Var,
    /// Per-sentence summary (numeric; consumed by the teacher, no gradient).
    pub m_bar: Tensor,
    pub n: usize,
}

/// Word-by-word attention: column i is `sigmoid(W_x h_i + W_h M)`.
/// The memory term repeats across columns.
pub fn soft_attention(
    g: &mut Graph,
    ps: &ParamSet,
    params: &AttentionParams,
    sent: &SentenceEncoding,
    memory: Var,
    n_max: usize,
    bar: BarMode,
) -> Result<AttentionRecord> {
    let w_x = g.param(ps, params.w_x);
    let w_h = g.param(ps, params.w_h);
    let xh = g.matmul(w_x, sent.h_cols)?;
    let mh = g.matmul(w_h, memory)?;
    let mh_tiled = g.tile_cols(mh, sent.n)?;
    let pre = g.add(xh, mh_tiled)?;
    let m_matrix = g.sigmoid(pre);
    let m_flat = g.flatten_pad(m_matrix, n_max)?;

    let values = g.value(m_matrix);
    let (d, n) = (values.rows(), values.cols());
    let mut bar_data = vec![0.0; d];
    for r in 0..d {
        for c in 0..n {
            bar_data[r] += values.at(r, c);
        }
        if bar == BarMode::Mean {
            bar_data[r] /= n as f64;
        }
    }
    Ok(AttentionRecord {
        m_matrix,
        m_flat,
        m_bar: Tensor::vector(bar_data),
        n,
    })
}

/// Gated update: `gate = tanh(W_c h + W_p M)`, `M_next = h + gate ⊙ M`.
/// Returns `(gate, M_next)` as graph nodes; the caller decides whether to
/// fold `M_next` back into an [`EpisodeMemory`].
pub fn memory_update(
    g: &mut Graph,
    ps: &ParamSet,
    params: &GateParams,
    h_last: Var,
    memory: Var,
) -> Result<(Var, Var)> {
    let w_c = g.param(ps, params.w_c);
    let w_p = g.param(ps, params.w_p);
    let ch = g.matmul(w_c, h_last)?;
    let pm = g.matmul(w_p, memory)?;
    let pre = g.add(ch, pm)?;
    let gate = g.tanh(pre);
    let gated = g.hadamard(gate, memory)?;
    let m_next = g.add(h_last, gated)?;
    Ok((gate, m_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, sigmoid};
    use crate::rng::{seeded, stream};
    use proptest::prelude::*;

    /// Hand-assemble a SentenceEncoding from raw column vectors.
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

    fn zeroed_attention(d: usize) -> (ParamSet, AttentionParams) {
        let mut rng = seeded(0, stream::INIT);
        let mut ps = ParamSet::new();
        let ap = AttentionParams::new(&mut ps, "att", d, &mut rng);
        ps.get_mut(ap.w_x).value.data_mut().fill(0.0);
        ps.get_mut(ap.w_h).value.data_mut().fill(0.0);
        (ps, ap)
    }

    #[test]
    fn zero_everything_gives_half_attention() {
        let (ps, ap) = zeroed_attention(3);
        let mem = EpisodeMemory::new(3);
        let mut g = Graph::new();
        let s = sentence_from(&mut g, &[vec![0.4, -0.2, 0.9], vec![1.0, 0.0, -1.0]]);
        let mv = mem.as_var(&mut g);
        let rec = soft_attention(&mut g, &ps, &ap, &s, mv, 4, BarMode::Mean).unwrap();
        assert!(g.value(rec.m_matrix).data().iter().all(|&v| v == 0.5));
        let flat = g.value(rec.m_flat).data();
        assert!(flat[..6].iter().all(|&v| v == 0.5));
        assert!(flat[6..].iter().all(|&v| v == 0.0));
        assert!(rec.m_bar.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn single_word_pads_beyond_first_d_slots() {
        let (ps, ap) = zeroed_attention(2);
        let mem = EpisodeMemory::new(2);
        let mut g = Graph::new();
        let s = sentence_from(&mut g, &[vec![3.0, -3.0]]);
        let mv = mem.as_var(&mut g);
        let rec = soft_attention(&mut g, &ps, &ap, &s, mv, 5, BarMode::Mean).unwrap();
        let flat = g.value(rec.m_flat).data();
        assert_eq!(flat.len(), 10);
        assert!(flat[..2].iter().all(|&v| v == 0.5));
        assert!(flat[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn attention_matches_scalar_rederivation() {
        let mut rng = seeded(7, stream::INIT);
        let mut ps = ParamSet::new();
        let ap = AttentionParams::new(&mut ps, "att", 4, &mut rng);
        let mut mem = EpisodeMemory::new(4);
        mem.advance(Tensor::vector(vec![0.3, -0.8, 0.1, 0.55]));
        let cols = vec![
            vec![0.2, 0.4, -0.6, 0.0],
            vec![-1.0, 0.5, 0.25, 0.9],
            vec![0.05, -0.15, 0.85, -0.45],
        ];
        let mut g = Graph::new();
        let s = sentence_from(&mut g, &cols);
        let mv = mem.as_var(&mut g);
        let rec = soft_attention(&mut g, &ps, &ap, &s, mv, 6, BarMode::Mean).unwrap();

        let wx = ps.value(ap.w_x).data();
        let wh = ps.value(ap.w_h).data();
        let m = mem.m.data();
        let got = g.value(rec.m_matrix);
        for i in 0..3 {
            for r in 0..4 {
                let mut pre = 0.0;
                for j in 0..4 {
                    pre += wx[r * 4 + j] * cols[i][j] + wh[r * 4 + j] * m[j];
                }
                assert!(
                    (got.at(r, i) - sigmoid(pre)).abs() < 1e-12,
                    "row {r} col {i}"
                );
            }
        }
        // m_bar is the row-wise mean across words.
        for r in 0..4 {
            let mean = (got.at(r, 0) + got.at(r, 1) + got.at(r, 2)) / 3.0;
            assert!((rec.m_bar.data()[r] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn bar_sum_mode_scales_with_word_count() {
        let (ps, ap) = zeroed_attention(2);
        let mem = EpisodeMemory::new(2);
        let mut g = Graph::new();
        let s = sentence_from(&mut g, &[vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
        let mv = mem.as_var(&mut g);
        let rec = soft_attention(&mut g, &ps, &ap, &s, mv, 4, BarMode::Sum).unwrap();
        assert!(rec.m_bar.data().iter().all(|&v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn long_sentences_truncate_to_n_max_columns() {
        let (ps, ap) = zeroed_attention(2);
        let mem = EpisodeMemory::new(2);
        let mut g = Graph::new();
        let s = sentence_from(&mut g, &[vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]]);
        let mv = mem.as_var(&mut g);
        let rec = soft_attention(&mut g, &ps, &ap, &s, mv, 2, BarMode::Mean).unwrap();
        assert_eq!(g.value(rec.m_flat).len(), 4);
        assert!(g.value(rec.m_flat).data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn changing_one_word_changes_only_its_column() {
        let mut rng = seeded(8, stream::INIT);
        let mut ps = ParamSet::new();
        let ap = AttentionParams::new(&mut ps, "att", 3, &mut rng);
        let mut mem = EpisodeMemory::new(3);
        mem.advance(Tensor::vector(vec![0.1, 0.2, 0.3]));
        let base = vec![vec![0.5, -0.5, 0.25], vec![0.9, 0.1, -0.3], vec![0.0, 0.7, 0.2]];
        let mut changed = base.clone();
        changed[1] = vec![-0.9, 0.4, 0.8];

        let mut g = Graph::new();
        let mv = mem.as_var(&mut g);
        let s1 = sentence_from(&mut g, &base);
        let s2 = sentence_from(&mut g, &changed);
        let r1 = soft_attention(&mut g, &ps, &ap, &s1, mv, 4, BarMode::Mean).unwrap();
        let r2 = soft_attention(&mut g, &ps, &ap, &s2, mv, 4, BarMode::Mean).unwrap();
        let (a, b) = (g.value(r1.m_matrix).clone(), g.value(r2.m_matrix).clone());
        for r in 0..3 {
            assert_eq!(a.at(r, 0), b.at(r, 0));
            assert_ne!(a.at(r, 1), b.at(r, 1));
            assert_eq!(a.at(r, 2), b.at(r, 2));
        }
    }

    #[test]
    fn zero_gate_passes_hidden_through() {
        let mut rng = seeded(9, stream::INIT);
        let mut ps = ParamSet::new();
        let gp = GateParams::new(&mut ps, "gate", 3, &mut rng);
        ps.get_mut(gp.w_c).value.data_mut().fill(0.0);
        ps.get_mut(gp.w_p).value.data_mut().fill(0.0);
        let mut mem = EpisodeMemory::new(3);
        mem.advance(Tensor::vector(vec![0.5, 0.5, 0.5]));
        let mut g = Graph::new();
        let h = g.input_vector(vec![0.7, -0.2, 0.0]);
        let mv = mem.as_var(&mut g);
        let (gate, m_next) = memory_update(&mut g, &ps, &gp, h, mv).unwrap();
        assert!(g.value(gate).data().iter().all(|&v| v == 0.0));
        assert_eq!(g.value(m_next).data(), &[0.7, -0.2, 0.0]);
    }

    #[test]
    fn empty_memory_update_returns_hidden() {
        let mut rng = seeded(10, stream::INIT);
        let mut ps = ParamSet::new();
        let gp = GateParams::new(&mut ps, "gate", 3, &mut rng);
        let mem = EpisodeMemory::new(3);
        let mut g = Graph::new();
        let h = g.input_vector(vec![0.33, -0.66, 0.99]);
        let mv = mem.as_var(&mut g);
        let (_, m_next) = memory_update(&mut g, &ps, &gp, h, mv).unwrap();
        assert_eq!(g.value(m_next).data(), &[0.33, -0.66, 0.99]);
    }

    #[test]
    fn update_matches_scalar_rederivation() {
        let mut rng = seeded(11, stream::INIT);
        let mut ps = ParamSet::new();
        let gp = GateParams::new(&mut ps, "gate", 4, &mut rng);
        let mut mem = EpisodeMemory::new(4);
        mem.advance(Tensor::vector(vec![-0.4, 0.9, 0.15, -0.05]));
        let h = vec![0.6, -0.3, 0.0, 0.8];
        let mut g = Graph::new();
        let hv = g.input_vector(h.clone());
        let mv = mem.as_var(&mut g);
        let (gate, m_next) = memory_update(&mut g, &ps, &gp, hv, mv).unwrap();

        let wc = ps.value(gp.w_c).data();
        let wp = ps.value(gp.w_p).data();
        let m = mem.m.data();
        for r in 0..4 {
            let mut pre = 0.0;
            for j in 0..4 {
                pre += wc[r * 4 + j] * h[j] + wp[r * 4 + j] * m[j];
            }
            let gexp = pre.tanh();
            assert!((g.value(gate).data()[r] - gexp).abs() < 1e-12);
            assert!((g.value(m_next).data()[r] - (h[r] + gexp * m[r])).abs() < 1e-12);
        }
    }

    #[test]
    fn reset_is_idempotent_and_zeroes_counter() {
        let mut mem = EpisodeMemory::new(3);
        mem.advance(Tensor::vector(vec![1.0, 2.0, 3.0]));
        assert_eq!(mem.t, 1);
        mem.reset();
        let snapshot = mem.clone();
        mem.reset();
        assert_eq!(mem, snapshot);
        assert_eq!(mem.t, 0);
        assert!(mem.m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn memory_growth_stays_under_step_count() {
        // |M_t|_inf < t when every hidden coordinate is inside (-1, 1).
        let mut rng = seeded(12, stream::INIT);
        let mut ps = ParamSet::new();
        let gp = GateParams::new(&mut ps, "gate", 4, &mut rng);
        let mut mem = EpisodeMemory::new(4);
        for step in 1..=30 {
            let h: Vec<f64> = (0..4)
                .map(|i| ((step * 7 + i * 3) as f64).sin() * 0.999)
                .collect();
            let mut g = Graph::new();
            let hv = g.input_vector(h);
            let mv = mem.as_var(&mut g);
            let (_, m_next) = memory_update(&mut g, &ps, &gp, hv, mv).unwrap();
            mem.advance(g.value(m_next).clone());
            let inf = mem.m.data().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            assert!(inf < step as f64, "step {step}: |M| = {inf}");
        }
    }

    #[test]
    fn gradients_flow_through_attention_and_update() {
        let mut rng = seeded(13, stream::INIT);
        let mut ps = ParamSet::new();
        let ap = AttentionParams::new(&mut ps, "att", 3, &mut rng);
        let gp = GateParams::new(&mut ps, "gate", 3, &mut rng);
        let loss = move |ps: &mut ParamSet, accumulate: bool| {
            let mut g = Graph::new();
            let s = sentence_from(&mut g, &[vec![0.4, -0.2, 0.7], vec![0.1, 0.9, -0.5]]);
            let mem = g.input_vector(vec![0.2, -0.3, 0.6]);
            let rec = soft_attention(&mut g, ps, &ap, &s, mem, 3, BarMode::Mean)?;
            let (_, m_next) = memory_update(&mut g, ps, &gp, s.h_last, mem)?;
            let att_sq = g.hadamard(rec.m_flat, rec.m_flat)?;
            let mem_sq = g.hadamard(m_next, m_next)?;
            let l1 = g.mean(att_sq);
            let l2 = g.mean(mem_sq);
            let l = g.add(l1, l2)?;
            if accumulate {
                g.backward(l, ps)?;
            }
            Ok(g.value(l).data()[0])
        };
        let report = grad_check(&mut ps, loss, 1e-5, 1e-4).unwrap();
        assert!(
            report.pass,
            "max rel err {} at {}",
            report.max_rel_err, report.worst_param
        );
    }

    proptest! {
        // Scales stay small enough that |preactivation| < 36: beyond that,
        // f64 rounds the sigmoid to exactly 0 or 1 and strictness is a
        // representation limit, not a property of the operation.
        #[test]
        fn attention_entries_stay_strictly_inside_unit_interval(
            seed in 0u64..500,
            scale in 0.1f64..2.0
        ) {
            let mut rng = seeded(seed, stream::INIT);
            let mut ps = ParamSet::new();
            let ap = AttentionParams::new(&mut ps, "att", 3, &mut rng);
            for id in [ap.w_x, ap.w_h] {
                for v in ps.get_mut(id).value.data_mut() {
                    *v *= scale;
                }
            }
            let mut mem = EpisodeMemory::new(3);
            mem.advance(Tensor::vector(vec![scale, -scale, 0.5]));
            let mut g = Graph::new();
            let s = sentence_from(&mut g, &[vec![scale, 0.0, -scale]]);
            let mv = mem.as_var(&mut g);
            let rec = soft_attention(&mut g, &ps, &ap, &s, mv, 2, BarMode::Mean).unwrap();
            for &v in g.value(rec.m_matrix).data() {
                prop_assert!(v > 0.0 && v < 1.0);
            }
        }

        #[test]
        fn gate_entries_stay_strictly_inside_unit_interval(seed in 0u64..500) {
            let mut rng = seeded(seed, stream::INIT);
            let mut ps = ParamSet::new();
            let gp = GateParams::new(&mut ps, "gate", 3, &mut rng);
            let mut mem = EpisodeMemory::new(3);
            mem.advance(Tensor::vector(vec![5.0, -5.0, 1.0]));
            let mut g = Graph::new();
            let h = g.input_vector(vec![2.0, -2.0, 0.0]);
            let mv = mem.as_var(&mut g);
            let (gate, _) = memory_update(&mut g, &ps, &gp, h, mv).unwrap();
            for &v in g.value(gate).data() {
                prop_assert!(v > -1.0 && v < 1.0);
            }
        }
    }
}
