//! Sentence and question encoders.

use crate::encoders::lstm::{EmbeddingTable, LstmLayer};
use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamSet, Var};

/// Per-token hidden states of one sentence.
#[derive(Debug, Clone)]
pub struct SentenceEncoding {
    /// Hidden state after each token, as d-columns.
    pub hiddens: Vec<Var>,
    /// d x n matrix whose column i is `hiddens[i]`.
    pub h_cols: Var,
    /// Final hidden state; equals the last column of `h_cols`.
    pub h_last: Var,
    pub n: usize,
}

/// Final hidden state of the question LSTM.
#[derive(Debug, Clone)]
pub struct QuestionEncoding {
    pub h_q: Var,
    pub n: usize,
}

/// Run the word LSTM over a tokenized sentence.
pub fn encode_sentence(
    g: &mut Graph,
    ps: &ParamSet,
    emb: &EmbeddingTable,
    layer: &LstmLayer,
    token_ids: &[usize],
) -> Result<SentenceEncoding> {
    if token_ids.is_empty() {
        return Err(Error::Contract("encode_sentence on empty token list".into()));
    }
    let xs = token_ids
        .iter()
        .map(|&t| emb.embed(g, ps, t))
        .collect::<Result<Vec<_>>>()?;
    let hiddens = layer.run(g, ps, &xs)?;
    let h_cols = g.concat_cols(&hiddens)?;
    let h_last = *hiddens.last().expect("non-empty");
    Ok(SentenceEncoding {
        n: hiddens.len(),
        hiddens,
        h_cols,
        h_last,
    })
}

/// Run the question LSTM; a multi-question string encodes as one sequence.
pub fn encode_question(
    g: &mut Graph,
    ps: &ParamSet,
    emb: &EmbeddingTable,
    layer: &LstmLayer,
    token_ids: &[usize],
) -> Result<QuestionEncoding> {
    if token_ids.is_empty() {
        return Err(Error::Contract("encode_question on empty token list".into()));
    }
    let xs = token_ids
        .iter()
        .map(|&t| emb.embed(g, ps, t))
        .collect::<Result<Vec<_>>>()?;
    let hiddens = layer.run(g, ps, &xs)?;
    Ok(QuestionEncoding {
        h_q: *hiddens.last().expect("non-empty"),
        n: token_ids.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ParamSet;
    use crate::rng::{seeded, stream};

    fn setup(seed: u64) -> (ParamSet, EmbeddingTable, LstmLayer, LstmLayer) {
        let mut rng = seeded(seed, stream::INIT);
        let mut ps = ParamSet::new();
        let emb = EmbeddingTable::new(&mut ps, "emb", 12, 4, &mut rng);
        let sent = LstmLayer::new(&mut ps, "sent", 4, 4, &mut rng);
        let quest = LstmLayer::new(&mut ps, "quest", 4, 4, &mut rng);
        (ps, emb, sent, quest)
    }

    #[test]
    fn single_token_h_last_is_the_only_column() {
        let (ps, emb, sent, _) = setup(1);
        let mut g = Graph::new();
        let enc = encode_sentence(&mut g, &ps, &emb, &sent, &[5]).unwrap();
        assert_eq!(enc.n, 1);
        assert_eq!(g.value(enc.h_cols).shape(), &[4, 1]);
        assert_eq!(g.value(enc.h_last).data(), g.value(enc.h_cols).data());
    }

    #[test]
    fn same_tokens_encode_identically() {
        let (ps, emb, sent, _) = setup(2);
        let mut g = Graph::new();
        let a = encode_sentence(&mut g, &ps, &emb, &sent, &[3, 4, 5]).unwrap();
        let b = encode_sentence(&mut g, &ps, &emb, &sent, &[3, 4, 5]).unwrap();
        assert_eq!(g.value(a.h_last).data(), g.value(b.h_last).data());
        assert_eq!(g.value(a.h_cols).data(), g.value(b.h_cols).data());
    }

    #[test]
    fn permuted_tokens_change_the_encoding() {
        let (ps, emb, sent, _) = setup(3);
        let mut g = Graph::new();
        let a = encode_sentence(&mut g, &ps, &emb, &sent, &[2, 3, 4]).unwrap();
        let b = encode_sentence(&mut g, &ps, &emb, &sent, &[4, 3, 2]).unwrap();
        assert_ne!(g.value(a.h_last).data(), g.value(b.h_last).data());
    }

    #[test]
    fn h_cols_column_i_is_hidden_i() {
        let (ps, emb, sent, _) = setup(4);
        let mut g = Graph::new();
        let enc = encode_sentence(&mut g, &ps, &emb, &sent, &[2, 7, 9]).unwrap();
        let cols = g.value(enc.h_cols).clone();
        for (i, h) in enc.hiddens.iter().enumerate() {
            let hv = g.value(*h);
            for r in 0..4 {
                assert_eq!(cols.at(r, i), hv.data()[r]);
            }
        }
    }

    #[test]
    fn question_encoder_uses_its_own_parameters() {
        let (ps, emb, sent, quest) = setup(5);
        let mut g = Graph::new();
        let s = encode_sentence(&mut g, &ps, &emb, &sent, &[2, 3]).unwrap();
        let q = encode_question(&mut g, &ps, &emb, &quest, &[2, 3]).unwrap();
        assert_ne!(g.value(s.h_last).data(), g.value(q.h_q).data());
    }

    #[test]
    fn empty_token_lists_are_contract_errors() {
        let (ps, emb, sent, quest) = setup(6);
        let mut g = Graph::new();
        assert!(matches!(
            encode_sentence(&mut g, &ps, &emb, &sent, &[]),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            encode_question(&mut g, &ps, &emb, &quest, &[]),
            Err(Error::Contract(_))
        ));
    }
}
