//! Action labels and the assembled agent state.

use crate::error::{Error, Result};
use crate::numerics::{Graph, Var};

/// Ordered, unique answer labels. Index order is fixed for a whole run; the
/// Q-network's output column i scores `labels[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSet {
    labels: Vec<String>,
}

impl ActionSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Contract("action set must not be empty".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Contract(format!("duplicate action label {l}")));
            }
        }
        Ok(ActionSet { labels })
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Numeric snapshot of the state vector `[o; m_flat; h_q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub data: Vec<f64>,
}

impl AgentState {
    pub fn width(&self) -> usize {
        self.data.len()
    }
}

/// Concatenate the three state blocks in their fixed order.
/// With attention ablated, pass `m_flat = None`; the state shrinks by d·N_max.
pub fn assemble_state(
    g: &mut Graph,
    o: Var,
    m_flat: Option<Var>,
    h_q: Var,
) -> Result<Var> {
    match m_flat {
        Some(m) => g.concat_rows(&[o, m, h_q]),
        None => g.concat_rows(&[o, h_q]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    #[test]
    fn action_set_rejects_empty_and_duplicates() {
        assert!(ActionSet::new(Vec::<String>::new()).is_err());
        assert!(ActionSet::new(["a", "b", "a"]).is_err());
        let ok = ActionSet::new(["north", "south"]).unwrap();
        assert_eq!(ok.k(), 2);
        assert_eq!(ok.index_of("south"), Some(1));
        assert_eq!(ok.label(0), "north");
    }

    #[test]
    fn state_width_is_d_times_n_max_plus_two() {
        let (d, n_max) = (8, 4);
        let mut g = Graph::new();
        let o = g.input(Tensor::zeros(vec![d, 1]));
        let m = g.input(Tensor::zeros(vec![d * n_max, 1]));
        let hq = g.input(Tensor::zeros(vec![d, 1]));
        let s = assemble_state(&mut g, o, Some(m), hq).unwrap();
        assert_eq!(g.value(s).len(), d * (n_max + 2));
        assert_eq!(g.value(s).len(), 48);
    }

    #[test]
    fn zero_blocks_give_zero_state() {
        let mut g = Graph::new();
        let o = g.input(Tensor::zeros(vec![3, 1]));
        let m = g.input(Tensor::zeros(vec![6, 1]));
        let hq = g.input(Tensor::zeros(vec![3, 1]));
        let s = assemble_state(&mut g, o, Some(m), hq).unwrap();
        assert!(g.value(s).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn different_questions_change_only_o_and_hq_blocks() {
        let d = 3;
        let m_flat_data = vec![0.5, 0.4, 0.3, 0.2, 0.1, 0.0];
        let mut g = Graph::new();
        let m = g.input(Tensor::vector(m_flat_data.clone()));
        let o1 = g.input_vector(vec![1.0, 2.0, 3.0]);
        let hq1 = g.input_vector(vec![-1.0, -2.0, -3.0]);
        let o2 = g.input_vector(vec![9.0, 8.0, 7.0]);
        let hq2 = g.input_vector(vec![0.1, 0.2, 0.3]);
        let s1 = assemble_state(&mut g, o1, Some(m), hq1).unwrap();
        let s2 = assemble_state(&mut g, o2, Some(m), hq2).unwrap();
        let (a, b) = (g.value(s1).data(), g.value(s2).data());
        assert_ne!(&a[..d], &b[..d]);
        assert_eq!(&a[d..d + 6], &b[d..d + 6]);
        assert_ne!(&a[d + 6..], &b[d + 6..]);
    }

    #[test]
    fn ablated_attention_shrinks_the_state() {
        let mut g = Graph::new();
        let o = g.input(Tensor::zeros(vec![4, 1]));
        let hq = g.input(Tensor::zeros(vec![4, 1]));
        let s = assemble_state(&mut g, o, None, hq).unwrap();
        assert_eq!(g.value(s).len(), 8);
    }
}
