//! Transition storage for experience replay.

use crate::rng::Rng;
use rand::Rng as _;

/// Everything needed to rebuild the online Q-value of a stored step through
/// the full network, not just the Q-head. The previous step's numerics give
/// the gate parameters a one-step gradient path; anything older is truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct RecomputeCtx {
    pub sentence_tokens: Vec<usize>,
    pub question_tokens: Vec<usize>,
    /// Episode memory at the time the state was formed.
    pub memory_in: Vec<f64>,
    /// Final hidden of the previous sentence, when one exists.
    pub prev_h_last: Option<Vec<f64>>,
    /// Episode memory before the previous sentence folded in.
    pub prev_memory: Option<Vec<f64>>,
    /// Per-candidate match features (dialog track only).
    pub match_feats: Option<Vec<Vec<f64>>>,
    /// Match features of the successor state, for the bootstrap target.
    pub match_feats_next: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
    /// Present when the trainer recomputes states end to end.
    pub ctx: Option<RecomputeCtx>,
}

/// Fixed-capacity ring; eviction is oldest-first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
    pub pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: Vec::with_capacity(capacity.min(4096)),
            capacity,
            next: 0,
            pushed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
        self.pushed += 1;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Ring write position; with `iter` order, `pushed` and `capacity` this
    /// fully describes the buffer for checkpointing.
    pub fn next_slot(&self) -> usize {
        self.next
    }

    /// Rebuild an exact buffer (slot order preserved) from checkpointed
    /// parts, so replay sampling continues identically after a restore.
    pub fn from_parts(capacity: usize, items: Vec<Transition>, next: usize, pushed: u64) -> Self {
        assert!(capacity > 0 && items.len() <= capacity && next < capacity.max(1));
        ReplayBuffer {
            items,
            capacity,
            next,
            pushed,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform sample of slot indices, with replacement.
    pub fn sample_indices(&self, batch: usize, rng: &mut Rng) -> Vec<usize> {
        (0..batch).map(|_| rng.gen_range(0..self.items.len())).collect()
    }
}
