//! Incremental teacher-student reinforcement learning for text reasoning.
//!
//! A student reads a text log sentence by sentence, maintains a gated episode
//! memory with word-level attention, and answers questions with an epsilon-greedy
//! Q-learner. A teacher watches the attention statistics and asks scaffolding
//! questions about sentences the student glossed over. Includes a synthetic
//! travel-log environment with an exact oracle, a dialog corpus loader, and a
//! deterministic training harness.

pub mod data;
pub mod encoders;
pub mod environment;
pub mod error;
pub mod harness;
pub mod memory;
pub mod numerics;
pub mod rng;
pub mod student;
pub mod teacher;

pub use error::{Error, Result};
