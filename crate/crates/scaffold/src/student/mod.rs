//! The student: question-sentence fusion, state assembly, Q-network,
//! exploration, replay, and the DQN update.

mod dqn;
mod qnet;
mod qs;
mod replay;
mod state;

pub use dqn::{dqn_update, sync_target, td_target, DqnOutcome};
pub use qnet::{greedy_action, select_action, EpsSchedule, QNetwork};
pub use qs::{qs_encode, Interaction, QSParams};
pub use replay::{RecomputeCtx, ReplayBuffer, Transition};
pub use state::{assemble_state, ActionSet, AgentState};
