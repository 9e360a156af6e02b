//! Travel-log environment: grid worlds, walk-generated logs, the symbolic
//! replay oracle, and the episode reward protocol.

pub mod geometry;
pub mod log;
pub mod oracle;
pub mod runner;
pub mod sentence;
pub mod world;

pub use geometry::{Cell, Compass, Direction, DIRECTIONS, GRID};
pub use log::{
    generate_corpus, generate_log, parse_log_sentences, read_corpus, travel_tokenizer,
    write_corpus, CorpusSpec, LogCorpus, TravelLog,
};
pub use oracle::{
    oracle_answer, oracle_answer_prefix, oracle_answer_text, parse_question_text, ReplayState,
};
pub use runner::{terminal_reward, Directive, EpisodeRunner, RewardEvent};
pub use sentence::{
    parse_question, parse_sentence, realize, realize_question, ArrivalForm, ObsForm, Question,
    SentenceFact,
};
pub use world::{generate_world, TravelWorld, LABELS};
