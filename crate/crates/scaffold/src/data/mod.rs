//! Dialog-track data handling: corpus ingestion, candidate-response
//! action spaces, per-candidate match features, out-of-vocabulary splits,
//! and a synthetic restaurant-booking corpus generator.

pub mod candidates;
pub mod dialog;
pub mod features;
pub mod synth;

pub use candidates::CandidateSet;
pub use dialog::{
    build_dialog_vocab, decode_record, encode_record, load_oov_split, parse_dialog_file,
    parse_dialog_str, serialize_dialogs, to_samples, write_records, Dialog, DialogCorpus,
    DialogSample, DialogTurn, OovSplit,
};
pub use features::{match_features, seen_tokens, KbLexicons, MatchFeatures, FIELD_NAMES};
pub use synth::{
    all_candidates, generate_dialog, generate_dialogs, kb_file_text, substitute_entities,
    DialogSpec,
};
