//! Tokenization, vocabulary, embeddings, and the LSTM encoders.

mod encode;
mod lstm;
mod tokenize;
mod vocab;

pub use encode::{encode_question, encode_sentence, QuestionEncoding, SentenceEncoding};
pub use lstm::{EmbeddingTable, LstmLayer, LstmStack};
pub use tokenize::{Tokenizer, STOP_WORDS};
pub use vocab::{Vocabulary, PAD, UNK};
