//! Per-candidate match features for the restaurant dialog task.
//!
//! Each candidate response gets 7 binary indicators, one per knowledge-base
//! field, set when some token of that field's type appears in both the
//! candidate and the dialog so far. Field membership comes from the task
//! knowledge-base file when one is available and falls back to entity
//! suffix patterns (`..._phone`, `..._address`, `..._rating`, with `-` or
//! `_` as the separator) otherwise.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Knowledge-base fields, in feature order.
pub const FIELD_NAMES: [&str; 7] = [
    "cuisine",
    "location",
    "price",
    "phone",
    "address",
    "rating",
    "party-size",
];

const CUISINE: usize = 0;
const LOCATION: usize = 1;
const PRICE: usize = 2;
const PHONE: usize = 3;
const ADDRESS: usize = 4;
const RATING: usize = 5;
const PARTY_SIZE: usize = 6;

/// 7 binary indicators, one per entry of [`FIELD_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchFeatures(pub [f64; 7]);

impl MatchFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Token sets for the 7 knowledge-base fields.
#[derive(Debug, Clone, Default)]
pub struct KbLexicons {
    fields: [HashSet<String>; 7],
}

fn field_of_kb_key(key: &str) -> Option<usize> {
    match key {
        "R_cuisine" | "R-cuisine" => Some(CUISINE),
        "R_location" | "R-location" => Some(LOCATION),
        "R_price" | "R-price" => Some(PRICE),
        "R_phone" | "R-phone" => Some(PHONE),
        "R_address" | "R-address" => Some(ADDRESS),
        "R_rating" | "R-rating" => Some(RATING),
        "R_number" | "R-number" => Some(PARTY_SIZE),
        _ => None,
    }
}

fn field_of_suffix(token: &str) -> Option<usize> {
    for (suffix, field) in [("phone", PHONE), ("address", ADDRESS), ("rating", RATING)] {
        let n = suffix.len();
        if token.len() > n + 1 && token.ends_with(suffix) {
            let sep = token.as_bytes()[token.len() - n - 1];
            if sep == b'_' || sep == b'-' {
                return Some(field);
            }
        }
    }
    None
}

impl KbLexicons {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one token to a field's lexicon. `field` indexes [`FIELD_NAMES`].
    pub fn insert(&mut self, field: usize, token: &str) -> Result<()> {
        if field >= FIELD_NAMES.len() {
            return Err(Error::Contract(format!(
                "field index {field} out of range (have {})",
                FIELD_NAMES.len()
            )));
        }
        self.fields[field].insert(token.to_string());
        Ok(())
    }

    /// Parse a knowledge-base file of `<id> <name> <R_field> <value>`
    /// lines. Values join their field's lexicon; unknown field keys are
    /// skipped so task-specific extras do not break ingestion.
    pub fn from_kb_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Ingestion(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_kb_lines(&text)
    }

    /// Parse knowledge-base file text; see [`KbLexicons::from_kb_file`].
    pub fn from_kb_lines(text: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0].parse::<usize>().is_err() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `<id> <name> <R_field> <value>`, got {line:?}"),
                });
            }
            if let Some(field) = field_of_kb_key(parts[2]) {
                lex.fields[field].insert(parts[3].to_string());
            }
        }
        Ok(lex)
    }

    /// Field of a token: lexicon lookup first, then suffix patterns.
    pub fn field_of(&self, token: &str) -> Option<usize> {
        for (field, set) in self.fields.iter().enumerate() {
            if set.contains(token) {
                return Some(field);
            }
        }
        field_of_suffix(token)
    }

    pub fn field_len(&self, field: usize) -> usize {
        self.fields.get(field).map_or(0, HashSet::len)
    }
}

/// Compute the 7 match features of one candidate against the tokens seen
/// so far (context plus current question). Feature j fires when a field-j
/// token occurs in both.
pub fn match_features(seen: &HashSet<String>, candidate: &str, lex: &KbLexicons) -> MatchFeatures {
    let mut features = MatchFeatures::default();
    for token in candidate.split_whitespace() {
        if let Some(field) = lex.field_of(token) {
            if seen.contains(token) {
                features.0[field] = 1.0;
            }
        }
    }
    features
}

/// Flatten a sample's context and question into the token set that
/// [`match_features`] scans.
pub fn seen_tokens(context: &[Vec<String>], question: &[String]) -> HashSet<String> {
    let mut seen: HashSet<String> = HashSet::new();
    for sentence in context {
        seen.extend(sentence.iter().cloned());
    }
    seen.extend(question.iter().cloned());
    seen
}
