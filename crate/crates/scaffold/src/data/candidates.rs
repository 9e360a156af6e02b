//! Candidate response set: the enumerated action space of the dialog task.
//!
//! Every bot response (utterances and api-calls alike) maps to one stable
//! id; the student picks responses by id. Ids follow the candidates file
//! when one is supplied, else first appearance in the corpus.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::data::dialog::Dialog;
use crate::error::{Error, Result};
use crate::student::ActionSet;

/// Ordered, duplicate-free list of every possible bot response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl CandidateSet {
    fn from_items<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut items = Vec::new();
        let mut index = HashMap::new();
        for item in iter {
            if !index.contains_key(&item) {
                index.insert(item.clone(), items.len());
                items.push(item);
            }
        }
        CandidateSet { items, index }
    }

    /// Collect candidates from the corpus itself, in first-appearance order.
    pub fn from_corpus(dialogs: &[Dialog]) -> Self {
        Self::from_items(
            dialogs
                .iter()
                .flat_map(|d| d.turns.iter().filter_map(|t| t.bot.clone())),
        )
    }

    /// Read a candidates file: one response per line, optionally prefixed
    /// with a line id (`1 <response>`), duplicates collapsed to the first.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Ingestion(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Ok(Self::from_lines(&text))
    }

    /// Parse candidates from file text; see [`CandidateSet::from_file`].
    pub fn from_lines(text: &str) -> Self {
        Self::from_items(text.lines().filter_map(|line| {
            let line = line.trim_end();
            if line.is_empty() {
                return None;
            }
            let body = match line.split_once(' ') {
                Some((id, rest)) if id.chars().all(|c| c.is_ascii_digit()) => rest,
                _ => line,
            };
            Some(body.to_string())
        }))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Response text for an id. Panics on an out-of-range id, which can
    /// only come from a corrupted record file.
    pub fn get(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn resolve(&self, response: &str) -> Option<usize> {
        self.index.get(response).copied()
    }

    /// Id of a gold response; unresolvable answers are ingestion errors.
    pub fn id(&self, response: &str) -> Result<usize> {
        self.resolve(response)
            .ok_or_else(|| Error::Ingestion(format!("answer not in candidate set: {response:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }

    /// Check that every bot response of `dialogs` resolves; returns the
    /// full offender list on failure so the bad corpus is diagnosable in
    /// one pass.
    pub fn verify_resolvable(&self, dialogs: &[Dialog]) -> Result<()> {
        let mut missing: Vec<&str> = Vec::new();
        for dialog in dialogs {
            for turn in &dialog.turns {
                if let Some(bot) = &turn.bot {
                    if self.resolve(bot).is_none() && !missing.contains(&bot.as_str()) {
                        missing.push(bot);
                    }
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Ingestion(format!(
                "{} answers missing from candidates file: {}",
                missing.len(),
                missing.join("; ")
            )))
        }
    }

    /// The candidate list as a student action set (one action per id).
    pub fn to_action_set(&self) -> Result<ActionSet> {
        ActionSet::new(self.items.iter().cloned())
    }

    /// Serialize one candidate per line, in id order.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(item);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dialog::parse_dialog_str;

    #[test]
    fn identical_responses_share_one_id() {
        let text = "1 hi\thello\n2 bye\thello\n\n1 hi\thello\n2 go\tgoodbye\n";
        let corpus = parse_dialog_str(text).unwrap();
        let set = CandidateSet::from_corpus(&corpus.dialogs);
        assert_eq!(set.len(), 2);
        assert_eq!(set.resolve("hello"), Some(0));
        assert_eq!(set.resolve("goodbye"), Some(1));
    }

    #[test]
    fn corpus_ids_follow_first_appearance() {
        let text = "1 a\tzeta\n2 b\talpha\n3 c\tzeta\n";
        let corpus = parse_dialog_str(text).unwrap();
        let set = CandidateSet::from_corpus(&corpus.dialogs);
        assert_eq!(set.get(0), "zeta");
        assert_eq!(set.get(1), "alpha");
    }

    #[test]
    fn file_order_wins_and_line_ids_are_stripped() {
        let set = CandidateSet::from_lines("1 goodbye\n1 hello\n1 goodbye\n");
        assert_eq!(set.len(), 2);
        assert_eq!(set.get(0), "goodbye");
        assert_eq!(set.get(1), "hello");
        // Lines without a numeric prefix are taken whole.
        let set = CandidateSet::from_lines("api_call a b\nplain response\n");
        assert_eq!(set.get(0), "api_call a b");
        assert_eq!(set.get(1), "plain response");
    }

    #[test]
    fn ids_are_deterministic_across_reruns() {
        let text = "1 a\tx\n2 b\ty\n\n1 c\tz\n";
        let corpus = parse_dialog_str(text).unwrap();
        let a = CandidateSet::from_corpus(&corpus.dialogs);
        let b = CandidateSet::from_corpus(&corpus.dialogs);
        assert_eq!(a, b);
    }

    #[test]
    fn missing_answers_are_listed_in_the_error() {
        let text = "1 a\tknown\n2 b\tmissing one\n3 c\tmissing two\n";
        let corpus = parse_dialog_str(text).unwrap();
        let set = CandidateSet::from_lines("known\n");
        let err = set.verify_resolvable(&corpus.dialogs).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing one") && msg.contains("missing two"), "{msg}");
        assert!(msg.contains('2'), "{msg}");
    }

    #[test]
    fn candidate_lines_round_trip() {
        let set = CandidateSet::from_lines("hello there\napi_call a b c\n");
        let again = CandidateSet::from_lines(&set.to_lines());
        assert_eq!(set, again);
    }

    #[test]
    fn action_set_mirrors_candidate_ids() {
        let set = CandidateSet::from_lines("first\nsecond\n");
        let actions = set.to_action_set().unwrap();
        assert_eq!(actions.k(), 2);
        assert_eq!(actions.label(0), "first");
        assert_eq!(actions.label(1), "second");
    }
}
