//! Token↔index bijection with reserved padding and unknown slots.

use crate::error::{Error, Result};
use std::collections::HashMap;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const RESERVED: usize = 2;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    frozen: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    /// Indices including the two reserved slots.
    pub fn len(&self) -> usize {
        self.tokens.len() + RESERVED
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Assign (or look up) an index. Unknown tokens after freezing map to UNK.
    pub fn add(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        if self.frozen {
            return UNK;
        }
        let i = self.tokens.len() + RESERVED;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn get_or_unk(&self, token: &str) -> usize {
        self.index_of(token).unwrap_or(UNK)
    }

    pub fn token_at(&self, index: usize) -> Option<&str> {
        match index {
            PAD => Some(PAD_TOKEN),
            UNK => Some(UNK_TOKEN),
            i => self.tokens.get(i - RESERVED).map(String::as_str),
        }
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.get_or_unk(t)).collect()
    }

    pub fn add_all(&mut self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.add(t)).collect()
    }

    /// One token per line; line number = index - 2. Reserved slots implicit.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        let mut v = Vocabulary::new();
        for (lineno, line) in text.lines().enumerate() {
            let token = line.trim();
            if token.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "empty vocabulary line".into(),
                });
            }
            if v.index.contains_key(token) {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("duplicate token {token}"),
                });
            }
            v.add(token);
        }
        v.freeze();
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reserved_slots_are_fixed() {
        let v = Vocabulary::new();
        assert_eq!(v.token_at(PAD), Some("<pad>"));
        assert_eq!(v.token_at(UNK), Some("<unk>"));
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn add_is_idempotent_and_dense() {
        let mut v = Vocabulary::new();
        let a = v.add("north");
        let b = v.add("south");
        assert_eq!(a, 2);
        assert_eq!(b, 3);
        assert_eq!(v.add("north"), a);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn frozen_vocabulary_totalizes_to_unk() {
        let mut v = Vocabulary::new();
        v.add("museum");
        v.freeze();
        assert_eq!(v.add("zoo"), UNK);
        assert_eq!(v.get_or_unk("zoo"), UNK);
        assert_eq!(v.get_or_unk("museum"), 2);
    }

    #[test]
    fn serialization_round_trips() {
        let mut v = Vocabulary::new();
        for t in ["what", "is", "north", "coffee-shop"] {
            v.add(t);
        }
        let lines = v.to_lines();
        let back = Vocabulary::from_lines(&lines).unwrap();
        assert_eq!(back.len(), v.len());
        for t in ["what", "is", "north", "coffee-shop"] {
            assert_eq!(back.index_of(t), v.index_of(t));
        }
        assert!(back.is_frozen());
    }

    #[test]
    fn duplicate_line_is_a_parse_error() {
        assert!(Vocabulary::from_lines("a\nb\na\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_holds_for_random_vocabularies(
            tokens in proptest::collection::btree_set("[a-z]{1,8}", 1..40)
        ) {
            let mut v = Vocabulary::new();
            for t in &tokens {
                v.add(t);
            }
            // index(token_at(i)) == i over every assigned index.
            for i in 0..v.len() {
                let tok = v.token_at(i).unwrap().to_string();
                if i >= 2 {
                    prop_assert_eq!(v.index_of(&tok), Some(i));
                }
            }
            let back = Vocabulary::from_lines(&v.to_lines()).unwrap();
            for t in &tokens {
                prop_assert_eq!(back.index_of(t), v.index_of(t));
            }
        }
    }
}
