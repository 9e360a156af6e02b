//! Whitespace/punctuation tokenization with multi-word name joining.

/// Function words stripped from travel-log text when the stop-list flag is
/// on. Deliberately small: question words (what/where/which), directions,
/// attraction names, and verbs of motion must survive.
pub const STOP_WORDS: &[&str] = &[
    "the", "a", "an", "i", "am", "is", "are", "to", "my", "of", "it", "do", "does", "just",
    "after",
];

/// Characters trimmed from token edges. Interior hyphens, apostrophes,
/// underscores, and angle brackets are kept so names like `coffee-shop`,
/// `api_call`, and `<silence>` stay whole.
const EDGE_PUNCT: &[char] = &['?', '.', ',', '!', ';', ':', '"', '(', ')'];

#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    /// Multi-word surface forms joined with hyphens before splitting,
    /// longest first so overlapping phrases resolve deterministically.
    multiword: Vec<String>,
    pub strip_stop_words: bool,
}

impl Tokenizer {
    pub fn new() -> Self {
        Tokenizer::default()
    }

    pub fn with_stop_words(mut self, on: bool) -> Self {
        self.strip_stop_words = on;
        self
    }

    /// Register surface forms like "coffee shop" that must become one token.
    pub fn with_multiword<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.multiword = names
            .into_iter()
            .map(Into::into)
            .filter(|n| n.contains(' '))
            .collect();
        self.multiword
            .sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut lowered = text.to_lowercase();
        for phrase in &self.multiword {
            let joined = phrase.replace(' ', "-");
            lowered = replace_whole_phrase(&lowered, phrase, &joined);
        }
        lowered
            .split_whitespace()
            .filter_map(|raw| {
                let token = raw.trim_matches(EDGE_PUNCT);
                if token.is_empty() {
                    return None;
                }
                if self.strip_stop_words && STOP_WORDS.contains(&token) {
                    return None;
                }
                Some(token.to_string())
            })
            .collect()
    }
}

/// Replace `phrase` with `joined` only at word boundaries.
fn replace_whole_phrase(text: &str, phrase: &str, joined: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(phrase) {
        let before_ok = pos == 0
            || !rest[..pos]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_alphanumeric());
        let after = &rest[pos + phrase.len()..];
        let after_ok = !after.chars().next().is_some_and(|c| c.is_alphanumeric());
        out.push_str(&rest[..pos]);
        if before_ok && after_ok {
            out.push_str(joined);
        } else {
            out.push_str(phrase);
        }
        rest = after;
    }
    out.push_str(rest);
    out
}
