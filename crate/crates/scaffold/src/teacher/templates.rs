//! Question templates: sentence-pattern inversion rules.
//!
//! Rules live in plain text, one per line: `pattern TAB question TAB slot`.
//! Patterns and questions are token sequences; `{A}` and `{B}` bind
//! attraction tokens, `{D}` binds a direction word. The answer slot names
//! which binding the question's answer comes from, so an applied rule
//! always yields a question whose answer sits in the source sentence.

use crate::error::{Error, Result};
use crate::environment::geometry::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    A,
    B,
    D,
}

impl Slot {
    fn parse(s: &str) -> Option<Slot> {
        match s {
            "A" => Some(Slot::A),
            "B" => Some(Slot::B),
            "D" => Some(Slot::D),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatToken {
    Lit(String),
    Slot(Slot),
}

fn parse_pattern(text: &str) -> Vec<PatToken> {
    text.split_whitespace()
        .map(|t| match t {
            "{A}" => PatToken::Slot(Slot::A),
            "{B}" => PatToken::Slot(Slot::B),
            "{D}" => PatToken::Slot(Slot::D),
            lit => PatToken::Lit(lit.to_string()),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    pub a: Option<String>,
    pub b: Option<String>,
    pub d: Option<String>,
}

impl Bindings {
    pub fn get(&self, slot: Slot) -> Option<&str> {
        match slot {
            Slot::A => self.a.as_deref(),
            Slot::B => self.b.as_deref(),
            Slot::D => self.d.as_deref(),
        }
    }

    fn set(&mut self, slot: Slot, value: &str) {
        let field = match slot {
            Slot::A => &mut self.a,
            Slot::B => &mut self.b,
            Slot::D => &mut self.d,
        };
        *field = Some(value.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRule {
    pub pattern: Vec<PatToken>,
    pub question: Vec<PatToken>,
    pub answer: Slot,
}

impl TemplateRule {
    /// Match the pattern against a tokenized sentence.
    pub fn matches(&self, tokens: &[String]) -> Option<Bindings> {
        if tokens.len() != self.pattern.len() {
            return None;
        }
        let mut bind = Bindings::default();
        for (pat, tok) in self.pattern.iter().zip(tokens) {
            match pat {
                PatToken::Lit(lit) => {
                    if lit != tok {
                        return None;
                    }
                }
                PatToken::Slot(Slot::D) => {
                    Direction::parse(tok)?;
                    bind.set(Slot::D, tok);
                }
                PatToken::Slot(slot) => {
                    // Attraction slots never bind direction words.
                    if Direction::parse(tok).is_some() {
                        return None;
                    }
                    bind.set(*slot, tok);
                }
            }
        }
        Some(bind)
    }

    /// Instantiate the question and extract the answer.
    pub fn apply(&self, bind: &Bindings) -> (String, String) {
        let words: Vec<&str> = self
            .question
            .iter()
            .map(|t| match t {
                PatToken::Lit(lit) => lit.as_str(),
                PatToken::Slot(s) => bind.get(*s).expect("validated at parse"),
            })
            .collect();
        let answer = bind.get(self.answer).expect("validated at parse");
        (words.join(" "), answer.to_string())
    }
}

/// Built-in rules covering the full log grammar. Same format as a rules
/// file, so it doubles as the documented example.
pub const DEFAULT_RULES: &str = "\
# pattern<TAB>question<TAB>answer slot
i am at the {A}\twhere am i at ?\tA
the {A} on my {D}\twhat is on my {D} ?\tA
the {A} on my {D}\twhat is the {A} on ?\tD
the {A} is on my {D}\twhat is on my {D} ?\tA
the {A} is on my {D}\twhat is the {A} on ?\tD
{A} is on my {D}\twhat is on my {D} ?\tA
{A} is on my {D}\twhat is the {A} on ?\tD
i see a {A} on my {D}\twhat do i see on my {D} ?\tA
the {A} on the {D} of {B}\twhat is on the {D} of the {B} ?\tA
the {A} on the {D} of {B}\twhat is the {A} {D} of ?\tB
the {A} on the {D} of the {B}\twhat is on the {D} of the {B} ?\tA
the {A} on the {D} of the {B}\twhat is the {A} {D} of ?\tB
i am heading {D}\twhere am i heading ?\tD
i am heading {D} again\twhere am i heading ?\tD
i am heading to {D}\twhere am i heading ?\tD
i am heading to {D} again\twhere am i heading ?\tD
i am heading {D} towards {A}\twhere am i heading {D} towards ?\tA
i am walking towards the {A}\twhat am i walking towards ?\tA
i reached {A}\twhere did i reach ?\tA
after leaving the {B} i reached {A}\twhere did i reach ?\tA
after leaving the {B} i reached {A}\twhere did i leave ?\tB
i just arrived to the {A}\twhere did i reach ?\tA
";

/// Parse rules text; `#` comments and blank lines are skipped.
pub fn parse_rules(text: &str) -> Result<Vec<TemplateRule>> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [pattern, question, slot] = fields.as_slice() else {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!(
                    "expected 3 tab-separated fields, got {}: {line}",
                    fields.len()
                ),
            });
        };
        let answer = Slot::parse(slot.trim()).ok_or(Error::Parse {
            line: i + 1,
            msg: format!("answer slot must be A, B or D, got: {slot}"),
        })?;
        let pattern = parse_pattern(pattern);
        let question = parse_pattern(question);
        if pattern.is_empty() || question.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "pattern and question must be non-empty".to_string(),
            });
        }
        let in_pattern = |s: Slot| pattern.contains(&PatToken::Slot(s));
        if !in_pattern(answer) {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("answer slot {slot} does not appear in the pattern"),
            });
        }
        for t in &question {
            if let PatToken::Slot(s) = t {
                if !in_pattern(*s) {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "question uses a slot the pattern does not bind".to_string(),
                    });
                }
            }
        }
        rules.push(TemplateRule {
            pattern,
            question,
            answer,
        });
    }
    Ok(rules)
}

/// The built-in rule set.
pub fn default_rules() -> Vec<TemplateRule> {
    parse_rules(DEFAULT_RULES).expect("built-in rules parse")
}

/// Load rules from a file.
pub fn load_rules(path: &std::path::Path) -> Result<Vec<TemplateRule>> {
    parse_rules(&std::fs::read_to_string(path)?)
}

/// All (rule, bindings) pairs applicable to a sentence.
pub fn applicable<'r>(
    rules: &'r [TemplateRule],
    tokens: &[String],
) -> Vec<(&'r TemplateRule, Bindings)> {
    rules
        .iter()
        .filter_map(|r| r.matches(tokens).map(|b| (r, b)))
        .collect()
}
