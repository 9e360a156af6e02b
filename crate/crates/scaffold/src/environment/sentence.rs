//! Surface grammar for travel-log sentences and questions.
//!
//! Every sentence the generator emits round-trips through `parse_sentence`,
//! which is what the replay oracle and the property tests rely on. Surface
//! variants (optional articles, "is", "again", the leaving clause) are kept
//! in the fact so realization is exact.

use crate::error::{Error, Result};
use crate::environment::geometry::{Compass, Direction};

/// How an observation sentence is phrased.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsForm {
    /// "the school on my east"
    TheOn,
    /// "the parliament is on my north"
    TheIsOn,
    /// "school is on my north"
    BareIsOn,
    /// "i see a restaurant on my south"
    See,
}

/// How an arrival sentence is phrased.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalForm {
    /// "i reached train-station" (with a leaving clause when `left` is set:
    /// "after leaving the museum, i reached train-station")
    Reached,
    /// "i just arrived to the park" (never carries a leaving clause)
    ArrivedTo,
}

/// One parsed travel-log sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceFact {
    /// "i am at the museum"
    At { a: String },
    /// Attraction observed adjacent to the traveler.
    RelObs {
        a: String,
        d: Direction,
        form: ObsForm,
    },
    /// "the coffee-shop on the south of museum" (article on the landmark
    /// is optional and recorded).
    LandmarkRel {
        a: String,
        d: Direction,
        b: String,
        the_b: bool,
    },
    /// "i am heading east" / "i am heading to south" / "... again"
    Heading {
        d: Direction,
        to: bool,
        again: bool,
    },
    /// "i am heading south towards train-station"
    HeadingTowards { d: Direction, a: String },
    /// "i am walking towards the restaurant"
    WalkingTowards { a: String },
    /// Traveler lands on an attraction.
    Arrival {
        a: String,
        left: Option<String>,
        form: ArrivalForm,
    },
}

impl SentenceFact {
    /// The attraction labels this sentence mentions.
    pub fn mentions(&self) -> Vec<&str> {
        match self {
            SentenceFact::At { a }
            | SentenceFact::RelObs { a, .. }
            | SentenceFact::HeadingTowards { a, .. }
            | SentenceFact::WalkingTowards { a } => vec![a],
            SentenceFact::LandmarkRel { a, b, .. } => vec![a, b],
            SentenceFact::Heading { .. } => vec![],
            SentenceFact::Arrival { a, left, .. } => match left {
                Some(b) => vec![a, b],
                None => vec![a],
            },
        }
    }

    /// Whether this sentence pins an attraction to a place — the kind the
    /// question generator prefers as a source.
    pub fn places_attraction(&self) -> bool {
        matches!(
            self,
            SentenceFact::At { .. }
                | SentenceFact::RelObs { .. }
                | SentenceFact::LandmarkRel { .. }
                | SentenceFact::Arrival { .. }
        )
    }
}

/// Render a fact as log text. Multi-word labels stay hyphenated here;
/// `spaced_label` callers can de-hyphenate before realization for surface
/// variety (the tokenizer re-joins them).
pub fn realize(fact: &SentenceFact) -> String {
    match fact {
        SentenceFact::At { a } => format!("i am at the {a}"),
        SentenceFact::RelObs { a, d, form } => {
            let d = d.word();
            match form {
                ObsForm::TheOn => format!("the {a} on my {d}"),
                ObsForm::TheIsOn => format!("the {a} is on my {d}"),
                ObsForm::BareIsOn => format!("{a} is on my {d}"),
                ObsForm::See => format!("i see a {a} on my {d}"),
            }
        }
        SentenceFact::LandmarkRel { a, d, b, the_b } => {
            let d = d.word();
            if *the_b {
                format!("the {a} on the {d} of the {b}")
            } else {
                format!("the {a} on the {d} of {b}")
            }
        }
        SentenceFact::Heading { d, to, again } => {
            let d = d.word();
            match (to, again) {
                (false, false) => format!("i am heading {d}"),
                (true, false) => format!("i am heading to {d}"),
                (true, true) => format!("i am heading to {d} again"),
                (false, true) => format!("i am heading {d} again"),
            }
        }
        SentenceFact::HeadingTowards { d, a } => {
            format!("i am heading {} towards {a}", d.word())
        }
        SentenceFact::WalkingTowards { a } => format!("i am walking towards the {a}"),
        SentenceFact::Arrival { a, left, form } => match (form, left) {
            (ArrivalForm::Reached, Some(b)) => {
                format!("after leaving the {b}, i reached {a}")
            }
            (ArrivalForm::Reached, None) => format!("i reached {a}"),
            (ArrivalForm::ArrivedTo, _) => format!("i just arrived to the {a}"),
        },
    }
}

/// Parse log text back into a fact. Input must already be canonical token
/// text (lowercase, multi-word labels hyphenated); `parse_sentence_text`
/// applies the tokenizer's joining first.
pub fn parse_sentence(tokens: &[&str]) -> Result<SentenceFact> {
    let fail = || {
        Error::Parse {
            line: 0,
            msg: format!("unrecognized sentence: {}", tokens.join(" ")),
        }
    };
    let dir = |w: &str| Direction::parse(w).ok_or_else(fail);
    match tokens {
        ["i", "am", "at", "the", a] => Ok(SentenceFact::At { a: a.to_string() }),
        ["the", a, "on", "my", d] => Ok(SentenceFact::RelObs {
            a: a.to_string(),
            d: dir(d)?,
            form: ObsForm::TheOn,
        }),
        ["the", a, "is", "on", "my", d] => Ok(SentenceFact::RelObs {
            a: a.to_string(),
            d: dir(d)?,
            form: ObsForm::TheIsOn,
        }),
        [a, "is", "on", "my", d] => Ok(SentenceFact::RelObs {
            a: a.to_string(),
            d: dir(d)?,
            form: ObsForm::BareIsOn,
        }),
        ["i", "see", "a", a, "on", "my", d] => Ok(SentenceFact::RelObs {
            a: a.to_string(),
            d: dir(d)?,
            form: ObsForm::See,
        }),
        ["the", a, "on", "the", d, "of", "the", b] => Ok(SentenceFact::LandmarkRel {
            a: a.to_string(),
            d: dir(d)?,
            b: b.to_string(),
            the_b: true,
        }),
        ["the", a, "on", "the", d, "of", b] => Ok(SentenceFact::LandmarkRel {
            a: a.to_string(),
            d: dir(d)?,
            b: b.to_string(),
            the_b: false,
        }),
        ["i", "am", "heading", d] => Ok(SentenceFact::Heading {
            d: dir(d)?,
            to: false,
            again: false,
        }),
        ["i", "am", "heading", d, "again"] => Ok(SentenceFact::Heading {
            d: dir(d)?,
            to: false,
            again: true,
        }),
        ["i", "am", "heading", "to", d] => Ok(SentenceFact::Heading {
            d: dir(d)?,
            to: true,
            again: false,
        }),
        ["i", "am", "heading", "to", d, "again"] => Ok(SentenceFact::Heading {
            d: dir(d)?,
            to: true,
            again: true,
        }),
        ["i", "am", "heading", d, "towards", a] => Ok(SentenceFact::HeadingTowards {
            d: dir(d)?,
            a: a.to_string(),
        }),
        ["i", "am", "walking", "towards", "the", a] => Ok(SentenceFact::WalkingTowards {
            a: a.to_string(),
        }),
        ["i", "reached", a] => Ok(SentenceFact::Arrival {
            a: a.to_string(),
            left: None,
            form: ArrivalForm::Reached,
        }),
        ["after", "leaving", "the", b, "i", "reached", a] => Ok(SentenceFact::Arrival {
            a: a.to_string(),
            left: Some(b.to_string()),
            form: ArrivalForm::Reached,
        }),
        ["i", "just", "arrived", "to", "the", a] => Ok(SentenceFact::Arrival {
            a: a.to_string(),
            left: None,
            form: ArrivalForm::ArrivedTo,
        }),
        _ => Err(fail()),
    }
}

/// Questions the system can pose or answer about a log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Question {
    /// "what is on my east ?" → attraction
    WhatOnMyD { d: Direction },
    /// "what is the school on ?" → direction
    WhatIsAOn { a: String },
    /// "what is on the south of the museum ?" → attraction
    WhatOnDOfB { d: Direction, b: String },
    /// "what is the coffee-shop south of ?" → landmark
    WhatIsADOf { a: String, d: Direction },
    /// "where am i at ?" → attraction
    WhereAmIAt,
    /// "where am i heading ?" → direction
    WhereHeading,
    /// "where am i heading south towards ?" → attraction
    WhereHeadingDTowards { d: Direction },
    /// "where did i reach ?" → attraction
    WhereDidIReach,
    /// "where did i leave ?" → attraction
    WhereDidILeave,
    /// "what do i see on my south ?" → attraction
    WhatDoISeeOnMyD { d: Direction },
    /// "what am i walking towards ?" → attraction
    WhatWalkingTowards,
    /// "what is west of the park ?" → attraction; direction may be composed
    /// ("north-east"), which only the symbolic oracle resolves exactly.
    Relative { c: Compass, c_word: String, a: String },
}

pub fn realize_question(q: &Question) -> String {
    match q {
        Question::WhatOnMyD { d } => format!("what is on my {} ?", d.word()),
        Question::WhatIsAOn { a } => format!("what is the {a} on ?"),
        Question::WhatOnDOfB { d, b } => {
            format!("what is on the {} of the {b} ?", d.word())
        }
        Question::WhatIsADOf { a, d } => format!("what is the {a} {} of ?", d.word()),
        Question::WhereAmIAt => "where am i at ?".to_string(),
        Question::WhereHeading => "where am i heading ?".to_string(),
        Question::WhereHeadingDTowards { d } => {
            format!("where am i heading {} towards ?", d.word())
        }
        Question::WhereDidIReach => "where did i reach ?".to_string(),
        Question::WhereDidILeave => "where did i leave ?".to_string(),
        Question::WhatDoISeeOnMyD { d } => format!("what do i see on my {} ?", d.word()),
        Question::WhatWalkingTowards => "what am i walking towards ?".to_string(),
        Question::Relative { c_word, a, .. } => format!("what is {c_word} of the {a} ?"),
    }
}

/// Parse question text (canonical tokens, trailing "?" optional).
pub fn parse_question(tokens: &[&str]) -> Result<Question> {
    let toks: Vec<&str> = tokens.iter().copied().filter(|t| *t != "?").collect();
    let fail = || {
        Error::Parse {
            line: 0,
            msg: format!("unrecognized question: {}", tokens.join(" ")),
        }
    };
    let dir = |w: &str| Direction::parse(w).ok_or_else(fail);
    match toks.as_slice() {
        ["what", "is", "on", "my", d] => Ok(Question::WhatOnMyD { d: dir(d)? }),
        ["what", "is", "the", a, "on"] => Ok(Question::WhatIsAOn { a: a.to_string() }),
        ["what", "is", "on", "the", d, "of", "the", b] => Ok(Question::WhatOnDOfB {
            d: dir(d)?,
            b: b.to_string(),
        }),
        ["what", "is", "the", a, d, "of"] => Ok(Question::WhatIsADOf {
            a: a.to_string(),
            d: dir(d)?,
        }),
        ["where", "am", "i", "at"] => Ok(Question::WhereAmIAt),
        ["where", "am", "i", "heading"] => Ok(Question::WhereHeading),
        ["where", "am", "i", "heading", d, "towards"] => {
            Ok(Question::WhereHeadingDTowards { d: dir(d)? })
        }
        ["where", "did", "i", "reach"] => Ok(Question::WhereDidIReach),
        ["where", "did", "i", "leave"] => Ok(Question::WhereDidILeave),
        ["what", "do", "i", "see", "on", "my", d] => {
            Ok(Question::WhatDoISeeOnMyD { d: dir(d)? })
        }
        ["what", "am", "i", "walking", "towards"] => Ok(Question::WhatWalkingTowards),
        ["what", "is", c, "of", "the", a] => Ok(Question::Relative {
            c: Compass::parse(c)?,
            c_word: c.to_string(),
            a: a.to_string(),
        }),
        _ => Err(fail()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn parses_every_observed_sentence_form() {
        let cases = [
            "i am at the museum",
            "the school on my east",
            "i am heading to south",
            "the coffee-shop on the south of museum",
            "the parliament is on my north",
            "i am heading south towards train-station",
            "after leaving the museum, i reached train-station",
            "i am heading east",
            "school is on my north",
            "the coffee-shop on my east",
            "the park is on my east",
            "i am heading to east again",
            "the school on my north",
            "i just arrived to the park",
            "i see a restaurant on my south",
            "coffee-shop is on my west",
            "i am walking towards the restaurant",
        ];
        for text in cases {
            let cleaned = text.replace(',', "");
            let fact = parse_sentence(&toks(&cleaned)).unwrap_or_else(|e| {
                panic!("{text}: {e}");
            });
            let back = realize(&fact).replace(',', "");
            assert_eq!(back, cleaned, "round trip for {text}");
        }
    }

    #[test]
    fn realize_parse_round_trip_covers_all_variants() {
        use SentenceFact::*;
        let facts = vec![
            At { a: "museum".into() },
            RelObs { a: "school".into(), d: Direction::East, form: ObsForm::TheOn },
            RelObs { a: "parliament".into(), d: Direction::North, form: ObsForm::TheIsOn },
            RelObs { a: "school".into(), d: Direction::North, form: ObsForm::BareIsOn },
            RelObs { a: "restaurant".into(), d: Direction::South, form: ObsForm::See },
            LandmarkRel {
                a: "coffee-shop".into(),
                d: Direction::South,
                b: "museum".into(),
                the_b: false,
            },
            LandmarkRel {
                a: "bakery".into(),
                d: Direction::West,
                b: "park".into(),
                the_b: true,
            },
            Heading { d: Direction::South, to: true, again: false },
            Heading { d: Direction::East, to: false, again: false },
            Heading { d: Direction::East, to: true, again: true },
            Heading { d: Direction::West, to: false, again: true },
            HeadingTowards { d: Direction::South, a: "train-station".into() },
            WalkingTowards { a: "restaurant".into() },
            Arrival { a: "train-station".into(), left: Some("museum".into()), form: ArrivalForm::Reached },
            Arrival { a: "zoo".into(), left: None, form: ArrivalForm::Reached },
            Arrival { a: "park".into(), left: None, form: ArrivalForm::ArrivedTo },
        ];
        for fact in facts {
            let text = realize(&fact).replace(',', "");
            let parsed = parse_sentence(&toks(&text)).unwrap();
            assert_eq!(parsed, fact, "{text}");
        }
    }

    #[test]
    fn question_round_trip() {
        use Question::*;
        let questions = vec![
            WhatOnMyD { d: Direction::East },
            WhatIsAOn { a: "school".into() },
            WhatOnDOfB { d: Direction::South, b: "museum".into() },
            WhatIsADOf { a: "coffee-shop".into(), d: Direction::South },
            WhereAmIAt,
            WhereHeading,
            WhereHeadingDTowards { d: Direction::South },
            WhereDidIReach,
            WhereDidILeave,
            WhatDoISeeOnMyD { d: Direction::South },
            WhatWalkingTowards,
            Relative { c: Compass::parse("west").unwrap(), c_word: "west".into(), a: "park".into() },
            Relative {
                c: Compass::parse("north-east").unwrap(),
                c_word: "north-east".into(),
                a: "zoo".into(),
            },
        ];
        for q in questions {
            let text = realize_question(&q);
            let parsed = parse_question(&toks(&text)).unwrap();
            assert_eq!(parsed, q, "{text}");
        }
    }

    #[test]
    fn mentions_and_placement_classification() {
        let f = parse_sentence(&toks("after leaving the museum i reached train-station")).unwrap();
        assert_eq!(f.mentions(), vec!["train-station", "museum"]);
        assert!(f.places_attraction());
        let h = parse_sentence(&toks("i am heading to south")).unwrap();
        assert!(h.mentions().is_empty());
        assert!(!h.places_attraction());
        let w = parse_sentence(&toks("i am walking towards the restaurant")).unwrap();
        assert!(!w.places_attraction());
    }

    #[test]
    fn gibberish_is_rejected_with_text_in_error() {
        let err = parse_sentence(&toks("the museum flies north")).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("museum flies"), "{msg}");
        assert!(parse_question(&toks("why is the sky blue ?")).is_err());
    }
}
