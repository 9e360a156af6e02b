//! Symbolic log oracle: replays a log positionally and answers questions.
//!
//! Replay runs in a start-relative frame (origin at the traveler's first
//! position). Heading sentences move one cell; arrivals snap the traveler
//! onto the attraction's known cell; observation sentences pin attractions
//! relative to the traveler or a named landmark, later placements winning.
//! Relational lookups scan placement states newest-first, so a relation
//! that held earlier in the walk is still answerable after the map moved
//! on, while traveler-relative questions read only the current state.

use crate::error::{Error, Result};

use super::geometry::{Cell, Direction};
use super::log::travel_tokenizer;
use super::sentence::{parse_question, realize_question, Question, SentenceFact};

#[derive(Debug, Clone)]
struct Placement {
    label: String,
    cell: Cell,
}

/// Replayed log state.
#[derive(Debug, Clone)]
pub struct ReplayState {
    pub pos: Cell,
    placements: Vec<Placement>,
    last_heading: Option<Direction>,
    towards: Vec<(Direction, String)>,
    walking: Vec<String>,
    arrivals: Vec<(String, Option<String>)>,
}

impl ReplayState {
    pub fn replay(facts: &[SentenceFact]) -> ReplayState {
        let mut state = ReplayState {
            pos: Cell::new(0, 0),
            placements: Vec::new(),
            last_heading: None,
            towards: Vec::new(),
            walking: Vec::new(),
            arrivals: Vec::new(),
        };
        for fact in facts {
            state.apply(fact);
        }
        state
    }

    fn place(&mut self, label: &str, cell: Cell) {
        self.placements.push(Placement {
            label: label.to_string(),
            cell,
        });
    }

    fn apply(&mut self, fact: &SentenceFact) {
        match fact {
            SentenceFact::At { a } => {
                let pos = self.pos;
                self.place(a, pos);
            }
            SentenceFact::RelObs { a, d, .. } => {
                let cell = self.pos.step(*d);
                self.place(a, cell);
            }
            SentenceFact::LandmarkRel { a, d, b, .. } => {
                // Needs the landmark's cell; skip silently if unknown.
                if let Some(bc) = self.cell_of(b) {
                    self.place(a, bc.step(*d));
                }
            }
            SentenceFact::Heading { d, .. } => {
                self.pos = self.pos.step(*d);
                self.last_heading = Some(*d);
            }
            SentenceFact::HeadingTowards { d, a } => {
                self.pos = self.pos.step(*d);
                self.last_heading = Some(*d);
                self.towards.push((*d, a.clone()));
            }
            SentenceFact::WalkingTowards { a } => {
                // No direction given; the following arrival re-syncs position.
                self.walking.push(a.clone());
            }
            SentenceFact::Arrival { a, left, .. } => {
                if let Some(cell) = self.cell_of(a) {
                    self.pos = cell;
                }
                let pos = self.pos;
                self.place(a, pos);
                self.arrivals.push((a.clone(), left.clone()));
            }
        }
    }

    /// Last-written cell of `label` within the first `upto` placements.
    fn cell_of_at(&self, label: &str, upto: usize) -> Option<Cell> {
        self.placements[..upto]
            .iter()
            .rev()
            .find(|p| p.label == label)
            .map(|p| p.cell)
    }

    pub fn cell_of(&self, label: &str) -> Option<Cell> {
        self.cell_of_at(label, self.placements.len())
    }

    /// Which attraction occupies `cell` in the state after `upto`
    /// placements. Only each label's last write counts; on collisions the
    /// most recently placed label wins.
    fn occupant_at(&self, cell: Cell, upto: usize, exclude: &str) -> Option<&str> {
        let mut superseded: Vec<&str> = Vec::new();
        for p in self.placements[..upto].iter().rev() {
            if superseded.iter().any(|s| *s == p.label) {
                continue;
            }
            if p.label != exclude && p.cell == cell {
                return Some(&p.label);
            }
            superseded.push(&p.label);
        }
        None
    }

    pub fn occupant(&self, cell: Cell) -> Option<&str> {
        self.occupant_at(cell, self.placements.len(), "")
    }

    /// Newest-first scan: the attraction at `anchor + offset` in the most
    /// recent placement state where both the anchor and some occupant are
    /// known.
    fn relative_scan(&self, anchor: &str, dx: i32, dy: i32) -> Option<&str> {
        for upto in (1..=self.placements.len()).rev() {
            let Some(ac) = self.cell_of_at(anchor, upto) else {
                // The anchor's first placement is behind us; earlier states
                // cannot know it either.
                return None;
            };
            let target = Cell::new(ac.x + dx, ac.y + dy);
            if let Some(b) = self.occupant_at(target, upto, anchor) {
                return Some(b);
            }
        }
        None
    }
}

/// Answer a question against the full log.
pub fn oracle_answer(facts: &[SentenceFact], question: &Question) -> Result<String> {
    oracle_answer_prefix(facts, facts.len(), question)
}

/// Answer a question against the state after the first `upto` sentences.
/// Traveler-relative wording ("my", "where am i") resolves at that point.
pub fn oracle_answer_prefix(
    facts: &[SentenceFact],
    upto: usize,
    question: &Question,
) -> Result<String> {
    if upto > facts.len() {
        return Err(Error::Contract(format!(
            "prefix {upto} exceeds log length {}",
            facts.len()
        )));
    }
    let state = ReplayState::replay(&facts[..upto]);
    let unanswerable = || Error::Unanswerable(realize_question(question));
    let answer = match question {
        Question::WhatOnMyD { d } | Question::WhatDoISeeOnMyD { d } => state
            .occupant(state.pos.step(*d))
            .map(str::to_string)
            .ok_or_else(unanswerable)?,
        Question::WhatIsAOn { a } => {
            let cell = state.cell_of(a).ok_or_else(unanswerable)?;
            let d = state
                .pos
                .direction_to(cell)
                .ok_or_else(unanswerable)?;
            d.word().to_string()
        }
        Question::WhatOnDOfB { d, b } => {
            let (dx, dy) = d.offset();
            state
                .relative_scan(b, dx, dy)
                .map(str::to_string)
                .ok_or_else(unanswerable)?
        }
        Question::WhatIsADOf { a, d } => {
            // "a is d of which landmark": the landmark sits one step against d.
            let (dx, dy) = d.offset();
            state
                .relative_scan(a, -dx, -dy)
                .map(str::to_string)
                .ok_or_else(unanswerable)?
        }
        Question::WhereAmIAt => state
            .occupant(state.pos)
            .map(str::to_string)
            .ok_or_else(unanswerable)?,
        Question::WhereHeading => state
            .last_heading
            .map(|d| d.word().to_string())
            .ok_or_else(unanswerable)?,
        Question::WhereHeadingDTowards { d } => state
            .towards
            .iter()
            .rev()
            .find(|(hd, _)| hd == d)
            .map(|(_, a)| a.clone())
            .ok_or_else(unanswerable)?,
        Question::WhereDidIReach => state
            .arrivals
            .last()
            .map(|(a, _)| a.clone())
            .ok_or_else(unanswerable)?,
        Question::WhereDidILeave => {
            let last = state.arrivals.last().ok_or_else(unanswerable)?;
            match &last.1 {
                Some(b) => b.clone(),
                None if state.arrivals.len() >= 2 => {
                    state.arrivals[state.arrivals.len() - 2].0.clone()
                }
                None => return Err(unanswerable()),
            }
        }
        Question::WhatWalkingTowards => state
            .walking
            .last()
            .cloned()
            .ok_or_else(unanswerable)?,
        Question::Relative { c, a, .. } => state
            .relative_scan(a, c.dx, c.dy)
            .map(str::to_string)
            .ok_or_else(unanswerable)?,
    };
    Ok(answer)
}

/// Parse question surface text with the label-aware tokenizer.
pub fn parse_question_text(text: &str, labels: &[String]) -> Result<Question> {
    let tok = travel_tokenizer(labels);
    let tokens = tok.tokenize(text);
    let refs: Vec<&str> = tokens.iter().map(|t| t.as_str()).collect();
    parse_question(&refs)
}

/// Convenience: answer surface-text question against surface-text handling
/// done by the caller (facts already parsed).
pub fn oracle_answer_text(
    facts: &[SentenceFact],
    question: &str,
    labels: &[String],
) -> Result<String> {
    let q = parse_question_text(question, labels)?;
    oracle_answer(facts, &q)
}
