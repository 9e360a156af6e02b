//! Question-answer generation from observed history.
//!
//! High-importance sentences are quizzed directly; low-importance steps
//! revisit a uniformly sampled observed sentence. In the multi-sentence
//! phase a second question sharing the same answer may be concatenated.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::rng::Rng;
use crate::student::ActionSet;

use super::curriculum::CurriculumPhase;
use super::templates::{applicable, TemplateRule};

/// One teacher quiz: surface question text (possibly two concatenated
/// questions with one shared answer), the answer as an action index, and
/// the 1-based source sentence ids aligned with question order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAPair {
    pub question: String,
    pub answer: usize,
    pub sources: Vec<usize>,
}

/// Candidate questions for one sentence, keeping only answers that exist
/// in the action set.
fn candidates(
    rules: &[TemplateRule],
    tokens: &[String],
    actions: &ActionSet,
) -> Vec<(String, usize)> {
    applicable(rules, tokens)
        .into_iter()
        .filter_map(|(rule, bind)| {
            let (question, answer) = rule.apply(&bind);
            actions.index_of(&answer).map(|idx| (question, idx))
        })
        .collect()
}

/// Generate a quiz over `history` (tokenized sentences 1..=t, current
/// last). Returns None when no observed sentence matches any template.
pub fn generate_qa_travel(
    rules: &[TemplateRule],
    history: &[Vec<String>],
    importance: f64,
    threshold: f64,
    phase: CurriculumPhase,
    actions: &ActionSet,
    rng: &mut Rng,
) -> Option<QAPair> {
    if history.is_empty() {
        return None;
    }
    let t = history.len();
    let per_sentence: Vec<Vec<(String, usize)>> = history
        .iter()
        .map(|tokens| candidates(rules, tokens, actions))
        .collect();

    // Primary source: the current sentence when important, else a uniform
    // draw over every matching sentence seen so far (current included).
    let high = importance >= threshold;
    let primary = if high && !per_sentence[t - 1].is_empty() {
        t - 1
    } else {
        let matching: Vec<usize> = (0..t).filter(|&j| !per_sentence[j].is_empty()).collect();
        *matching.choose(rng)?
    };
    let (q0, answer) = per_sentence[primary].choose(rng)?.clone();

    let mut questions = vec![(q0, primary + 1)];
    if phase == CurriculumPhase::MultiSentence && rng.gen_bool(0.5) {
        // Optional partner: an earlier-or-other sentence whose candidate
        // shares the answer.
        let mut others: Vec<usize> = (0..t)
            .filter(|&j| j != primary && (!high || j != t - 1))
            .collect();
        others.shuffle(rng);
        'search: for j in others {
            let same: Vec<&(String, usize)> = per_sentence[j]
                .iter()
                .filter(|(_, a)| *a == answer)
                .collect();
            if let Some((q1, _)) = same.choose(rng) {
                questions.push((q1.clone(), j + 1));
                break 'search;
            }
        }
        if questions.len() == 2 && rng.gen_bool(0.5) {
            questions.swap(0, 1);
        }
    }

    let sources: Vec<usize> = questions.iter().map(|(_, j)| *j).collect();
    let question = questions
        .iter()
        .map(|(q, _)| q.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Some(QAPair {
        question,
        answer,
        sources,
    })
}

/// Dialog-side quiz: replay a uniformly sampled completed turn. Each turn
/// is (user utterance text, bot-response candidate id).
pub fn generate_qa_dialog(turns: &[(String, usize)], rng: &mut Rng) -> Option<QAPair> {
    if turns.is_empty() {
        return None;
    }
    let j = rng.gen_range(0..turns.len());
    let (utterance, candidate) = &turns[j];
    Some(QAPair {
        question: utterance.clone(),
        answer: *candidate,
        sources: vec![j + 1],
    })
}
