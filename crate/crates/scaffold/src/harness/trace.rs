//! Inference trace rows: a human-readable record of one greedy episode with
//! the teacher active. One row per environment step; sentence presentations
//! without a question keep the question cell empty, and a repeated question
//! after a wrong answer repeats the sentence on a fresh row.

use std::fmt::Write as _;

/// One trace row. The question cell carries the 1-based source-sentence ids
/// in parentheses before the text, e.g. `(2) what is on my east ?` or
/// `(3, 1) where is the school ? what is on my north ?`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub sentence: String,
    /// Attention-change importance of the sentence; empty for the terminal
    /// row and for variants without attention.
    pub importance: Option<f64>,
    pub question: String,
    /// Student answer as an action label; empty when no question was asked.
    pub action: String,
    pub reward: Option<f64>,
}

impl TraceRow {
    pub const HEADER: &'static str = "sentence\timportance\tquestion\taction\treward";

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.sentence,
            self.importance.map(|v| format!("{v:.6}")).unwrap_or_default(),
            self.question,
            self.action,
            self.reward.map(|v| format!("{v:.3}")).unwrap_or_default(),
        )
    }
}

/// Render rows as a TSV document with a header line.
pub fn trace_to_tsv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TraceRow::HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_line());
    }
    out
}

/// Format source ids for the question cell: `(2)` or `(3, 1)`.
pub fn format_sources(sources: &[usize]) -> String {
    let inner = sources
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    format!("({inner})")
}
