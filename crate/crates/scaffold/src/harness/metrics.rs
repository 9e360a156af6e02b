//! Append-only training metrics with a fixed TSV wire format, so identical
//! runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One periodic snapshot of a training run. Optional fields print as empty
/// cells: train loss is absent before the first update, validation error
/// between evaluations, test error until the final evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub restart: usize,
    /// Cumulative environment steps within the restart; strictly monotone
    /// across the rows of one restart.
    pub step: u64,
    pub episode: u64,
    pub train_loss: Option<f64>,
    pub val_error: Option<f64>,
    pub test_error: Option<f64>,
    pub eps: f64,
    /// Mean absolute episode-memory activation over the window's question
    /// events.
    pub mean_abs_m: f64,
    pub questions_asked: u64,
    pub questions_correct: u64,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricsRow {
    pub const HEADER: &'static str = "restart\tstep\tepisode\ttrain_loss\tval_error\ttest_error\teps\tmean_abs_m\tquestions_asked\tquestions_correct";

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
            self.restart,
            self.step,
            self.episode,
            cell(self.train_loss),
            cell(self.val_error),
            cell(self.test_error),
            self.eps,
            self.mean_abs_m,
            self.questions_asked,
            self.questions_correct,
        )
    }
}

/// Collects rows in order and enforces the append-only, monotone-step
/// contract per restart.
#[derive(Debug, Clone, Default)]
pub struct MetricsWriter {
    rows: Vec<MetricsRow>,
}

impl MetricsWriter {
    pub fn new() -> Self {
        MetricsWriter::default()
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn push(&mut self, row: MetricsRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.restart < last.restart {
                return Err(Error::Contract(format!(
                    "metrics restart went backwards: {} after {}",
                    row.restart, last.restart
                )));
            }
            if row.restart == last.restart && row.step <= last.step {
                return Err(Error::Contract(format!(
                    "metrics step must increase within a restart: {} after {}",
                    row.step, last.step
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(MetricsRow::HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.to_line());
        }
        out
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }
}
