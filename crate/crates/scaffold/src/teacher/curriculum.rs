//! Curriculum phase control: start on single-sentence quizzes, switch to
//! multi-sentence quizzes once validation error stops improving.

/// Quiz complexity phase. Transitions only SingleSentence -> MultiSentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurriculumPhase {
    SingleSentence,
    MultiSentence,
}

/// True when the last `window` evaluations each improved the running best
/// validation error by less than `min_improvement` percentage points.
/// Improvement of exactly `min_improvement` counts as improvement.
pub fn detect_plateau(errors: &[f64], window: usize, min_improvement: f64) -> bool {
    let mut best = f64::INFINITY;
    let mut streak = 0usize;
    for (i, &e) in errors.iter().enumerate() {
        if i == 0 {
            best = e;
            continue;
        }
        if best - e >= min_improvement {
            streak = 0;
        } else {
            streak += 1;
        }
        if e < best {
            best = e;
        }
    }
    window > 0 && streak >= window
}

/// Phase state machine fed by validation error rates.
#[derive(Debug, Clone)]
pub struct Curriculum {
    phase: CurriculumPhase,
    window: usize,
    min_improvement: f64,
    history: Vec<f64>,
}

impl Curriculum {
    pub fn new(window: usize, min_improvement: f64) -> Curriculum {
        Curriculum {
            phase: CurriculumPhase::SingleSentence,
            window,
            min_improvement,
            history: Vec::new(),
        }
    }

    /// Rebuild mid-run state from checkpointed parts.
    pub fn from_parts(
        window: usize,
        min_improvement: f64,
        phase: CurriculumPhase,
        history: Vec<f64>,
    ) -> Curriculum {
        Curriculum {
            phase,
            window,
            min_improvement,
            history,
        }
    }

    pub fn phase(&self) -> CurriculumPhase {
        self.phase
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Record one validation error. Returns true on the single permitted
    /// phase switch.
    pub fn record(&mut self, error: f64) -> bool {
        self.history.push(error);
        if self.phase == CurriculumPhase::SingleSentence
            && detect_plateau(&self.history, self.window, self.min_improvement)
        {
            self.phase = CurriculumPhase::MultiSentence;
            return true;
        }
        false
    }
}
