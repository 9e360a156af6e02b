//! Episode protocol: per-question rewards, retrials, early failure, and the
//! terminal bonus.
//!
//! A correct answer earns +1 and the log advances; a wrong answer earns -1
//! and the same sentence is re-presented, up to `max_trials` attempts after
//! which the log advances anyway. The episode fails early once total wrong
//! answers exceed half the log's sentence count. The final answer closes
//! the episode with a bonus of (correct/asked)*10, signed by whether that
//! final answer was right.

use crate::error::{Error, Result};

/// What the driver should do after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    /// Re-present the same sentence and question.
    Stay,
    /// Move to the next sentence.
    Advance,
    /// Episode failed early; the step's reward is terminal.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardEvent {
    pub value: f64,
    pub terminal: bool,
}

/// Signed terminal bonus. `k` counts every correct answer including the
/// final one; `t` counts every question event including the final one.
pub fn terminal_reward(k: usize, t: usize, final_correct: bool) -> Result<f64> {
    if t == 0 {
        return Err(Error::Contract(
            "terminal reward over zero question events".to_string(),
        ));
    }
    if k > t {
        return Err(Error::Contract(format!(
            "correct count {k} exceeds question count {t}"
        )));
    }
    let magnitude = (k as f64 / t as f64) * 10.0;
    Ok(if final_correct { magnitude } else { -magnitude })
}

#[derive(Debug, Clone)]
pub struct EpisodeRunner {
    t_sentences: usize,
    max_trials: usize,
    trials_on_current: usize,
    wrong_total: usize,
    questions_asked: usize,
    correct_total: usize,
    terminal: bool,
}

impl EpisodeRunner {
    pub fn new(t_sentences: usize, max_trials: usize) -> Result<Self> {
        if t_sentences == 0 {
            return Err(Error::Contract("episode needs at least one sentence".into()));
        }
        if max_trials == 0 {
            return Err(Error::Contract("max_trials must be at least 1".into()));
        }
        Ok(EpisodeRunner {
            t_sentences,
            max_trials,
            trials_on_current: 0,
            wrong_total: 0,
            questions_asked: 0,
            correct_total: 0,
            terminal: false,
        })
    }

    pub fn questions_asked(&self) -> usize {
        self.questions_asked
    }

    pub fn correct_total(&self) -> usize {
        self.correct_total
    }

    pub fn wrong_total(&self) -> usize {
        self.wrong_total
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn check_live(&self) -> Result<()> {
        if self.terminal {
            return Err(Error::Contract("step on a finished episode".into()));
        }
        Ok(())
    }

    /// Judge one teacher-question answer.
    pub fn step(&mut self, correct: bool) -> Result<(RewardEvent, Directive)> {
        self.check_live()?;
        self.questions_asked += 1;
        if correct {
            self.correct_total += 1;
            self.trials_on_current = 0;
            return Ok((
                RewardEvent {
                    value: 1.0,
                    terminal: false,
                },
                Directive::Advance,
            ));
        }
        self.wrong_total += 1;
        // Strictly more than half the sentences wrong ends the episode.
        if self.wrong_total * 2 > self.t_sentences {
            self.terminal = true;
            return Ok((
                RewardEvent {
                    value: -1.0,
                    terminal: true,
                },
                Directive::Failed,
            ));
        }
        self.trials_on_current += 1;
        if self.trials_on_current >= self.max_trials {
            self.trials_on_current = 0;
            Ok((
                RewardEvent {
                    value: -1.0,
                    terminal: false,
                },
                Directive::Advance,
            ))
        } else {
            Ok((
                RewardEvent {
                    value: -1.0,
                    terminal: false,
                },
                Directive::Stay,
            ))
        }
    }

    /// Notify that a sentence passed without a question (no reward event).
    pub fn skip_question(&mut self) -> Result<()> {
        self.check_live()?;
        self.trials_on_current = 0;
        Ok(())
    }

    /// Judge the final answer and close the episode.
    pub fn final_answer(&mut self, correct: bool) -> Result<RewardEvent> {
        self.check_live()?;
        self.questions_asked += 1;
        if correct {
            self.correct_total += 1;
        }
        let value = terminal_reward(self.correct_total, self.questions_asked, correct)?;
        self.terminal = true;
        Ok(RewardEvent {
            value,
            terminal: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_bonus_fraction() {
        // 18 teacher questions with 16 correct, then a correct final answer:
        // 17 of 19 right, bonus (17/19)*10.
        let mut r = EpisodeRunner::new(17, 3).unwrap();
        for i in 0..18 {
            r.step(i != 4 && i != 9).unwrap();
        }
        let event = r.final_answer(true).unwrap();
        assert!(event.terminal);
        assert!((event.value - 8.947).abs() <= 0.001, "got {}", event.value);
    }

    #[test]
    fn always_correct_collects_full_bonus() {
        let mut r = EpisodeRunner::new(10, 3).unwrap();
        let mut total = 0.0;
        for _ in 0..10 {
            let (e, d) = r.step(true).unwrap();
            assert_eq!(d, Directive::Advance);
            total += e.value;
        }
        let e = r.final_answer(true).unwrap();
        total += e.value;
        assert!((e.value - 10.0).abs() < 1e-12);
        assert!((total - 20.0).abs() < 1e-12);
    }

    #[test]
    fn always_wrong_fails_after_majority_of_sentences() {
        let mut r = EpisodeRunner::new(10, 3).unwrap();
        let mut steps = 0;
        loop {
            let (e, d) = r.step(false).unwrap();
            steps += 1;
            assert_eq!(e.value, -1.0);
            if d == Directive::Failed {
                assert!(e.terminal);
                break;
            }
        }
        assert_eq!(steps, 6, "failure lands on the first wrong past half");
        assert!(r.is_terminal());
        assert!(r.step(false).is_err());
    }

    #[test]
    fn retrials_stay_then_advance_after_max_trials() {
        let mut r = EpisodeRunner::new(30, 3).unwrap();
        assert_eq!(r.step(false).unwrap().1, Directive::Stay);
        assert_eq!(r.step(false).unwrap().1, Directive::Stay);
        assert_eq!(r.step(false).unwrap().1, Directive::Advance);
        // Counter resets per sentence.
        assert_eq!(r.step(false).unwrap().1, Directive::Stay);
        assert_eq!(r.step(true).unwrap().1, Directive::Advance);
        assert_eq!(r.step(false).unwrap().1, Directive::Stay);
    }

    #[test]
    fn single_trial_mode_always_advances() {
        let mut r = EpisodeRunner::new(30, 1).unwrap();
        assert_eq!(r.step(false).unwrap().1, Directive::Advance);
        assert_eq!(r.step(false).unwrap().1, Directive::Advance);
    }

    #[test]
    fn wrong_final_answer_flips_the_bonus_sign() {
        let mut r = EpisodeRunner::new(10, 3).unwrap();
        for _ in 0..4 {
            r.step(true).unwrap();
        }
        let e = r.final_answer(false).unwrap();
        // 4 of 5 correct, final wrong: -(4/5)*10.
        assert!((e.value + 8.0).abs() < 1e-12, "got {}", e.value);
    }

    #[test]
    fn zero_questions_is_a_contract_error() {
        assert!(terminal_reward(0, 0, true).is_err());
        assert!(terminal_reward(3, 2, true).is_err());
        assert!(EpisodeRunner::new(0, 3).is_err());
        assert!(EpisodeRunner::new(5, 0).is_err());
    }

    #[test]
    fn skip_resets_trial_counter_but_not_totals() {
        let mut r = EpisodeRunner::new(30, 3).unwrap();
        r.step(false).unwrap();
        r.step(false).unwrap();
        r.skip_question().unwrap();
        // Fresh sentence: three more attempts available.
        assert_eq!(r.step(false).unwrap().1, Directive::Stay);
        assert_eq!(r.wrong_total(), 3);
        assert_eq!(r.questions_asked(), 3);
    }
}
