//! Sentence importance: cosine similarity between the current sentence's
//! mean attention and an exponentially fading episode average.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Running episode attention average, halved on every fold so sentence j
/// carries weight 2^-(t-j+1) after t sentences.
#[derive(Debug, Clone)]
pub struct ImportanceTracker {
    avg: Tensor,
}

impl ImportanceTracker {
    /// Fresh tracker (zero average) for a d-dimensional attention mean.
    pub fn new(d: usize) -> ImportanceTracker {
        ImportanceTracker {
            avg: Tensor::zeros(vec![d, 1]),
        }
    }

    /// Resume from a serialized average.
    pub fn from_average(avg: Tensor) -> ImportanceTracker {
        ImportanceTracker { avg }
    }

    pub fn average(&self) -> &Tensor {
        &self.avg
    }

    pub fn reset(&mut self) {
        for v in self.avg.data_mut() {
            *v = 0.0;
        }
    }

    fn check(&self, m_bar: &Tensor) -> Result<()> {
        if m_bar.shape() != self.avg.shape() {
            return Err(Error::Shape {
                op: "importance",
                lhs: self.avg.shape().to_vec(),
                rhs: m_bar.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Importance of the current sentence, computed against the tracker
    /// state that excludes it. Call before [`update_episode_attention`].
    pub fn importance(&self, m_bar: &Tensor) -> Result<f64> {
        self.check(m_bar)?;
        self.avg.cosine(m_bar)
    }

    /// Importance followed by the fold, returning the pre-fold value.
    pub fn observe(&mut self, m_bar: &Tensor) -> Result<f64> {
        let value = self.importance(m_bar)?;
        update_episode_attention(self, m_bar)?;
        Ok(value)
    }
}

/// Fold the current sentence's mean attention into the episode average:
/// avg' = (avg + m_bar) / 2.
pub fn update_episode_attention(tracker: &mut ImportanceTracker, m_bar: &Tensor) -> Result<()> {
    tracker.check(m_bar)?;
    for (a, &m) in tracker.avg.data_mut().iter_mut().zip(m_bar.data()) {
        *a = (*a + m) / 2.0;
    }
    Ok(())
}

/// Free-function form of [`ImportanceTracker::importance`].
pub fn importance(m_bar: &Tensor, tracker: &ImportanceTracker) -> Result<f64> {
    tracker.importance(m_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn vec2(a: f64, b: f64) -> Tensor {
        Tensor::vector(vec![a, b])
    }

    #[test]
    fn first_sentence_scores_zero() {
        let tracker = ImportanceTracker::new(2);
        assert_eq!(tracker.importance(&vec2(0.3, 0.9)).unwrap(), 0.0);
    }

    #[test]
    fn self_similarity_is_one() {
        let mut tracker = ImportanceTracker::new(2);
        tracker.observe(&vec2(0.5, 0.25)).unwrap();
        // Tracker now holds (0.25, 0.125); a parallel vector scores 1.
        let i = tracker.importance(&vec2(0.5, 0.25)).unwrap();
        assert!((i - 1.0).abs() < 1e-12, "got {i}");
    }

    #[test]
    fn hand_cosine_case() {
        let mut tracker = ImportanceTracker::new(2);
        tracker.avg = vec2(1.0, 0.0);
        let i = tracker.importance(&vec2(0.6, 0.8)).unwrap();
        assert!((i - 0.6).abs() < 1e-12, "got {i}");
    }

    #[test]
    fn fold_halves_from_zero_then_three_quarters() {
        let mut tracker = ImportanceTracker::new(2);
        let v = vec2(1.0, -2.0);
        update_episode_attention(&mut tracker, &v).unwrap();
        assert_eq!(tracker.average().data(), &[0.5, -1.0]);
        update_episode_attention(&mut tracker, &v).unwrap();
        assert_eq!(tracker.average().data(), &[0.75, -1.5]);
    }

    #[test]
    fn unrolled_weights_match_recurrence_at_t5() {
        let mut rng = crate::rng::seeded(5, crate::rng::stream::TEACHER);
        let ms: Vec<Tensor> = (0..5)
            .map(|_| vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut tracker = ImportanceTracker::new(2);
        for m in &ms {
            update_episode_attention(&mut tracker, m).unwrap();
        }
        let t = 5;
        let mut expect = [0.0f64; 2];
        for (j, m) in ms.iter().enumerate() {
            let w = 2f64.powi(-((t - j) as i32)); // sentence j+1 of t
            expect[0] += w * m.data()[0];
            expect[1] += w * m.data()[1];
        }
        assert!((tracker.average().data()[0] - expect[0]).abs() < 1e-12);
        assert!((tracker.average().data()[1] - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn importance_is_scale_invariant() {
        let mut tracker = ImportanceTracker::new(2);
        tracker.avg = vec2(0.2, 0.7);
        let base = tracker.importance(&vec2(0.6, 0.8)).unwrap();
        for c in [0.001, 0.5, 3.0, 1000.0] {
            let scaled = tracker.importance(&vec2(0.6 * c, 0.8 * c)).unwrap();
            assert!((scaled - base).abs() < 1e-9, "c={c}: {scaled} vs {base}");
        }
    }

    #[test]
    fn observe_reports_pre_fold_value() {
        let mut tracker = ImportanceTracker::new(2);
        tracker.avg = vec2(1.0, 0.0);
        let i = tracker.observe(&vec2(0.6, 0.8)).unwrap();
        assert!((i - 0.6).abs() < 1e-12);
        assert_eq!(tracker.average().data(), &[0.8, 0.4]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let tracker = ImportanceTracker::new(2);
        let bad = Tensor::zeros(vec![3, 1]);
        assert!(matches!(
            tracker.importance(&bad),
            Err(Error::Shape { op: "importance", .. })
        ));
    }
}
