use serde::{Deserialize, Serialize};

use super::cpd::harmonic;
use crate::data::LabelSequence;
use crate::error::{Error, Result};

/// Which classes enter the macro average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassInclusion {
    /// Classes absent from both truth and prediction are left out.
    #[default]
    ExcludeAbsent,
    /// Every class counts, absent ones with precision and recall 0.
    IncludeAsZero,
}

/// Per-class tallies over unmasked positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_positive: Vec<usize>,
    pub predicted: Vec<usize>,
    pub actual: Vec<usize>,
}

impl ClassCounts {
    pub fn new(num_states: usize) -> Self {
        Self {
            true_positive: vec![0; num_states],
            predicted: vec![0; num_states],
            actual: vec![0; num_states],
        }
    }

    pub fn tally(truth: &LabelSequence, pred: &LabelSequence, mask: &[bool], num_states: usize) -> Result<Self> {
        if truth.len() != pred.len() || mask.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: if truth.len() != pred.len() { pred.len() } else { mask.len() },
            });
        }
        let mut c = Self::new(num_states);
        for ((&t, &p), _) in truth.states.iter().zip(&pred.states).zip(mask).filter(|(_, &m)| m) {
            if t >= num_states || p >= num_states {
                return Err(Error::StateOutOfRange {
                    state: t.max(p),
                    num_states,
                });
            }
            c.actual[t] += 1;
            c.predicted[p] += 1;
            if t == p {
                c.true_positive[t] += 1;
            }
        }
        Ok(c)
    }

    pub fn add(&mut self, other: &ClassCounts) {
        for (a, b) in [
            (&mut self.true_positive, &other.true_positive),
            (&mut self.predicted, &other.predicted),
            (&mut self.actual, &other.actual),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scores(&self, inclusion: ClassInclusion) -> ClassificationScores {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let per_class: Vec<ClassScore> = (0..self.actual.len())
            .map(|s| ClassScore {
                state: s,
                precision: ratio(self.true_positive[s], self.predicted[s]),
                recall: ratio(self.true_positive[s], self.actual[s]),
                included: inclusion == ClassInclusion::IncludeAsZero
                    || self.actual[s] > 0
                    || self.predicted[s] > 0,
            })
            .collect();
        let included: Vec<&ClassScore> = per_class.iter().filter(|c| c.included).collect();
        let mean = |f: fn(&ClassScore) -> f64| {
            if included.is_empty() {
                0.0
            } else {
                included.iter().map(|c| f(c)).sum::<f64>() / included.len() as f64
            }
        };
        let precision = mean(|c| c.precision);
        let recall = mean(|c| c.recall);
        let total: usize = self.actual.iter().sum();
        ClassificationScores {
            per_class,
            precision,
            recall,
            f1: harmonic(precision, recall),
            accuracy: ratio(self.true_positive.iter().sum(), total),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub state: usize,
    pub precision: f64,
    pub recall: f64,
    /// Whether the class entered the macro average.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub per_class: Vec<ClassScore>,
    pub precision: f64,
    pub recall: f64,
    /// Harmonic mean of the macro precision and recall.
    pub f1: f64,
    /// Timestep accuracy, for reference.
    pub accuracy: f64,
}

/// Macro-averaged precision, recall and F1 over unmasked positions.
pub fn macro_prf(
    truth: &LabelSequence,
    pred: &LabelSequence,
    mask: &[bool],
    num_states: usize,
) -> Result<ClassificationScores> {
    Ok(ClassCounts::tally(truth, pred, mask, num_states)?.scores(ClassInclusion::default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[usize]) -> LabelSequence {
        LabelSequence::new(v.to_vec())
    }

    #[test]
    fn hand_example() {
        let s = macro_prf(&seq(&[0, 0, 1, 1]), &seq(&[0, 1, 1, 1]), &[true; 4], 2).unwrap();
        assert!((s.precision - 5.0 / 6.0).abs() < 1e-15);
        assert!((s.recall - 0.75).abs() < 1e-15);
        assert!((s.f1 - harmonic(5.0 / 6.0, 0.75)).abs() < 1e-15);
        assert_eq!(s.per_class[0].recall, 0.5);
        assert!((s.per_class[1].precision - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_complement() {
        let t = seq(&[0, 1, 2, 2, 1]);
        let s = macro_prf(&t, &t, &[true; 5], 4).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = macro_prf(&seq(&[0, 1, 1, 0]), &seq(&[1, 0, 0, 1]), &[true; 4], 2).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn absent_classes() {
        let t = seq(&[0, 0, 1]);
        let s = macro_prf(&t, &t, &[true; 3], 5).unwrap();
        assert_eq!(s.f1, 1.0);
        let z = ClassCounts::tally(&t, &t, &[true; 3], 5)
            .unwrap()
            .scores(ClassInclusion::IncludeAsZero);
        assert!((z.precision - 0.4).abs() < 1e-15);
    }

    #[test]
    fn mask_ignores_tail() {
        let t = seq(&[0, 1, 1, 2, 2]);
        let a = macro_prf(&t, &seq(&[0, 1, 1, 0, 0]), &[true, true, true, false, false], 3).unwrap();
        let b = macro_prf(&t, &seq(&[0, 1, 1, 1, 2]), &[true, true, true, false, false], 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pooling_adds_counts() {
        let mut a = ClassCounts::tally(&seq(&[0, 1]), &seq(&[0, 0]), &[true; 2], 2).unwrap();
        let b = ClassCounts::tally(&seq(&[1, 1]), &seq(&[1, 0]), &[true; 2], 2).unwrap();
        a.add(&b);
        let all = ClassCounts::tally(&seq(&[0, 1, 1, 1]), &seq(&[0, 0, 1, 0]), &[true; 4], 2).unwrap();
        assert_eq!(a, all);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            macro_prf(&seq(&[0, 1]), &seq(&[0]), &[true; 2], 2),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
