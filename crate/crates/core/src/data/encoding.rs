use ndarray::{Array2, ArrayView2};

use super::series::{ChangePoint, LabelSequence, MultivariateSeries, PaddedBatch, StateAnnotation};
use crate::error::{Error, Result};

/// Zero-pads `series` to `target_length` rows and builds the matching validity mask.
pub fn pad_and_mask(series: &MultivariateSeries, target_length: usize) -> Result<PaddedBatch> {
    let len = series.len();
    if len > target_length {
        return Err(Error::LengthExceedsTarget {
            length: len,
            target: target_length,
        });
    }
    let mut data = Array2::zeros((target_length, series.num_channels()));
    data.slice_mut(ndarray::s![..len, ..]).assign(&series.values());
    let mask = (0..target_length).map(|j| j < len).collect();
    Ok(PaddedBatch {
        data,
        mask,
        original_length: len,
    })
}

/// Expands a change-point annotation into one state per timestep.
///
/// Each position takes the state of the latest entry at or before it, so a
/// padding tail beyond the series simply repeats the final state.
pub fn expand_labels(annotation: &StateAnnotation, length: usize) -> Result<LabelSequence> {
    let entries = annotation.entries();
    if entries.is_empty() {
        return Err(Error::EmptyAnnotation);
    }
    annotation.check_length(length)?;
    let mut states = Vec::with_capacity(length);
    let mut next = 0;
    let mut current = entries[0].state;
    for t in 0..length {
        while next < entries.len() && entries[next].t <= t {
            current = entries[next].state;
            next += 1;
        }
        states.push(current);
    }
    Ok(LabelSequence::new(states))
}

pub fn one_hot_encode(labels: &LabelSequence, num_states: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((labels.len(), num_states));
    for (t, &s) in labels.states.iter().enumerate() {
        if s >= num_states {
            return Err(Error::StateOutOfRange {
                state: s,
                num_states,
            });
        }
        out[[t, s]] = 1.0;
    }
    Ok(out)
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn argmax_rows(scores: ArrayView2<'_, f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Predicted change points: every unmasked `t >= 1` whose state differs from `t - 1`.
///
/// The initial state is never reported as a change.
pub fn derive_change_points(labels: &LabelSequence, mask: &[bool]) -> Vec<ChangePoint> {
    let states = &labels.states;
    (1..states.len())
        .filter(|&t| mask.get(t).copied().unwrap_or(false))
        .filter(|&t| states[t] != states[t - 1])
        .map(|t| ChangePoint::new(t, states[t]))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn series(channels: &[Vec<f64>]) -> MultivariateSeries {
        let names = (0..channels.len()).map(|i| format!("c{i}")).collect();
        MultivariateSeries::from_channels(channels, 5.0, names).unwrap()
    }

    fn ann(entries: &[(usize, usize)], n: usize) -> StateAnnotation {
        StateAnnotation::new(
            entries.iter().map(|&(t, s)| ChangePoint::new(t, s)).collect(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn pad_short_series() {
        let s = series(&[vec![7.0, 8.0, 9.0], vec![1.0, 1.0, 1.0]]);
        let p = pad_and_mask(&s, 5).unwrap();
        assert_eq!(p.data.column(0).to_vec(), vec![7.0, 8.0, 9.0, 0.0, 0.0]);
        assert_eq!(p.mask, vec![true, true, true, false, false]);
        assert_eq!(p.original_length, 3);
    }

    #[test]
    fn pad_identity_when_full_length() {
        let s = series(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let p = pad_and_mask(&s, 2).unwrap();
        assert!(p.mask.iter().all(|&m| m));
        assert_eq!(p.data, s.values().to_owned());
    }

    #[test]
    fn pad_paper_scale() {
        let s = series(&[vec![0.5; 200], vec![0.25; 200]]);
        let p = pad_and_mask(&s, 18_000).unwrap();
        assert_eq!(p.mask.iter().filter(|&&m| m).count(), 200);
        assert_eq!(p.mask.iter().filter(|&&m| !m).count(), 17_800);
    }

    #[test]
    fn pad_rejects_long_series() {
        let s = series(&[vec![0.0; 6], vec![0.0; 6]]);
        assert!(matches!(
            pad_and_mask(&s, 5),
            Err(Error::LengthExceedsTarget { length: 6, target: 5 })
        ));
    }

    #[test]
    fn expand_worked_example() {
        let (a, b, c) = (0, 1, 2);
        let cp = ann(&[(0, a), (3, b), (5, c), (8, a)], 3);
        let o = expand_labels(&cp, 10).unwrap();
        assert_eq!(o.states, vec![a, a, a, b, b, c, c, c, a, a]);
    }

    #[test]
    fn expand_single_state_and_late_change() {
        assert_eq!(expand_labels(&ann(&[(0, 0)], 1), 4).unwrap().states, vec![0; 4]);
        assert_eq!(
            expand_labels(&ann(&[(0, 0), (5, 1)], 2), 6).unwrap().states,
            vec![0, 0, 0, 0, 0, 1]
        );
    }

    #[test]
    fn expand_rejects_out_of_range_timestamp() {
        let cp = ann(&[(0, 0), (5, 1)], 2);
        assert!(matches!(
            expand_labels(&cp, 5),
            Err(Error::TimestampOutOfRange { timestamp: 5, length: 5 })
        ));
    }

    #[test]
    fn one_hot_basic_and_errors() {
        let oh = one_hot_encode(&LabelSequence::new(vec![0, 1]), 2).unwrap();
        assert_eq!(oh, ndarray::array![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(one_hot_encode(&LabelSequence::new(vec![24]), 25).unwrap().ncols(), 25);
        assert!(one_hot_encode(&LabelSequence::new(vec![2]), 2).is_err());
    }

    #[test]
    fn change_points_examples() {
        let (a, b, c) = (0, 1, 2);
        let labels = LabelSequence::new(vec![a, a, a, b, b, c, c, c, a, a]);
        let mask = vec![true; 10];
        assert_eq!(
            derive_change_points(&labels, &mask),
            vec![ChangePoint::new(3, b), ChangePoint::new(5, c), ChangePoint::new(8, a)]
        );
        assert!(derive_change_points(&LabelSequence::new(vec![2; 6]), &[true; 6]).is_empty());
        assert_eq!(
            derive_change_points(&LabelSequence::new(vec![a, b, a, b]), &[true; 4]),
            vec![ChangePoint::new(1, b), ChangePoint::new(2, a), ChangePoint::new(3, b)]
        );
    }

    #[test]
    fn change_points_ignore_masked_tail() {
        let labels = LabelSequence::new(vec![0, 0, 1, 2, 0]);
        let mask = vec![true, true, true, false, false];
        assert_eq!(derive_change_points(&labels, &mask), vec![ChangePoint::new(2, 1)]);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        let s = ndarray::array![[0.5, 0.5], [0.1, 0.9], [0.3, 0.3]];
        assert_eq!(argmax_rows(s.view()), vec![0, 1, 0]);
    }

    fn annotation_strategy() -> impl Strategy<Value = (StateAnnotation, usize)> {
        (2usize..6, 1usize..60).prop_flat_map(|(n_states, len)| {
            (
                proptest::collection::vec(any::<bool>(), len),
                proptest::collection::vec(0..n_states, len),
                Just(n_states),
            )
                .prop_map(|(cuts, picks, n_states)| {
                    let mut labels = Vec::with_capacity(cuts.len());
                    for (t, (&cut, &pick)) in cuts.iter().zip(&picks).enumerate() {
                        let s = if t == 0 || !cut {
                            labels.last().copied().unwrap_or(pick)
                        } else {
                            pick
                        };
                        labels.push(s);
                    }
                    let len = labels.len();
                    (StateAnnotation::from_labels(&labels, n_states).unwrap(), len)
                })
        })
    }

    proptest! {
        #[test]
        fn expand_and_derive_are_inverse((annotation, len) in annotation_strategy()) {
            let labels = expand_labels(&annotation, len).unwrap();
            let derived = derive_change_points(&labels, &vec![true; len]);
            prop_assert_eq!(derived.as_slice(), annotation.change_points());
        }

        #[test]
        fn one_hot_argmax_round_trip(states in proptest::collection::vec(0usize..7, 1..50)) {
            let labels = LabelSequence::new(states.clone());
            let oh = one_hot_encode(&labels, 7).unwrap();
            prop_assert_eq!(argmax_rows(oh.view()), states);
            for row in oh.rows() {
                prop_assert_eq!(row.sum(), 1.0);
            }
        }

        #[test]
        fn padding_preserves_values(
            len in 1usize..30,
            extra in 0usize..10,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let channels: Vec<Vec<f64>> =
                (0..3).map(|_| (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
            let s = series(&channels);
            let p = pad_and_mask(&s, len + extra).unwrap();
            prop_assert_eq!(p.valid(), s.values());
            prop_assert!(p.data.slice(ndarray::s![len.., ..]).iter().all(|&v| v == 0.0));
        }
    }
}
