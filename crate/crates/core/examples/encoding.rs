//! Change points to per-timestep labels and back, plus padding and one-hot targets.

use stateinfer::data::{
    derive_change_points, expand_labels, one_hot_encode, pad_and_mask, ChangePoint, MultivariateSeries,
    StateAnnotation,
};

fn main() -> stateinfer::Result<()> {
    let names = ['a', 'b', 'c'];
    let ann = StateAnnotation::new(
        vec![
            ChangePoint::new(0, 0),
            ChangePoint::new(3, 1),
            ChangePoint::new(5, 2),
            ChangePoint::new(8, 0),
        ],
        3,
    )?;
    let labels = expand_labels(&ann, 10)?;
    println!("labels  {}", labels.states.iter().map(|&s| names[s]).collect::<String>());

    let back = derive_change_points(&labels, &[true; 10]);
    println!("changes {:?}", back.iter().map(|c| (c.t, names[c.state])).collect::<Vec<_>>());

    // A 6-step series padded to 8: the mask marks the real rows.
    let series = MultivariateSeries::from_channels(&[vec![1.0; 6], vec![2.0; 6]], 5.0, vec!["u".into(), "y".into()])?;
    let padded = pad_and_mask(&series, 8)?;
    println!("mask    {:?}", padded.mask);

    let onehot = one_hot_encode(&labels.truncated(4), 3)?;
    println!("one-hot\n{onehot}");
    Ok(())
}
