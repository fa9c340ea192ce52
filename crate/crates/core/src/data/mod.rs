//! Dataset model shared by every other module: series, state annotations,
//! label encoding, padding, normalization and file I/O.

mod dataset;
mod encoding;
mod io;
mod normalize;
mod series;

pub use dataset::{split_counts, Dataset, LengthBounds, Sample, Split, SplitFractions};
pub use encoding::{
    argmax_rows, derive_change_points, expand_labels, one_hot_encode, pad_and_mask,
};
pub use io::{
    load_dataset, read_flight_csv, read_manifest, save_dataset, write_flight_csv, ManifestEntry, ManifestHeader,
    MANIFEST_FILE,
};
pub use normalize::Normalizer;
pub use series::{ChangePoint, LabelSequence, MultivariateSeries, PaddedBatch, StateAnnotation};
