//! Playlist corpora, song features, splits and the synthetic generator.

mod corpus;
mod features;
mod mask;
mod split;
mod synth;

pub use corpus::{load_corpus, save_corpus, PlaylistCorpus, PlaylistRecord};
pub use features::{load_features, save_features, SongFeatures};
pub use mask::{build_weight_mask, WeightMask, DEFAULT_EPSILON};
pub use split::{load_split, save_split, train_test_split, SplitSpec};
pub use synth::{synthesize_corpus, SynthConfig};
