//! The NDD metric itself: sentences and edits, vocabulary distributions, KL
//! divergence, neighbor weighting and score aggregation. Nothing in here
//! touches a model.

mod divergence;
mod profile;
mod sentence;
mod weights;

pub use divergence::{kl_divergence, VocabDistribution, VocabId, PROBABILITY_FLOOR};
pub use profile::{ndd, ndd_at, DivergenceProfile};
pub use sentence::{EditKind, EditOperation, Sentence};
pub use weights::{
    balanced_distance_weights, distance_weights, neighbor_positions, position_weights,
    WeightConfig,
};
