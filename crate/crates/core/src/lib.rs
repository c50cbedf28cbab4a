//! Similarity profiles and refined motifs for daily smart-meter load data.
//!
//! A similarity profile scores each stored day by how many other days lie
//! within a distance threshold, minus its normalised mean distance to all of
//! them. The best-scoring day, the refined motif, summarises a user's typical
//! consumption and feeds a small classifier that flags behind-the-meter
//! equipment such as rooftop PV.
//!
//! Three updaters keep a profile current as days arrive:
//!
//! - [`AdditiveState`] is lossless and grows by one day per update.
//! - [`FixedMemoryState`] keeps a window of `M` days and evicts by a [`DropStrategy`].
//! - [`CodebookState`] stores representative days and absorbs near-repeats.
//!
//! ```
//! use rmprofile::{DayPattern, DistanceConfig, Method, ProfileParams, UpdaterSpec};
//!
//! let days = vec![
//!     DayPattern::new(0, vec![0.0, 0.0])?,
//!     DayPattern::new(1, vec![0.0, 0.0])?,
//!     DayPattern::new(2, vec![10.0, 10.0])?,
//! ];
//! let params = ProfileParams { threshold: 1.0, ..Default::default() };
//! let spec = UpdaterSpec::new(Method::Additive, params, DistanceConfig::default());
//! let state = spec.init(days)?;
//! let rm = state.refined_motif()?;
//! assert_eq!(rm.source_index, 0);
//! assert_eq!(rm.pattern.values, vec![0.0, 0.0]);
//! # Ok::<(), rmprofile::Error>(())
//! ```

pub mod additive;
pub mod batch;
pub mod classifier;
pub mod codebook;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod fixed;
pub mod io;
pub mod model;
pub mod updater;

#[cfg(test)]
mod testutil;

pub use additive::AdditiveState;
pub use batch::{compute_similarity_profile, default_threshold, BatchProfile};
pub use classifier::{ClassifierModel, InputScaling, Label, TrainConfig};
pub use codebook::{recover_tsd, CodebookLayout, CodebookState, CodebookVariant};
pub use distance::{dtw_distance, pairwise_distance_matrix};
pub use error::{Error, Result};
pub use fixed::{detect_type_switch_latency, select_drop, FixedMemoryState, Latency};
pub use io::snapshot::{snapshot_load, snapshot_save, Snapshot};
pub use model::{
    extract_rm, sp_value, DayPattern, DaySlice, DistanceConfig, DropStrategy, LocalCost, ProfileParams, ProfileView,
    RefinedMotif, SimilarityRecord,
};
pub use updater::{Method, ProfileState, UpdaterSpec};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/similarity-profile.md")]
    mod similarity_profile {}
    #[doc = include_str!("../../../book/src/distance.md")]
    mod distance {}
    #[doc = include_str!("../../../book/src/additive.md")]
    mod additive {}
    #[doc = include_str!("../../../book/src/fixed-memory.md")]
    mod fixed_memory {}
    #[doc = include_str!("../../../book/src/codebook.md")]
    mod codebook {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
    #[doc = include_str!("../../../book/src/data-and-snapshots.md")]
    mod data_and_snapshots {}
}
