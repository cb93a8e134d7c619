//! Preference-data curation by response-embedding similarity.
//!
//! Pick one response pair per prompt (hard, easy, centroid or random), label
//! it, train a linear DPO policy and compare strategies by test margins and
//! loss. A synthetic world with known rewards and a noisy annotator stands in
//! for human labels; a drift check confirms that pair similarities are stable
//! across embedding checkpoints.

pub mod corpus;
pub mod drift;
pub mod embedding;
pub mod error;
pub mod numeric;
pub mod preference;
pub mod rng;
pub mod selection;
pub mod simulator;
pub mod trainer;

pub use corpus::{
    Annotator, CandidatePair, EmbeddingStore, FilterConfig, LabeledPair, PromptGroup,
    ResponseRecord, Strategy,
};
pub use drift::{similarity_drift, DriftReport};
pub use embedding::{cosine, mean_pool, normalize, pairwise_similarity, Embedding};
pub use error::{Error, Result};
pub use preference::{MetricsReport, PolicyLogRatios, RewardPair, DEFAULT_BETA};
pub use selection::{select, select_all, sort_split, SortSplitResult};
pub use simulator::{ExperimentConfig, ExperimentReport, SyntheticWorld, WorldConfig};
pub use trainer::{LinearPreferencePolicy, TrainConfig, TrainHistory};
