//! Data model and line-delimited file formats: prompt groups, embedding
//! stores, selected pairs and labeled pairs.

mod groups;
mod jsonl;
mod pairs;
mod store;

pub use groups::{
    filter_group, load_response_groups, whitespace_token_count, write_response_groups,
    FilterConfig, FilterOutcome, PromptGroup, RejectReason, ResponseRecord,
};
pub use pairs::{
    load_labeled, load_pairs, write_labeled, write_pairs, Annotator, CandidatePair, LabeledPair,
    Strategy,
};
pub use store::{
    load_embeddings, load_embeddings_with_header, write_embeddings_binary, write_embeddings_text,
    EmbeddingHeader, EmbeddingStore, BINARY_MAGIC,
};
