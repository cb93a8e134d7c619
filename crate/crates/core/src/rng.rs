//! Reproducible randomness.
//!
//! One user-facing seed fans out into named sub-streams. Each generator is a
//! ChaCha8 instance keyed by SHA-256 over (seed, stream name, context parts),
//! so draws are identical across platforms and independent of the order in
//! which other streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Named sub-streams derived from the global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Selection,
    Annotation,
    World,
    Shuffle,
}

impl Stream {
    fn name(self) -> &'static str {
        match self {
            Stream::Selection => "selection",
            Stream::Annotation => "annotation",
            Stream::World => "world",
            Stream::Shuffle => "shuffle",
        }
    }
}

/// Generator for `stream`, further keyed by `context` (e.g. prompt and response ids).
pub fn stream_rng(seed: u64, stream: Stream, context: &[&str]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(b"prefsel/v1\0");
    h.update(seed.to_le_bytes());
    h.update(stream.name().as_bytes());
    for part in context {
        h.update([0u8]);
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}
