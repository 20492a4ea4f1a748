pub mod cli;
pub mod config;
pub mod corpus_prep;
pub mod error;
pub mod evaluator;
pub mod focal_extract;
pub mod generator;
pub mod java_tokens;
pub mod jsonl;
pub mod report_convert;
pub mod verifier;

pub use error::{Error, Result};

/// Boundary pseudo-token between two joined token sequences. The same string
/// doubles as the end-of-sequence symbol during generation, mirroring how the
/// training corpus marks "the test ends here".
pub const SEQUENCE_BOUNDARY: &str = "</s>";
