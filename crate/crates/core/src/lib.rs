//! Propaganda span identification and technique classification.
//!
//! The crate covers the full pipeline over the official corpus file layout:
//!
//! - [`corpus`]: articles, character-indexed label files, prediction files
//! - [`segment`]: offset-preserving tokenization, span/token label projection
//! - [`features`]: POS, NER and keyword-frequency token features
//! - [`embeddings`]: per-token embedding tables (PEMB files)
//! - [`tagger`]: recurrent binary token tagger for span identification
//! - [`classifier`]: recurrent 14-way technique classifier over spans
//! - [`augment`]: lexicon-driven silver data for minority techniques
//! - [`eval`]: span and technique scorers, ablation harness, threshold sweeps
//! - [`pipeline`]: glue that turns a corpus into model instances
//! - [`cli`]: the `propspan` command-line driver
//!
//! Runnable walkthroughs for each capability live in the crate's
//! `examples/` directory.

pub mod augment;
pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod features;
mod nn;
pub mod pipeline;
pub mod segment;
pub mod synthetic;
pub mod tagger;

pub use error::{Error, ModelError, Result};
