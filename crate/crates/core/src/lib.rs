//! Feature attribution for text classifiers at token, word and sentence
//! granularity, together with the robustness and quality metrics used to
//! compare them.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`]: tokenization, sentence splitting, partitions, datasets.
//! * [`model`]: a mean-pool + MLP classifier with exact gradients and AdamW training.
//! * [`attribution`]: KernelSHAP (direct over meta-tokens), exact Shapley,
//!   Integrated Gradients, indirect aggregation and subword merging.
//! * [`evaluation`]: top-K% sets, Jaccard@K%, randomization tests, overlap,
//!   infidelity, mutual information and information transfer rate.
//! * [`pipeline`]: experiment configuration, synthetic corpora, reports and
//!   HTML highlights, driven by the `textattr` binary.

pub mod attribution;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod pipeline;
pub mod util;

pub use error::{Error, Result};
