//! Focus-location estimation for multimodal news articles.
//!
//! The crate covers the full batch workflow over precomputed per-modality
//! embedding vectors:
//!
//! * [`geo`] — great-circle geodesy, accuracy-level bucketing, area-root radii.
//! * [`corpus`] — articles, events, entity mentions, knowledge snapshot,
//!   annotations, stratified splitting.
//! * [`pipeline`] — the weakly-supervised filtering chain (event relevance,
//!   entity-location match, event-article distance, TF-IDF dedup, rare-location
//!   pruning).
//! * [`embeddings`] — binary embedding stores and a synthetic generator.
//! * [`model`] — the dual-branch fusion classifier and the coordinate
//!   regression head, with hand-rolled gradients and Adam training.
//! * [`eval`] — GCD accuracy levels, mean/median GCD, test-variant
//!   construction, inter-annotator agreement.
//! * [`cli`] — batch command wiring.
//!
//! The numeric core is generic over the scalar type through [`num::Real`];
//! the concrete aliases below pin the precisions used by the shipped tools
//! (all training and geodesy run in `f64`, stores hold `f32` on disk).

pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod geo;
pub mod model;
pub mod num;
pub mod pipeline;

pub use error::Error;

/// Scalar used for training, geodesy, and evaluation.
pub type Scalar = f64;
/// Scalar used for on-disk embedding vectors.
pub type StoreScalar = f32;

/// Branch parameters at working precision.
pub type BranchParams = model::BranchParams<Scalar>;
/// Regression head parameters at working precision.
pub type RegressionParams = model::RegressionParams<Scalar>;

pub type Result<T> = std::result::Result<T, Error>;
