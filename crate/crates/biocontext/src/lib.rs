//! Document-level biological context classification for biochemical events.
//!
//! Articles describe biochemical events (phosphorylation, inhibition, ...) whose
//! biological context (species, organ, tissue, cell type, cell line) is often
//! established sentences away from the event itself. This crate turns each
//! (event mention, context type) pair into multi-sentence evidence segments,
//! encodes them, and combines the per-segment evidence with aggregation or
//! voting heads to decide whether the context type applies to the event.
//!
//! Pipeline stages, one module each:
//!
//! * [`corpus`]: corpus data model, loading, validation, candidate-pair
//!   generation, corpus statistics, and document-grouped fold splitting.
//! * [`segment`]: marked/masked/truncated evidence segments and subword
//!   tokenization.
//! * [`encode`]: pluggable encoders mapping segments to classification
//!   embeddings.
//! * [`heads`]: aggregation and voting decision heads over the per-segment
//!   embeddings, with a shared MLP classifier.
//! * [`train`]: training, cross-validation, metrics, distance stratification,
//!   k sweeps, and significance testing.
//! * [`synth`]: synthetic corpora with planted signal for end-to-end tests.
//! * [`report`]: deterministic plain-text rendering of stats and results.
//!
//! Numeric code is generic over the [`Scalar`] floating-point type; `f32` is
//! the default for runs and `f64` backs the gradient checks. The aliases below
//! fix the common instantiations.

pub mod corpus;
pub mod encode;
pub mod heads;
pub mod report;
pub mod scalar;
pub mod segment;
pub mod synth;
pub mod train;

pub use scalar::Scalar;

/// Classification embedding over the default run scalar.
pub type Embedding32 = encode::ClassificationEmbedding<f32>;
/// Classification embedding at double precision.
pub type Embedding64 = encode::ClassificationEmbedding<f64>;
/// MLP classifier over the default run scalar.
pub type Mlp32 = heads::MlpClassifier<f32>;
/// MLP classifier at double precision, used by the gradient checks.
pub type Mlp64 = heads::MlpClassifier<f64>;
/// Trained head model over the default run scalar.
pub type Model32 = heads::ContextModel<f32>;
/// Trained head model at double precision.
pub type Model64 = heads::ContextModel<f64>;
/// Mock encoder over the default run scalar.
pub type MockEncoder32 = encode::MockEncoder<f32>;
