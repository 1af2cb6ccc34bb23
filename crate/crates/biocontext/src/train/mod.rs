//! Training and the evaluation protocol: class-weighted fitting on frozen
//! embeddings, positive-class metrics, document-grouped cross-validation,
//! evidence-budget sweeps, and a paired significance test.

mod cv;
mod data;
mod fit;
mod loss;
mod metrics;
mod optim;

pub use cv::{
    aligned_outcomes, cross_validate, heuristic_metrics, paired_bootstrap_p, sweep_k,
    tune_heuristic_window, CvReport, FoldReport, HeuristicWindow, KSweepPoint,
};
pub use data::{encode_pairs, PairExample};
pub use fit::{
    evaluate, flat_params, loss_and_gradients, set_flat_params, train, EpochRecord, TrainConfig,
    TrainOutcome,
};
pub use loss::WeightedBce;
pub use metrics::{
    metrics_over, stratify_by_distance, DistanceBucket, EvaluatedPair, Metrics,
};
pub use optim::Adam;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training split has no positive pairs; class weighting is undefined")]
    NoPositiveExamples,

    #[error("no training examples")]
    NoTrainingExamples,

    #[error("encoder fine-tuning is not supported; encoders are forward-only")]
    FineTuneUnsupported,

    #[error("candidate pair references unknown document {doc_id}")]
    UnknownDocument { doc_id: String },

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Segment(#[from] crate::segment::SegmentError),

    #[error(transparent)]
    Encode(#[from] crate::encode::EncodeError),

    #[error(transparent)]
    Head(#[from] crate::heads::HeadError),

    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

/// Finalizer-style bit mixer, for spreading a root seed across independent
/// random streams without correlated low bits.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn derive_seed(root: u64, stream: u64) -> u64 {
    mix64(root ^ mix64(stream))
}
