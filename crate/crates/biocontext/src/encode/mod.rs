//! Segment encoders and the pair-level classification embedding.
//!
//! An encoder maps a segment's token ids to one hidden vector per position.
//! The classification embedding for a segment is the mean of the hidden
//! vectors at the four marker positions (`<EVT>`, `</EVT>`, `<CON>`,
//! `</CON>`), optionally just the two openers.

mod mock;
mod transformer;

pub use mock::MockEncoder;
pub use transformer::{RobertaConfig, RobertaEncoder};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::segment::{EvidenceSegment, TokenId};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("segment of {len} tokens exceeds encoder window {max_len}")]
    TooLong { len: usize, max_len: usize },

    #[error("token id {id} is outside the encoder vocabulary of {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("marker position {position} is outside the segment of {len} tokens")]
    MarkerOutOfRange { position: usize, len: usize },

    #[error("empty segment cannot be encoded")]
    EmptySegment,

    #[error("reading checkpoint {path}: {detail}")]
    Checkpoint { path: String, detail: String },

    #[error("encoder weights are frozen; fine-tuning is not supported by this encoder")]
    FineTuneUnsupported,
}

/// Maps token ids to per-position hidden vectors.
pub trait Encoder<F: Scalar>: Send + Sync {
    fn embedding_dim(&self) -> usize;

    /// Longest token sequence the encoder accepts.
    fn max_len(&self) -> usize;

    /// Hidden states, one row per input position.
    fn encode(&self, token_ids: &[TokenId]) -> Result<Array2<F>, EncodeError>;
}

/// Which marker positions are averaged into the classification embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerPooling {
    /// Mean over `<EVT>`, `</EVT>`, `<CON>`, `</CON>`.
    #[default]
    AllMarkers,
    /// Mean over the two opening markers only.
    OpenersOnly,
}

/// Pair-level embedding of one evidence segment, carrying enough origin
/// detail to trace a prediction back to its source mention.
#[derive(Debug, Clone)]
pub struct ClassificationEmbedding<F: Scalar> {
    pub vector: Array1<F>,
    pub doc_id: String,
    pub event_id: String,
    pub mention_id: String,
    pub distance: usize,
    pub truncated: bool,
}

/// Encode a segment and pool the marker-position hidden vectors.
pub fn classification_embedding<F: Scalar>(
    encoder: &dyn Encoder<F>,
    segment: &EvidenceSegment,
    pooling: MarkerPooling,
) -> Result<ClassificationEmbedding<F>, EncodeError> {
    let hidden = encoder.encode(&segment.token_ids)?;
    let positions: &[usize] = match pooling {
        MarkerPooling::AllMarkers => &segment.markers.as_array(),
        MarkerPooling::OpenersOnly => &segment.markers.openers(),
    };
    let len = hidden.nrows();
    let mut vector = Array1::<F>::zeros(hidden.ncols());
    for &p in positions {
        if p >= len {
            return Err(EncodeError::MarkerOutOfRange { position: p, len });
        }
        vector += &hidden.row(p);
    }
    vector.mapv_inplace(|v| v / F::cast(positions.len() as f64));
    Ok(ClassificationEmbedding {
        vector,
        doc_id: segment.doc_id.clone(),
        event_id: segment.event_id.clone(),
        mention_id: segment.mention_id.clone(),
        distance: segment.distance,
        truncated: segment.truncated,
    })
}
