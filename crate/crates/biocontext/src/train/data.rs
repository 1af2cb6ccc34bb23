//! Bridge from candidate pairs to encoder-ready training examples.

use rayon::prelude::*;

use crate::corpus::{CandidatePair, Corpus};
use crate::encode::{classification_embedding, ClassificationEmbedding, Encoder, MarkerPooling};
use crate::scalar::Scalar;
use crate::segment::{build_segments, SegmentError, SubwordTokenizer};

use super::TrainError;

/// One candidate pair with its evidence embeddings, nearest-first.
#[derive(Debug, Clone)]
pub struct PairExample<F: Scalar> {
    pub pair: String,
    pub doc_id: String,
    pub label: bool,
    pub nearest_distance: usize,
    pub embeddings: Vec<ClassificationEmbedding<F>>,
}

impl<F: Scalar> PairExample<F> {
    /// Keep only the k nearest evidence embeddings.
    pub fn truncated_to(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.embeddings.truncate(k.max(1));
        out
    }
}

/// Segment and encode every pair, in parallel, preserving input order. A
/// pair none of whose evidence segments survive is dropped with a warning;
/// encoder failures abort.
pub fn encode_pairs<F: Scalar>(
    corpus: &Corpus,
    pairs: &[CandidatePair],
    encoder: &dyn Encoder<F>,
    tokenizer: &dyn SubwordTokenizer,
    k: usize,
    max_len: usize,
    pooling: MarkerPooling,
) -> Result<Vec<PairExample<F>>, TrainError> {
    let encoded: Vec<Result<Option<PairExample<F>>, TrainError>> = pairs
        .par_iter()
        .map(|pair| {
            let doc = corpus
                .document(&pair.doc_id)
                .ok_or_else(|| TrainError::UnknownDocument {
                    doc_id: pair.doc_id.clone(),
                })?;
            let segments = match build_segments(doc, pair, k, tokenizer, max_len) {
                Ok(segments) => segments,
                Err(err @ SegmentError::NoUsableSegments { .. }) => {
                    log::warn!("dropping pair: {err}");
                    return Ok(None);
                }
                Err(other) => return Err(other.into()),
            };
            let embeddings = segments
                .iter()
                .map(|segment| classification_embedding(encoder, segment, pooling))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(PairExample {
                pair: pair.pair_key(),
                doc_id: pair.doc_id.clone(),
                label: pair.label,
                nearest_distance: pair.nearest_distance(),
                embeddings,
            }))
        })
        .collect();
    let mut out = Vec::with_capacity(pairs.len());
    for result in encoded {
        if let Some(example) = result? {
            out.push(example);
        }
    }
    Ok(out)
}
