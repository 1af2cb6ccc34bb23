//! Per-pair segment assembly.

use crate::corpus::{CandidatePair, Document};

use super::marked::{build_marked_text, tokenize};
use super::tokenizer::SubwordTokenizer;
use super::truncate::truncate;
use super::{EvidenceSegment, SegmentError};

/// Build encoder-ready segments for the `k` nearest evidence mentions of a
/// candidate pair (all of them if there are fewer). A mention whose segment
/// cannot be built (overlapping focus spans, unrecoverable truncation) is
/// dropped with a warning; if none survive the pair itself is unusable.
pub fn build_segments(
    doc: &Document,
    pair: &CandidatePair,
    k: usize,
    tokenizer: &dyn SubwordTokenizer,
    max_len: usize,
) -> Result<Vec<EvidenceSegment>, SegmentError> {
    if doc.doc_id != pair.doc_id {
        return Err(SegmentError::DocumentMismatch {
            pair_doc: pair.doc_id.clone(),
            doc: doc.doc_id.clone(),
        });
    }
    let mut segments = Vec::new();
    let mut failures = Vec::new();
    for evidence in pair.evidence.iter().take(k) {
        match build_one(doc, pair, evidence.distance, tokenizer, max_len, evidence) {
            Ok(segment) => segments.push(segment),
            Err(err) => {
                log::warn!("dropping segment for {}: {err}", pair.pair_key());
                failures.push(err.to_string());
            }
        }
    }
    if segments.is_empty() {
        return Err(SegmentError::NoUsableSegments {
            pair: pair.pair_key(),
            detail: if failures.is_empty() {
                "pair has no evidence mentions".to_string()
            } else {
                failures.join("; ")
            },
        });
    }
    Ok(segments)
}

fn build_one(
    doc: &Document,
    pair: &CandidatePair,
    distance: usize,
    tokenizer: &dyn SubwordTokenizer,
    max_len: usize,
    evidence: &crate::corpus::EvidenceMention,
) -> Result<EvidenceSegment, SegmentError> {
    let marked = build_marked_text(doc, &pair.event, &evidence.mention)?;
    let (ids, markers) = tokenize(&marked, tokenizer);
    let outcome = truncate(&ids, &markers, max_len, tokenizer.separator_id()).map_err(
        |err| match err {
            SegmentError::UnrecoverableTruncation { max_len, .. } => {
                SegmentError::UnrecoverableTruncation {
                    event_id: pair.event.event_id.clone(),
                    mention_id: evidence.mention.mention_id.clone(),
                    max_len,
                }
            }
            other => other,
        },
    )?;
    Ok(EvidenceSegment {
        doc_id: doc.doc_id.clone(),
        event_id: pair.event.event_id.clone(),
        mention_id: evidence.mention.mention_id.clone(),
        token_ids: outcome.token_ids,
        markers: outcome.markers,
        distance,
        truncated: outcome.truncated,
    })
}

/// One tab-separated line per segment for eyeballing what the encoder sees:
/// ids, distance, truncation flag, then the detokenized text.
pub fn segment_debug_line(segment: &EvidenceSegment, tokenizer: &dyn SubwordTokenizer) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        segment.doc_id,
        segment.event_id,
        segment.mention_id,
        segment.distance,
        if segment.truncated { "truncated" } else { "full" },
        tokenizer.decode(&segment.token_ids),
    )
}
