//! Candidate-pair generation.
//!
//! Gold annotations are positive-only, so negatives are generated
//! automatically: one candidate per (event mention, context type mentioned in
//! the document), labeled positive exactly when annotated. On the published
//! corpus this yields a severe class imbalance (≈96% negative).

use super::{CandidatePair, ContextMention, Document, EventMention, EvidenceMention};

/// Absolute sentence-index distance between an event and a context mention
/// of the same document. Zero iff they share a sentence.
pub fn sentence_distance(event: &EventMention, mention: &ContextMention) -> usize {
    event.sentence_index.abs_diff(mention.sentence_index)
}

/// Enumerates every (event mention, context type) pair of the document.
///
/// The pair's evidence list holds all mentions of that type, sorted ascending
/// by sentence distance to the event; ties break toward the mention appearing
/// earlier in the document (smaller sentence index, then smaller start token).
pub fn generate_candidates(doc: &Document) -> Vec<CandidatePair> {
    let annotated = doc.annotated_pairs();
    let context_types = doc.context_types();

    let mut pairs = Vec::with_capacity(doc.event_mentions.len() * context_types.len());
    for event in &doc.event_mentions {
        for context_type in &context_types {
            let mut evidence: Vec<EvidenceMention> = doc
                .context_mentions
                .iter()
                .filter(|m| m.context_type == *context_type)
                .map(|m| EvidenceMention {
                    distance: sentence_distance(event, m),
                    mention: m.clone(),
                })
                .collect();
            evidence.sort_by_key(|e| (e.distance, e.mention.sentence_index, e.mention.start_token));

            let label = annotated.contains(&(
                event.event_id.as_str(),
                context_type.grounding_id.as_str(),
            ));
            pairs.push(CandidatePair {
                doc_id: doc.doc_id.clone(),
                event: event.clone(),
                context_type: context_type.clone(),
                label,
                evidence,
            });
        }
    }
    pairs
}
