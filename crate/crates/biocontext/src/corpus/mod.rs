//! Corpus data model for context-annotated biochemical event extractions.
//!
//! A corpus is a set of full-text articles, each pre-tokenized into sentences
//! and carrying three kinds of extractions: event mentions (biochemical
//! interactions), context mentions (biological containers grounded to ontology
//! ids), and gold annotations linking an event to a context type. Gold
//! annotations are positive-only; negatives come from the cartesian product of
//! events and context types minus the annotated pairs.
//!
//! All types are immutable after load, so every operation here can run
//! concurrently without shared mutable state.

mod candidates;
mod folds;
mod load;
mod stats;

pub use candidates::{generate_candidates, sentence_distance};
pub use folds::{split_folds, Fold, FoldSplit};
pub use load::{load_corpus, load_document, write_corpus, write_document};
pub use stats::{
    corpus_distance_stats, detections_per_type, summarize_corpus, CorpusSummary, DetectionStats,
    DistanceStats, HistogramBucket, SplitSummary,
};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Biological container granularity of a context type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextCategory {
    Species,
    Organ,
    Tissue,
    CellType,
    CellLine,
}

impl ContextCategory {
    pub const ALL: [ContextCategory; 5] = [
        ContextCategory::Species,
        ContextCategory::Organ,
        ContextCategory::Tissue,
        ContextCategory::CellType,
        ContextCategory::CellLine,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ContextCategory::Species => "species",
            ContextCategory::Organ => "organ",
            ContextCategory::Tissue => "tissue",
            ContextCategory::CellType => "cell_type",
            ContextCategory::CellLine => "cell_line",
        }
    }
}

/// Ontology-grounded identity of a context type. Mentions of the same
/// container share one `ContextTypeId` regardless of spelling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextTypeId {
    /// Namespaced ontology identifier, e.g. `taxonomy:9606`.
    pub grounding_id: String,
    pub category: ContextCategory,
}

impl ContextTypeId {
    pub fn new(grounding_id: impl Into<String>, category: ContextCategory) -> Self {
        Self {
            grounding_id: grounding_id.into(),
            category,
        }
    }
}

impl std::fmt::Display for ContextTypeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.grounding_id, self.category.as_str())
    }
}

/// One pre-tokenized sentence. `index` is the position within the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<String>,
}

/// A biochemical interaction mention, spanning tokens
/// `[start_token, end_token)` of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMention {
    pub event_id: String,
    pub sentence_index: usize,
    pub start_token: usize,
    pub end_token: usize,
    /// Interaction label, e.g. `phosphorylation`.
    pub event_label: String,
}

/// A grounded biological-container mention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextMention {
    pub mention_id: String,
    pub sentence_index: usize,
    pub start_token: usize,
    pub end_token: usize,
    pub context_type: ContextTypeId,
}

/// Gold association between an event mention and a context type.
/// Annotations are positive-only; polarity is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextAnnotation {
    pub event_id: String,
    pub context_type: ContextTypeId,
}

/// One article: sentences plus all extractions and gold annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
    pub event_mentions: Vec<EventMention>,
    pub context_mentions: Vec<ContextMention>,
    pub annotations: Vec<ContextAnnotation>,
}

/// A validated set of documents plus the published dev/CV split.
#[derive(Debug, Clone)]
pub struct Corpus {
    /// Sorted by `doc_id`.
    pub documents: Vec<Document>,
    /// Development-set document ids from the corpus manifest.
    pub dev_doc_ids: Vec<String>,
}

/// One evidence mention of a candidate pair's context type, with its
/// sentence distance to the pair's event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceMention {
    pub mention: ContextMention,
    pub distance: usize,
}

/// One (event mention, context type) classification problem.
///
/// Evidence mentions are sorted ascending by distance; ties break toward the
/// mention appearing earlier in the document (smaller sentence index, then
/// smaller start token).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub doc_id: String,
    pub event: EventMention,
    pub context_type: ContextTypeId,
    pub label: bool,
    pub evidence: Vec<EvidenceMention>,
}

impl CandidatePair {
    /// Distance to the nearest evidence mention.
    pub fn nearest_distance(&self) -> usize {
        self.evidence
            .first()
            .map(|e| e.distance)
            .expect("candidate pair invariant: evidence nonempty")
    }

    /// Stable identity string for reports and audit trails.
    pub fn pair_key(&self) -> String {
        format!(
            "{}/{}/{}",
            self.doc_id, self.event.event_id, self.context_type.grounding_id
        )
    }
}

/// Errors from corpus loading and validation.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed corpus file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("corpus file {path}: record {record}: {detail}")]
    Record {
        path: String,
        record: String,
        detail: String,
    },

    #[error("document {doc_id}: {violation}")]
    Validation {
        doc_id: String,
        violation: InvariantViolation,
    },

    #[error("grounding id {grounding_id} carries category {first} in {first_doc} but {second} in {second_doc}")]
    CategoryConflict {
        grounding_id: String,
        first: String,
        first_doc: String,
        second: String,
        second_doc: String,
    },

    #[error("manifest lists document {doc_id} more than once")]
    DuplicateDocument { doc_id: String },

    #[error("dev document id {doc_id} not present in the corpus")]
    UnknownDevDocument { doc_id: String },

    #[error("corpus directory {path} has no manifest.json")]
    MissingManifest { path: String },
}

/// Per-document invariant violations, named with the offending ids.
#[derive(Debug, Error)]
pub enum InvariantViolation {
    #[error("document has no sentences")]
    NoSentences,

    #[error("sentence {index} has no tokens")]
    EmptySentence { index: usize },

    #[error("{kind} mention {id}: sentence index {sentence_index} out of range ({sentence_count} sentences)")]
    SentenceOutOfRange {
        kind: &'static str,
        id: String,
        sentence_index: usize,
        sentence_count: usize,
    },

    #[error("{kind} mention {id}: token span [{start}, {end}) invalid for sentence of {len} tokens")]
    BadTokenSpan {
        kind: &'static str,
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("duplicate {kind} mention id {id}")]
    DuplicateMentionId { kind: &'static str, id: String },

    #[error("annotation references unknown event id {event_id}")]
    UnknownAnnotationEvent { event_id: String },

    #[error("annotation for event {event_id} references context type {grounding_id} with no mention in the document")]
    UnmentionedAnnotationContext {
        event_id: String,
        grounding_id: String,
    },

    #[error("duplicate annotation for event {event_id} and context type {grounding_id}")]
    DuplicateAnnotation {
        event_id: String,
        grounding_id: String,
    },
}

impl Document {
    /// Checks every document invariant, naming the first offender found.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.sentences.is_empty() {
            return Err(InvariantViolation::NoSentences);
        }
        for sentence in &self.sentences {
            if sentence.tokens.is_empty() {
                return Err(InvariantViolation::EmptySentence {
                    index: sentence.index,
                });
            }
        }

        let mut event_ids = HashSet::new();
        for event in &self.event_mentions {
            self.check_span(
                "event",
                &event.event_id,
                event.sentence_index,
                event.start_token,
                event.end_token,
            )?;
            if !event_ids.insert(event.event_id.as_str()) {
                return Err(InvariantViolation::DuplicateMentionId {
                    kind: "event",
                    id: event.event_id.clone(),
                });
            }
        }

        let mut mention_ids = HashSet::new();
        let mut mentioned_types = HashSet::new();
        for mention in &self.context_mentions {
            self.check_span(
                "context",
                &mention.mention_id,
                mention.sentence_index,
                mention.start_token,
                mention.end_token,
            )?;
            if !mention_ids.insert(mention.mention_id.as_str()) {
                return Err(InvariantViolation::DuplicateMentionId {
                    kind: "context",
                    id: mention.mention_id.clone(),
                });
            }
            mentioned_types.insert(mention.context_type.grounding_id.as_str());
        }

        let mut seen_annotations = HashSet::new();
        for annotation in &self.annotations {
            if !event_ids.contains(annotation.event_id.as_str()) {
                return Err(InvariantViolation::UnknownAnnotationEvent {
                    event_id: annotation.event_id.clone(),
                });
            }
            if !mentioned_types.contains(annotation.context_type.grounding_id.as_str()) {
                return Err(InvariantViolation::UnmentionedAnnotationContext {
                    event_id: annotation.event_id.clone(),
                    grounding_id: annotation.context_type.grounding_id.clone(),
                });
            }
            let key = (
                annotation.event_id.as_str(),
                annotation.context_type.grounding_id.as_str(),
            );
            if !seen_annotations.insert(key) {
                return Err(InvariantViolation::DuplicateAnnotation {
                    event_id: annotation.event_id.clone(),
                    grounding_id: annotation.context_type.grounding_id.clone(),
                });
            }
        }
        Ok(())
    }

    fn check_span(
        &self,
        kind: &'static str,
        id: &str,
        sentence_index: usize,
        start: usize,
        end: usize,
    ) -> Result<(), InvariantViolation> {
        let Some(sentence) = self.sentences.get(sentence_index) else {
            return Err(InvariantViolation::SentenceOutOfRange {
                kind,
                id: id.to_string(),
                sentence_index,
                sentence_count: self.sentences.len(),
            });
        };
        if start >= end || end > sentence.tokens.len() {
            return Err(InvariantViolation::BadTokenSpan {
                kind,
                id: id.to_string(),
                start,
                end,
                len: sentence.tokens.len(),
            });
        }
        Ok(())
    }

    /// Distinct context types mentioned in this document, in grounding-id order.
    pub fn context_types(&self) -> Vec<ContextTypeId> {
        let set: BTreeSet<&ContextTypeId> =
            self.context_mentions.iter().map(|m| &m.context_type).collect();
        set.into_iter().cloned().collect()
    }

    /// Gold (event id, grounding id) pairs.
    pub fn annotated_pairs(&self) -> HashSet<(&str, &str)> {
        self.annotations
            .iter()
            .map(|a| (a.event_id.as_str(), a.context_type.grounding_id.as_str()))
            .collect()
    }
}

impl Corpus {
    pub fn new(mut documents: Vec<Document>, dev_doc_ids: Vec<String>) -> Result<Self, CorpusError> {
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        for doc in &documents {
            doc.validate().map_err(|violation| CorpusError::Validation {
                doc_id: doc.doc_id.clone(),
                violation,
            })?;
        }
        check_category_consistency(&documents)?;
        let ids: HashSet<&str> = documents.iter().map(|d| d.doc_id.as_str()).collect();
        if ids.len() != documents.len() {
            let dup = documents
                .iter()
                .map(|d| d.doc_id.as_str())
                .fold(HashMap::new(), |mut acc, id| {
                    *acc.entry(id).or_insert(0usize) += 1;
                    acc
                })
                .into_iter()
                .find(|(_, n)| *n > 1)
                .map(|(id, _)| id.to_string())
                .unwrap_or_default();
            return Err(CorpusError::DuplicateDocument { doc_id: dup });
        }
        for dev_id in &dev_doc_ids {
            if !ids.contains(dev_id.as_str()) {
                return Err(CorpusError::UnknownDevDocument {
                    doc_id: dev_id.clone(),
                });
            }
        }
        Ok(Self {
            documents,
            dev_doc_ids,
        })
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.documents[i])
    }

    /// Documents outside the dev split, in corpus order.
    pub fn cv_documents(&self) -> Vec<&Document> {
        let dev: HashSet<&str> = self.dev_doc_ids.iter().map(String::as_str).collect();
        self.documents
            .iter()
            .filter(|d| !dev.contains(d.doc_id.as_str()))
            .collect()
    }
}

/// A grounding id must carry one category across the whole corpus.
fn check_category_consistency(documents: &[Document]) -> Result<(), CorpusError> {
    let mut seen: BTreeMap<&str, (ContextCategory, &str)> = BTreeMap::new();
    for doc in documents {
        for mention in &doc.context_mentions {
            let grounding = mention.context_type.grounding_id.as_str();
            match seen.get(grounding) {
                None => {
                    seen.insert(grounding, (mention.context_type.category, &doc.doc_id));
                }
                Some((category, first_doc)) if *category != mention.context_type.category => {
                    return Err(CorpusError::CategoryConflict {
                        grounding_id: grounding.to_string(),
                        first: category.as_str().to_string(),
                        first_doc: first_doc.to_string(),
                        second: mention.context_type.category.as_str().to_string(),
                        second_doc: doc.doc_id.clone(),
                    });
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}


#[cfg(any(test, feature = "test-support"))]
pub mod test_support {
    //! Small hand-built documents shared across unit tests.

    use super::*;

    fn sentence(index: usize, text: &str) -> Sentence {
        Sentence {
            index,
            tokens: text.split_whitespace().map(str::to_string).collect(),
        }
    }

    /// Three-sentence document: two events, two context types, one annotation.
    ///
    /// ```text
    /// s0: Transfection of R-Ras reduced expression in PC12 cells .
    /// s1: These results demonstrate activation of R-Ras protein .
    /// s2: Sema4D inhibits PI3-K activity in human subjects .
    /// ```
    pub fn tiny_document(doc_id: &str) -> Document {
        Document {
            doc_id: doc_id.to_string(),
            sentences: vec![
                sentence(0, "Transfection of R-Ras reduced expression in PC12 cells ."),
                sentence(1, "These results demonstrate activation of R-Ras protein ."),
                sentence(2, "Sema4D inhibits PI3-K activity in human subjects ."),
            ],
            event_mentions: vec![
                EventMention {
                    event_id: "e0".into(),
                    sentence_index: 0,
                    start_token: 3,
                    end_token: 5,
                    event_label: "expression".into(),
                },
                EventMention {
                    event_id: "e1".into(),
                    sentence_index: 2,
                    start_token: 1,
                    end_token: 4,
                    event_label: "inhibition".into(),
                },
            ],
            context_mentions: vec![
                ContextMention {
                    mention_id: "c0".into(),
                    sentence_index: 0,
                    start_token: 6,
                    end_token: 8,
                    context_type: ContextTypeId::new("cellosaurus:CVCL_0481", ContextCategory::CellLine),
                },
                ContextMention {
                    mention_id: "c1".into(),
                    sentence_index: 2,
                    start_token: 5,
                    end_token: 6,
                    context_type: ContextTypeId::new("taxonomy:9606", ContextCategory::Species),
                },
            ],
            annotations: vec![ContextAnnotation {
                event_id: "e0".into(),
                context_type: ContextTypeId::new("cellosaurus:CVCL_0481", ContextCategory::CellLine),
            }],
        }
    }

    /// Two-document corpus with `doc_a` as the dev split.
    pub fn tiny_corpus() -> Corpus {
        let mut doc_b = tiny_document("doc_b");
        doc_b.annotations.push(ContextAnnotation {
            event_id: "e1".into(),
            context_type: ContextTypeId::new("taxonomy:9606", ContextCategory::Species),
        });
        Corpus::new(vec![tiny_document("doc_a"), doc_b], vec!["doc_a".into()]).unwrap()
    }
}
