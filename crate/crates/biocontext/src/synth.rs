//! Synthetic corpora with a planted lexical signal.
//!
//! Positive context types surface as the word `ctxpos`, distractor types as
//! `ctxneg`. Pair a generated corpus with a mock encoder whose sentinel
//! token is the vocabulary id of `ctxpos`: every evidence segment of a
//! positive pair keeps its focus mention (and with it the sentinel) while
//! negative segments have all positive mentions masked away, so gold labels
//! are linearly recoverable from the embeddings. Anchor sentences are
//! shuffled per document, which decorrelates label and distance and keeps
//! distance heuristics from shortcutting the task.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    ContextAnnotation, ContextCategory, ContextMention, ContextTypeId, Corpus, Document,
    EventMention, Sentence,
};

/// Mention surface of context types annotated to every event.
pub const POSITIVE_WORD: &str = "ctxpos";
/// Mention surface of distractor context types.
pub const NEGATIVE_WORD: &str = "ctxneg";

const FILLER: [&str; 12] = [
    "the", "kinase", "pathway", "signal", "binding", "assay", "cells", "levels", "were",
    "observed", "after", "treatment",
];

const EVENT_WORDS: [&str; 2] = ["phospho", "activation"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    /// Leading documents (by sorted id) reserved as the dev split.
    pub dev_docs: usize,
    pub sentences_per_doc: usize,
    pub events_per_doc: usize,
    pub positive_types_per_doc: usize,
    pub negative_types_per_doc: usize,
    pub mentions_per_type: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 20,
            dev_docs: 2,
            sentences_per_doc: 12,
            events_per_doc: 3,
            positive_types_per_doc: 2,
            negative_types_per_doc: 2,
            mentions_per_type: 2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn anchors_per_doc(&self) -> usize {
        self.events_per_doc
            + (self.positive_types_per_doc + self.negative_types_per_doc) * self.mentions_per_type
    }
}

/// Deterministically generate a corpus per the config. Every event of every
/// document is annotated with each positive type of that document; negative
/// types are never annotated.
pub fn synth_corpus(config: &SynthConfig) -> Corpus {
    assert!(config.dev_docs < config.n_docs, "dev split must leave CV documents");
    assert!(
        config.sentences_per_doc >= config.anchors_per_doc(),
        "each event and mention needs its own sentence",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let documents: Vec<Document> = (0..config.n_docs)
        .map(|i| synth_document(&format!("synth_{i:03}"), config, &mut rng))
        .collect();
    let dev_doc_ids = documents[..config.dev_docs]
        .iter()
        .map(|d| d.doc_id.clone())
        .collect();
    Corpus::new(documents, dev_doc_ids).expect("generated corpus is internally consistent")
}

fn synth_document(doc_id: &str, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Document {
    let sentences: Vec<Sentence> = (0..config.sentences_per_doc)
        .map(|index| {
            let len = rng.random_range(8..=11);
            let tokens = (0..len)
                .map(|_| FILLER[rng.random_range(0..FILLER.len())].to_string())
                .collect();
            Sentence { index, tokens }
        })
        .collect();

    // One anchor (event or mention) per sentence, placement shuffled.
    let mut slots: Vec<usize> = (0..config.sentences_per_doc).collect();
    slots.shuffle(rng);
    let mut slots = slots.into_iter();
    let mut sentences = sentences;

    let event_mentions: Vec<EventMention> = (0..config.events_per_doc)
        .map(|j| {
            let sentence_index = slots.next().expect("slot per anchor");
            for (offset, word) in EVENT_WORDS.iter().enumerate() {
                sentences[sentence_index].tokens[2 + offset] = word.to_string();
            }
            EventMention {
                event_id: format!("e{j}"),
                sentence_index,
                start_token: 2,
                end_token: 2 + EVENT_WORDS.len(),
                event_label: "phosphorylation".into(),
            }
        })
        .collect();

    let categories = [
        ContextCategory::Species,
        ContextCategory::CellType,
        ContextCategory::Tissue,
        ContextCategory::Organ,
        ContextCategory::CellLine,
    ];
    let mut context_mentions = Vec::new();
    let mut types = Vec::new();
    let n_types = config.positive_types_per_doc + config.negative_types_per_doc;
    for t in 0..n_types {
        let positive = t < config.positive_types_per_doc;
        let context_type = ContextTypeId::new(
            if positive {
                format!("synthpos:{t}")
            } else {
                format!("synthneg:{}", t - config.positive_types_per_doc)
            },
            categories[t % categories.len()],
        );
        types.push((context_type.clone(), positive));
        for m in 0..config.mentions_per_type {
            let sentence_index = slots.next().expect("slot per anchor");
            sentences[sentence_index].tokens[5] =
                (if positive { POSITIVE_WORD } else { NEGATIVE_WORD }).to_string();
            context_mentions.push(ContextMention {
                mention_id: format!("c{t}_{m}"),
                sentence_index,
                start_token: 5,
                end_token: 6,
                context_type: context_type.clone(),
            });
        }
    }

    let annotations = event_mentions
        .iter()
        .flat_map(|event| {
            types.iter().filter(|(_, positive)| *positive).map(|(ty, _)| ContextAnnotation {
                event_id: event.event_id.clone(),
                context_type: ty.clone(),
            })
        })
        .collect();

    Document {
        doc_id: doc_id.to_string(),
        sentences,
        event_mentions,
        context_mentions,
        annotations,
    }
}
