//! Evidence-segment construction.
//!
//! For one (event mention, context mention) instance, the segment is the
//! concatenation of the sentence containing the event, the sentence containing
//! the context mention, and everything between. The focus event span is
//! wrapped in `<EVT>`/`</EVT>`, the focus context span in `<CON>`/`</CON>`,
//! and every other registered mention in the window is masked with a single
//! `[EVENT]` or `[CONTEXT]` token so the classifier only sees the pair under
//! consideration. The marked text is then subword-tokenized and, if too long
//! for the encoder, truncated to a prefix and suffix joined by a separator
//! token, always retaining both marked mentions.
//!
//! Everything here is a pure function over immutable inputs; segments for
//! different pairs can be built in parallel.

mod bpe;
mod build;
mod marked;
mod tokenizer;
mod truncate;

pub use bpe::BpeTokenizer;
pub use build::{build_segments, segment_debug_line};
pub use marked::{build_marked_text, tokenize};
pub use tokenizer::{SeparatorStyle, SpecialToken, SubwordTokenizer, TokenId, WordVocabTokenizer};
pub use truncate::truncate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Word positions of one opening/closing marker pair inside a [`MarkedText`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerPair {
    pub open: usize,
    pub close: usize,
}

/// One word-level token of a marked text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkedToken {
    Word(String),
    Special(SpecialToken),
}

impl MarkedToken {
    pub fn surface(&self) -> &str {
        match self {
            MarkedToken::Word(w) => w,
            MarkedToken::Special(s) => s.surface(),
        }
    }
}

/// Word-level marked and masked text for one (event, context mention) pair.
///
/// Exactly one `<EVT>`/`</EVT>` pair and one `<CON>`/`</CON>` pair, openings
/// before closings, never nested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedText {
    pub tokens: Vec<MarkedToken>,
    pub event_markers: MarkerPair,
    pub context_markers: MarkerPair,
}

/// Subword indices of the four boundary markers of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerPositions {
    pub evt_open: usize,
    pub evt_close: usize,
    pub con_open: usize,
    pub con_close: usize,
}

impl MarkerPositions {
    pub fn as_array(&self) -> [usize; 4] {
        [self.evt_open, self.evt_close, self.con_open, self.con_close]
    }

    /// Positions of the two opening markers only.
    pub fn openers(&self) -> [usize; 2] {
        [self.evt_open, self.con_open]
    }
}

/// Encoder-ready token sequence for one (event, context mention) instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSegment {
    pub doc_id: String,
    pub event_id: String,
    pub mention_id: String,
    pub token_ids: Vec<TokenId>,
    pub markers: MarkerPositions,
    /// Sentence distance between the event and this evidence mention.
    pub distance: usize,
    pub truncated: bool,
}

/// Errors from segment construction and tokenizer setup.
#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("document {doc_id}: event {event_id} and context mention {mention_id} have overlapping token spans")]
    OverlappingFocusSpans {
        doc_id: String,
        event_id: String,
        mention_id: String,
    },

    #[error("pair belongs to document {pair_doc} but document {doc} was supplied")]
    DocumentMismatch { pair_doc: String, doc: String },

    #[error("max_len {max_len} is too small to truncate around both marker pairs")]
    MaxLenTooSmall { max_len: usize },

    #[error("segment for event {event_id} / mention {mention_id} cannot be truncated to {max_len} tokens without losing a marker pair")]
    UnrecoverableTruncation {
        event_id: String,
        mention_id: String,
        max_len: usize,
    },

    #[error("pair {pair}: no usable evidence segments ({detail})")]
    NoUsableSegments { pair: String, detail: String },

    #[error("tokenizer setup: {0}")]
    Tokenizer(#[from] tokenizer::TokenizerError),
}
