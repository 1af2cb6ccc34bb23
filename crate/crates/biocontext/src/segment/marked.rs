//! Marking and masking of the sentence window for one mention pair.

use crate::corpus::{ContextMention, Document, EventMention};

use super::tokenizer::{SpecialToken, SubwordTokenizer, TokenId};
use super::{MarkedText, MarkedToken, MarkerPair, MarkerPositions, SegmentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpanKind {
    FocusEvent,
    FocusContext,
    MaskEvent,
    MaskContext,
}

#[derive(Debug, Clone, Copy)]
struct Span {
    sentence: usize,
    start: usize,
    end: usize,
    kind: SpanKind,
}

impl Span {
    fn overlaps(&self, other: &Span) -> bool {
        self.sentence == other.sentence && self.start < other.end && other.start < self.end
    }
}

/// Build the marked, masked word sequence for one event / context-mention
/// pair: all sentences from the earlier to the later of the two, the event
/// span wrapped in `<EVT>`/`</EVT>`, the mention span in `<CON>`/`</CON>`,
/// and every other registered mention inside the window replaced by a single
/// `[EVENT]` or `[CONTEXT]` token.
///
/// A non-focus mention that overlaps a focus span (or an earlier masked span)
/// is left unmasked rather than corrupting the focus markup; overlap between
/// the two focus spans themselves is an error.
pub fn build_marked_text(
    doc: &Document,
    event: &EventMention,
    mention: &ContextMention,
) -> Result<MarkedText, SegmentError> {
    let focus_event = Span {
        sentence: event.sentence_index,
        start: event.start_token,
        end: event.end_token,
        kind: SpanKind::FocusEvent,
    };
    let focus_context = Span {
        sentence: mention.sentence_index,
        start: mention.start_token,
        end: mention.end_token,
        kind: SpanKind::FocusContext,
    };
    if focus_event.overlaps(&focus_context) {
        return Err(SegmentError::OverlappingFocusSpans {
            doc_id: doc.doc_id.clone(),
            event_id: event.event_id.clone(),
            mention_id: mention.mention_id.clone(),
        });
    }

    let lo = event.sentence_index.min(mention.sentence_index);
    let hi = event.sentence_index.max(mention.sentence_index);

    let mut spans = vec![focus_event, focus_context];
    for other in &doc.event_mentions {
        if other.event_id != event.event_id
            && (lo..=hi).contains(&other.sentence_index)
        {
            spans.push(Span {
                sentence: other.sentence_index,
                start: other.start_token,
                end: other.end_token,
                kind: SpanKind::MaskEvent,
            });
        }
    }
    for other in &doc.context_mentions {
        if other.mention_id != mention.mention_id
            && (lo..=hi).contains(&other.sentence_index)
        {
            spans.push(Span {
                sentence: other.sentence_index,
                start: other.start_token,
                end: other.end_token,
                kind: SpanKind::MaskContext,
            });
        }
    }
    // Reading order; focus spans are listed first so they always win the
    // overlap check below.
    spans.sort_by_key(|s| {
        (
            s.sentence,
            s.start,
            s.end,
            matches!(s.kind, SpanKind::MaskEvent | SpanKind::MaskContext),
        )
    });
    let mut accepted: Vec<Span> = Vec::with_capacity(spans.len());
    for span in spans {
        let clashes = accepted.iter().any(|a| a.overlaps(&span));
        match span.kind {
            SpanKind::FocusEvent | SpanKind::FocusContext => {
                debug_assert!(!clashes, "focus overlap checked above");
                accepted.push(span);
            }
            SpanKind::MaskEvent | SpanKind::MaskContext => {
                if !clashes {
                    accepted.push(span);
                }
            }
        }
    }

    let mut tokens = Vec::new();
    let mut event_markers = None;
    let mut context_markers = None;
    for sentence_index in lo..=hi {
        let sentence = &doc.sentences[sentence_index];
        let mut edits = accepted
            .iter()
            .filter(|s| s.sentence == sentence_index)
            .peekable();
        let mut cursor = 0;
        while cursor < sentence.tokens.len() {
            match edits.peek() {
                Some(span) if span.start == cursor => {
                    let span = **span;
                    edits.next();
                    match span.kind {
                        SpanKind::FocusEvent | SpanKind::FocusContext => {
                            let (open, close) =
                                if matches!(span.kind, SpanKind::FocusEvent) {
                                    (SpecialToken::EventOpen, SpecialToken::EventClose)
                                } else {
                                    (SpecialToken::ContextOpen, SpecialToken::ContextClose)
                                };
                            let open_pos = tokens.len();
                            tokens.push(MarkedToken::Special(open));
                            for word in &sentence.tokens[span.start..span.end] {
                                tokens.push(MarkedToken::Word(word.clone()));
                            }
                            let close_pos = tokens.len();
                            tokens.push(MarkedToken::Special(close));
                            let pair = MarkerPair {
                                open: open_pos,
                                close: close_pos,
                            };
                            if matches!(span.kind, SpanKind::FocusEvent) {
                                event_markers = Some(pair);
                            } else {
                                context_markers = Some(pair);
                            }
                        }
                        SpanKind::MaskEvent => {
                            tokens.push(MarkedToken::Special(SpecialToken::EventMask));
                        }
                        SpanKind::MaskContext => {
                            tokens.push(MarkedToken::Special(SpecialToken::ContextMask));
                        }
                    }
                    cursor = span.end;
                }
                _ => {
                    tokens.push(MarkedToken::Word(sentence.tokens[cursor].clone()));
                    cursor += 1;
                }
            }
        }
    }

    Ok(MarkedText {
        tokens,
        event_markers: event_markers.expect("focus event span inside window"),
        context_markers: context_markers.expect("focus context span inside window"),
    })
}

/// Subword-tokenize a marked text, tracking where the four boundary markers
/// land in the id sequence.
pub fn tokenize(
    marked: &MarkedText,
    tokenizer: &dyn SubwordTokenizer,
) -> (Vec<TokenId>, MarkerPositions) {
    let mut ids = Vec::with_capacity(marked.tokens.len());
    let mut word_to_subword = Vec::with_capacity(marked.tokens.len());
    for token in &marked.tokens {
        word_to_subword.push(ids.len());
        match token {
            MarkedToken::Word(w) => {
                ids.extend(tokenizer.encode_word(w, ids.is_empty()));
            }
            MarkedToken::Special(s) => ids.push(tokenizer.special_id(*s)),
        }
    }
    let markers = MarkerPositions {
        evt_open: word_to_subword[marked.event_markers.open],
        evt_close: word_to_subword[marked.event_markers.close],
        con_open: word_to_subword[marked.context_markers.open],
        con_close: word_to_subword[marked.context_markers.close],
    };
    (ids, markers)
}
