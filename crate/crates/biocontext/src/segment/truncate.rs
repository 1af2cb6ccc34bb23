//! Length-limited truncation that always keeps both marked mentions.

use super::tokenizer::TokenId;
use super::{MarkerPositions, SegmentError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncateOutcome {
    pub token_ids: Vec<TokenId>,
    pub markers: MarkerPositions,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
enum Side {
    Head { need: usize },
    Tail { need: usize },
}

/// Truncate a token sequence to fit an encoder window.
///
/// A sequence longer than `max_len` keeps its first `max_len / 2` tokens and
/// last `max_len / 2 - 1` tokens with `sep_id` in between (total `max_len`
/// for even limits, one less for odd ones). If that cut would split a marked
/// mention, the cut on that side is pushed outward past the whole marked
/// span and the other side shrinks by the same amount. Fails when a marked
/// span falls entirely in the dropped middle, when both spans straddle their
/// cuts at once, or when the shifted cut no longer leaves room for the other
/// side.
pub fn truncate(
    token_ids: &[TokenId],
    markers: &MarkerPositions,
    max_len: usize,
    sep_id: TokenId,
) -> Result<TruncateOutcome, SegmentError> {
    let len = token_ids.len();
    if len <= max_len {
        return Ok(TruncateOutcome {
            token_ids: token_ids.to_vec(),
            markers: *markers,
            truncated: false,
        });
    }
    if max_len < 2 {
        return Err(SegmentError::MaxLenTooSmall { max_len });
    }

    let head_default = max_len / 2;
    let tail_default = max_len / 2 - 1;

    let unrecoverable = || SegmentError::UnrecoverableTruncation {
        event_id: String::new(),
        mention_id: String::new(),
        max_len,
    };

    // Decide, per marked span, which side of the cut it must live on and how
    // many tokens that side needs to cover it. Spans are inclusive of both
    // markers.
    let spans = [
        (markers.evt_open, markers.evt_close),
        (markers.con_open, markers.con_close),
    ];
    let mut head = head_default;
    let mut tail = tail_default;
    for (start, end) in spans {
        let side = if end < head_default {
            Side::Head { need: head_default }
        } else if start >= len - tail_default {
            Side::Tail { need: tail_default }
        } else if start < head_default {
            // Straddles the head cut: extend the head past the span.
            Side::Head { need: end + 1 }
        } else if end >= len - tail_default {
            // Straddles the tail cut: extend the tail before the span.
            Side::Tail { need: len - start }
        } else {
            // Entirely inside the dropped middle.
            return Err(unrecoverable());
        };
        match side {
            Side::Head { need } => head = head.max(need),
            Side::Tail { need } => tail = tail.max(need),
        }
    }

    if head + tail + 1 > max_len {
        // One side was extended; shrink the other to compensate.
        let head_extended = head > head_default;
        let tail_extended = tail > tail_default;
        if head_extended && tail_extended {
            return Err(unrecoverable());
        }
        if head_extended {
            tail = (max_len - 1).checked_sub(head).ok_or_else(unrecoverable)?;
        } else {
            head = (max_len - 1).checked_sub(tail).ok_or_else(unrecoverable)?;
        }
        // The shrunken side may no longer cover its span.
        for (start, end) in spans {
            let in_head = end < head;
            let in_tail = start >= len - tail;
            if !in_head && !in_tail {
                return Err(unrecoverable());
            }
        }
    }

    let tail_start = len - tail;
    let mut out = Vec::with_capacity(head + 1 + tail);
    out.extend_from_slice(&token_ids[..head]);
    out.push(sep_id);
    out.extend_from_slice(&token_ids[tail_start..]);

    let remap = |p: usize| -> usize {
        if p < head {
            p
        } else {
            debug_assert!(p >= tail_start, "marker survived on one side");
            p - tail_start + head + 1
        }
    };
    Ok(TruncateOutcome {
        token_ids: out,
        markers: MarkerPositions {
            evt_open: remap(markers.evt_open),
            evt_close: remap(markers.evt_close),
            con_open: remap(markers.con_open),
            con_close: remap(markers.con_close),
        },
        truncated: true,
    })
}
