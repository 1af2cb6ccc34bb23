//! Subword tokenizer abstraction and a whitespace/word-level implementation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

/// Subword vocabulary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The marker and mask tokens inserted into segment text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpecialToken {
    EventOpen,
    EventClose,
    ContextOpen,
    ContextClose,
    EventMask,
    ContextMask,
}

impl SpecialToken {
    pub const ALL: [SpecialToken; 6] = [
        SpecialToken::EventOpen,
        SpecialToken::EventClose,
        SpecialToken::ContextOpen,
        SpecialToken::ContextClose,
        SpecialToken::EventMask,
        SpecialToken::ContextMask,
    ];

    pub fn surface(self) -> &'static str {
        match self {
            SpecialToken::EventOpen => "<EVT>",
            SpecialToken::EventClose => "</EVT>",
            SpecialToken::ContextOpen => "<CON>",
            SpecialToken::ContextClose => "</CON>",
            SpecialToken::EventMask => "[EVENT]",
            SpecialToken::ContextMask => "[CONTEXT]",
        }
    }
}

/// Which token joins the prefix and suffix of a truncated segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorStyle {
    /// Reuse the tokenizer's native separator (e.g. `</s>`).
    #[default]
    Native,
    /// Use a dedicated `<SEP>` token added to the vocabulary.
    Dedicated,
}

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parsing {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error("vocabulary does not define required token {token:?}")]
    MissingToken { token: String },
}

/// Maps words to subword token ids. Implementations must map each special
/// token to a single dedicated id so markers survive tokenization intact.
pub trait SubwordTokenizer: Send + Sync {
    /// Encode one word. `first_in_text` is true for the first word of a
    /// segment; byte-level tokenizers use it to decide space prefixing.
    fn encode_word(&self, word: &str, first_in_text: bool) -> Vec<TokenId>;

    /// The single id reserved for a marker or mask token.
    fn special_id(&self, special: SpecialToken) -> TokenId;

    /// The id joining prefix and suffix of a truncated segment.
    fn separator_id(&self) -> TokenId;

    /// Human-readable reconstruction for debugging; markers and masks are
    /// rendered verbatim.
    fn decode(&self, ids: &[TokenId]) -> String;

    fn vocab_size(&self) -> usize;
}

const UNK_SURFACE: &str = "<UNK>";
const SEP_SURFACE: &str = "<SEP>";

/// Word-level tokenizer over a fixed vocabulary: every word is a single
/// token, unknown words map to `<UNK>`. Ids 0..=5 are the special tokens,
/// 6 is `<SEP>`, 7 is `<UNK>`, words follow in sorted order.
#[derive(Debug, Clone)]
pub struct WordVocabTokenizer {
    word_to_id: BTreeMap<String, TokenId>,
    id_to_surface: Vec<String>,
}

const WORD_VOCAB_RESERVED: usize = 8;

impl WordVocabTokenizer {
    /// Build from every token of every sentence in the corpus.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_words(
            corpus
                .documents
                .iter()
                .flat_map(|d| d.sentences.iter())
                .flat_map(|s| s.tokens.iter().cloned()),
        )
    }

    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut id_to_surface: Vec<String> = SpecialToken::ALL
            .iter()
            .map(|s| s.surface().to_string())
            .collect();
        id_to_surface.push(SEP_SURFACE.to_string());
        id_to_surface.push(UNK_SURFACE.to_string());
        debug_assert_eq!(id_to_surface.len(), WORD_VOCAB_RESERVED);

        let unique: BTreeMap<String, ()> = words
            .into_iter()
            .filter(|w| !id_to_surface.iter().any(|r| r == w))
            .map(|w| (w, ()))
            .collect();

        let mut word_to_id = BTreeMap::new();
        for (word, ()) in unique {
            let id = TokenId(id_to_surface.len() as u32);
            id_to_surface.push(word.clone());
            word_to_id.insert(word, id);
        }
        WordVocabTokenizer {
            word_to_id,
            id_to_surface,
        }
    }

    pub fn word_id(&self, word: &str) -> Option<TokenId> {
        self.word_to_id.get(word).copied()
    }
}

impl SubwordTokenizer for WordVocabTokenizer {
    fn encode_word(&self, word: &str, _first_in_text: bool) -> Vec<TokenId> {
        vec![self
            .word_id(word)
            .unwrap_or(TokenId(WORD_VOCAB_RESERVED as u32 - 1))]
    }

    fn special_id(&self, special: SpecialToken) -> TokenId {
        let idx = SpecialToken::ALL
            .iter()
            .position(|s| *s == special)
            .expect("special token in ALL");
        TokenId(idx as u32)
    }

    fn separator_id(&self) -> TokenId {
        TokenId(SpecialToken::ALL.len() as u32)
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .map(|id| {
                self.id_to_surface
                    .get(id.index())
                    .map(String::as_str)
                    .unwrap_or(UNK_SURFACE)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn vocab_size(&self) -> usize {
        self.id_to_surface.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> WordVocabTokenizer {
        WordVocabTokenizer::from_words(
            ["the", "cell", "binds", "the"].map(str::to_string),
        )
    }

    #[test]
    fn specials_have_stable_low_ids() {
        let tok = toy();
        assert_eq!(tok.special_id(SpecialToken::EventOpen), TokenId(0));
        assert_eq!(tok.special_id(SpecialToken::ContextMask), TokenId(5));
        assert_eq!(tok.separator_id(), TokenId(6));
    }

    #[test]
    fn words_get_sorted_ids_after_reserved_range() {
        let tok = toy();
        // Sorted unique words: binds, cell, the.
        assert_eq!(tok.word_id("binds"), Some(TokenId(8)));
        assert_eq!(tok.word_id("cell"), Some(TokenId(9)));
        assert_eq!(tok.word_id("the"), Some(TokenId(10)));
        assert_eq!(tok.vocab_size(), 11);
    }

    #[test]
    fn unknown_word_maps_to_unk() {
        let tok = toy();
        assert_eq!(tok.encode_word("kinase", false), vec![TokenId(7)]);
        assert_eq!(tok.decode(&[TokenId(7)]), "<UNK>");
    }

    #[test]
    fn decode_renders_specials_verbatim() {
        let tok = toy();
        let ids = [
            tok.special_id(SpecialToken::EventOpen),
            tok.word_id("binds").unwrap(),
            tok.special_id(SpecialToken::EventClose),
            tok.separator_id(),
        ];
        assert_eq!(tok.decode(&ids), "<EVT> binds </EVT> <SEP>");
    }

    #[test]
    fn corpus_vocabulary_covers_all_sentence_tokens() {
        let corpus = crate::corpus::test_support::tiny_corpus();
        let tok = WordVocabTokenizer::from_corpus(&corpus);
        for doc in &corpus.documents {
            for sentence in &doc.sentences {
                for word in &sentence.tokens {
                    assert!(tok.word_id(word).is_some(), "missing {word:?}");
                }
            }
        }
    }
}
