//! Byte-level BPE tokenizer loading `vocab.json` + `merges.txt`.
//!
//! Word pieces are computed over a reversible byte-to-unicode alphabet, so
//! any UTF-8 input tokenizes without loss. Marker and mask tokens absent
//! from the vocabulary are appended as extra ids past the base vocabulary;
//! the encoder seeds embedding rows for them.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::tokenizer::{SeparatorStyle, SpecialToken, SubwordTokenizer, TokenId, TokenizerError};

const NATIVE_SEPARATOR: &str = "</s>";
const DEDICATED_SEPARATOR: &str = "<SEP>";
const UNK: &str = "<unk>";

#[derive(Debug, Clone)]
pub struct BpeTokenizer {
    encoder: HashMap<String, u32>,
    decoder: HashMap<u32, String>,
    merges: HashMap<(String, String), usize>,
    byte_to_char: [char; 256],
    char_to_byte: HashMap<char, u8>,
    special_ids: [u32; 6],
    /// Ids past the base vocabulary, in order of assignment, with surfaces.
    extended: Vec<(u32, String)>,
    separator: u32,
    unk: u32,
    base_vocab: usize,
}

impl BpeTokenizer {
    /// Load from a directory containing `vocab.json` and `merges.txt`.
    pub fn from_pretrained_dir(
        dir: &Path,
        separator: SeparatorStyle,
    ) -> Result<Self, TokenizerError> {
        let vocab_path = dir.join("vocab.json");
        let merges_path = dir.join("merges.txt");
        let vocab_text = fs::read_to_string(&vocab_path).map_err(|source| TokenizerError::Io {
            path: vocab_path.display().to_string(),
            source,
        })?;
        let encoder: HashMap<String, u32> =
            serde_json::from_str(&vocab_text).map_err(|e| TokenizerError::Parse {
                path: vocab_path.display().to_string(),
                detail: e.to_string(),
            })?;
        let merges_text = fs::read_to_string(&merges_path).map_err(|source| TokenizerError::Io {
            path: merges_path.display().to_string(),
            source,
        })?;
        let mut merges = HashMap::new();
        for (rank, line) in merges_text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with("#version"))
            .enumerate()
        {
            let mut parts = line.split(' ');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(TokenizerError::Parse {
                    path: merges_path.display().to_string(),
                    detail: format!("bad merge line {line:?}"),
                });
            };
            merges.insert((a.to_string(), b.to_string()), rank);
        }
        Self::new(encoder, merges, separator)
    }

    pub fn new(
        encoder: HashMap<String, u32>,
        merges: HashMap<(String, String), usize>,
        separator: SeparatorStyle,
    ) -> Result<Self, TokenizerError> {
        let unk = *encoder.get(UNK).ok_or_else(|| TokenizerError::MissingToken {
            token: UNK.to_string(),
        })?;
        let base_vocab = encoder
            .values()
            .map(|&id| id as usize + 1)
            .max()
            .unwrap_or(0);
        let mut next_id = base_vocab as u32;
        let mut extended = Vec::new();
        let mut assign = |surface: &str, encoder: &HashMap<String, u32>| -> u32 {
            if let Some(&id) = encoder.get(surface) {
                id
            } else {
                let id = next_id;
                next_id += 1;
                extended.push((id, surface.to_string()));
                id
            }
        };
        let special_ids = SpecialToken::ALL.map(|s| assign(s.surface(), &encoder));
        let separator = match separator {
            SeparatorStyle::Native => {
                *encoder
                    .get(NATIVE_SEPARATOR)
                    .ok_or_else(|| TokenizerError::MissingToken {
                        token: NATIVE_SEPARATOR.to_string(),
                    })?
            }
            SeparatorStyle::Dedicated => assign(DEDICATED_SEPARATOR, &encoder),
        };
        let decoder = encoder.iter().map(|(t, &id)| (id, t.clone())).collect();
        let (byte_to_char, char_to_byte) = byte_unicode_tables();
        Ok(BpeTokenizer {
            encoder,
            decoder,
            merges,
            byte_to_char,
            char_to_byte,
            special_ids,
            extended,
            separator,
            unk,
            base_vocab,
        })
    }

    /// Vocabulary size without the appended marker/separator ids.
    pub fn base_vocab_size(&self) -> usize {
        self.base_vocab
    }

    /// Ids appended past the base vocabulary, with their surfaces.
    pub fn extended_tokens(&self) -> &[(u32, String)] {
        &self.extended
    }

    fn bpe(&self, piece: &str) -> Vec<String> {
        let mut word: Vec<String> = piece.chars().map(|c| c.to_string()).collect();
        while word.len() >= 2 {
            let mut best: Option<(usize, (String, String))> = None;
            for pair in word.windows(2) {
                let key = (pair[0].clone(), pair[1].clone());
                if let Some(&rank) = self.merges.get(&key) {
                    if best.as_ref().is_none_or(|(r, _)| rank < *r) {
                        best = Some((rank, key));
                    }
                }
            }
            let Some((_, (a, b))) = best else { break };
            let mut merged = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == a && word[i + 1] == b {
                    merged.push(format!("{a}{b}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut word[i]));
                    i += 1;
                }
            }
            word = merged;
        }
        word
    }
}

impl SubwordTokenizer for BpeTokenizer {
    fn encode_word(&self, word: &str, first_in_text: bool) -> Vec<TokenId> {
        if word.is_empty() {
            return Vec::new();
        }
        let spaced;
        let text = if first_in_text {
            word
        } else {
            spaced = format!(" {word}");
            &spaced
        };
        let mapped: String = text.bytes().map(|b| self.byte_to_char[b as usize]).collect();
        self.bpe(&mapped)
            .into_iter()
            .map(|piece| {
                TokenId(self.encoder.get(&piece).copied().unwrap_or(self.unk))
            })
            .collect()
    }

    fn special_id(&self, special: SpecialToken) -> TokenId {
        let idx = SpecialToken::ALL
            .iter()
            .position(|s| *s == special)
            .expect("special token in ALL");
        TokenId(self.special_ids[idx])
    }

    fn separator_id(&self) -> TokenId {
        TokenId(self.separator)
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        let mut out = String::new();
        let mut after_special = false;
        for id in ids {
            let special = self
                .special_ids
                .iter()
                .position(|&s| s == id.0)
                .map(|idx| SpecialToken::ALL[idx].surface())
                .or_else(|| {
                    self.extended
                        .iter()
                        .find(|(eid, _)| *eid == id.0)
                        .map(|(_, surface)| surface.as_str())
                });
            if let Some(surface) = special {
                if !out.is_empty() && !out.ends_with(' ') {
                    out.push(' ');
                }
                out.push_str(surface);
                after_special = true;
            } else {
                let piece = match self.decoder.get(&id.0) {
                    Some(token) => {
                        let bytes: Vec<u8> = token
                            .chars()
                            .filter_map(|c| self.char_to_byte.get(&c).copied())
                            .collect();
                        String::from_utf8_lossy(&bytes).into_owned()
                    }
                    None => UNK.to_string(),
                };
                if after_special && !piece.starts_with(' ') {
                    out.push(' ');
                }
                out.push_str(&piece);
                after_special = false;
            }
        }
        out.trim().to_string()
    }

    fn vocab_size(&self) -> usize {
        self.base_vocab + self.extended.len()
    }
}

/// The reversible byte-to-printable-unicode mapping used by byte-level BPE
/// vocabularies: printable latin bytes map to themselves, the rest to
/// codepoints starting at 256.
fn byte_unicode_tables() -> ([char; 256], HashMap<char, u8>) {
    let mut byte_to_char = ['\0'; 256];
    let printable = (b'!'..=b'~')
        .chain(0xA1..=0xAC)
        .chain(0xAE..=0xFF);
    let mut taken = [false; 256];
    for b in printable {
        byte_to_char[b as usize] = char::from_u32(b as u32).expect("latin-1 codepoint");
        taken[b as usize] = true;
    }
    let mut next = 0u32;
    for b in 0..256 {
        if !taken[b] {
            byte_to_char[b] = char::from_u32(256 + next).expect("bmp codepoint");
            next += 1;
        }
    }
    let char_to_byte = byte_to_char
        .iter()
        .enumerate()
        .map(|(b, &c)| (c, b as u8))
        .collect();
    (byte_to_char, char_to_byte)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> BpeTokenizer {
        let vocab: HashMap<String, u32> = [
            ("<s>", 0),
            ("<pad>", 1),
            ("</s>", 2),
            ("<unk>", 3),
            ("c", 4),
            ("e", 5),
            ("l", 6),
            ("ll", 7),
            ("ell", 8),
            ("cell", 9),
            ("\u{120}", 10),     // mapped space
            ("\u{120}cell", 11), // " cell"
            ("x", 12),
        ]
        .into_iter()
        .map(|(t, id)| (t.to_string(), id))
        .collect();
        let merges: HashMap<(String, String), usize> = [
            (("l", "l"), 0),
            (("e", "ll"), 1),
            (("c", "ell"), 2),
            (("\u{120}", "cell"), 3),
        ]
        .into_iter()
        .map(|((a, b), r)| ((a.to_string(), b.to_string()), r))
        .collect();
        BpeTokenizer::new(vocab, merges, SeparatorStyle::Native).unwrap()
    }

    #[test]
    fn merges_apply_in_rank_order() {
        let tok = toy();
        assert_eq!(tok.encode_word("cell", true), vec![TokenId(9)]);
        assert_eq!(tok.encode_word("cell", false), vec![TokenId(11)]);
        // "cells" has no merge path past "cell"+"s"; "s" is unknown.
        assert_eq!(
            tok.encode_word("cells", true),
            vec![TokenId(9), TokenId(3)],
        );
    }

    #[test]
    fn space_mapping_is_reversible() {
        let (to_char, to_byte) = byte_unicode_tables();
        assert_eq!(to_char[b' ' as usize], '\u{120}');
        assert_eq!(to_byte[&'\u{120}'], b' ');
        for b in 0..=255u8 {
            assert_eq!(to_byte[&to_char[b as usize]], b);
        }
    }

    #[test]
    fn missing_specials_extend_the_vocabulary() {
        let tok = toy();
        assert_eq!(tok.base_vocab_size(), 13);
        // Six markers appended past the base vocabulary.
        assert_eq!(tok.extended_tokens().len(), 6);
        assert_eq!(tok.special_id(SpecialToken::EventOpen), TokenId(13));
        assert_eq!(tok.special_id(SpecialToken::ContextMask), TokenId(18));
        assert_eq!(tok.vocab_size(), 19);
    }

    #[test]
    fn native_separator_reuses_existing_token() {
        let tok = toy();
        assert_eq!(tok.separator_id(), TokenId(2));
    }

    #[test]
    fn dedicated_separator_gets_its_own_id() {
        let base = toy();
        let tok = BpeTokenizer::new(
            base.encoder.clone(),
            base.merges.clone(),
            SeparatorStyle::Dedicated,
        )
        .unwrap();
        assert_eq!(tok.separator_id(), TokenId(19));
        assert_eq!(tok.vocab_size(), 20);
    }

    #[test]
    fn vocab_without_unk_is_rejected() {
        let vocab: HashMap<String, u32> =
            [("</s>".to_string(), 0)].into_iter().collect();
        let err = BpeTokenizer::new(vocab, HashMap::new(), SeparatorStyle::Native).unwrap_err();
        assert!(matches!(err, TokenizerError::MissingToken { .. }));
    }

    #[test]
    fn decode_round_trips_markers_and_words() {
        let tok = toy();
        let ids = vec![
            tok.special_id(SpecialToken::EventOpen),
            TokenId(9),
            tok.special_id(SpecialToken::EventClose),
            TokenId(11),
        ];
        assert_eq!(tok.decode(&ids), "<EVT> cell </EVT> cell");
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = r#"{"<s>":0,"<pad>":1,"</s>":2,"<unk>":3,"a":4,"b":5,"ab":6}"#;
        std::fs::write(dir.path().join("vocab.json"), vocab).unwrap();
        std::fs::write(dir.path().join("merges.txt"), "#version: 0.2\na b\n").unwrap();
        let tok =
            BpeTokenizer::from_pretrained_dir(dir.path(), SeparatorStyle::Native).unwrap();
        assert_eq!(tok.encode_word("ab", true), vec![TokenId(6)]);
        assert_eq!(tok.encode_word("ba", true), vec![TokenId(5), TokenId(4)]);
    }
}
