//! Character-level transliteration into the Private Use Area.
//!
//! Each distinct character of the source text is assigned its own codepoint
//! in U+E000..=U+F8FF, in order of first appearance. The image never
//! intersects the domain, so a transliterated corpus shares no sub-words with
//! its source, and the stored pairs invert it exactly.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::corpus::{Corpus, Sentence};

/// First codepoint of the BMP Private Use Area.
pub const PUA_START: u32 = 0xE000;
/// Last codepoint of the BMP Private Use Area.
pub const PUA_END: u32 = 0xF8FF;
pub const PUA_CAPACITY: usize = (PUA_END - PUA_START + 1) as usize;

pub const DEFAULT_SPECIAL_TOKENS: [&str; 5] = ["[CLS]", "[SEP]", "[MASK]", "[PAD]", "[UNK]"];

const SPECIAL_HEADER: &str = "#special";

#[derive(Debug, Error)]
pub enum TranslitError {
    #[error("character {ch:?} (U+{:04X}) in token {token:?} has no transliteration", *ch as u32)]
    UnmappedCharacter { ch: char, token: String },
    #[error("{distinct} distinct characters exceed the {capacity}-codepoint target block")]
    AlphabetOverflow { distinct: usize, capacity: usize },
    #[error("character {0:?} is already used as a transliteration image")]
    ImageCollision(char),
    #[error("malformed transliteration map at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// A bijection between source characters and Private Use Area characters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TranslitMap {
    pairs: Vec<(char, char)>,
    forward: HashMap<char, char>,
    backward: HashMap<char, char>,
    special_tokens: Vec<String>,
    next_image: u32,
}

impl TranslitMap {
    /// An empty map with the given special tokens.
    pub fn new<I, S>(special_tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TranslitMap {
            special_tokens: special_tokens.into_iter().map(Into::into).collect(),
            next_image: PUA_START,
            ..Default::default()
        }
    }

    pub fn with_default_specials() -> Self {
        TranslitMap::new(DEFAULT_SPECIAL_TOKENS)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in assignment order.
    pub fn pairs(&self) -> &[(char, char)] {
        &self.pairs
    }

    pub fn special_tokens(&self) -> &[String] {
        &self.special_tokens
    }

    pub fn is_special(&self, token: &str) -> bool {
        self.special_tokens.iter().any(|s| s == token)
    }

    pub fn image(&self, ch: char) -> Option<char> {
        self.forward.get(&ch).copied()
    }

    pub fn preimage(&self, ch: char) -> Option<char> {
        self.backward.get(&ch).copied()
    }

    /// Adds every unseen character of `token` to the map.
    pub fn discover_token(&mut self, token: &str) -> Result<(), TranslitError> {
        if self.is_special(token) {
            return Ok(());
        }
        for ch in token.chars() {
            self.insert(ch)?;
        }
        Ok(())
    }

    pub fn discover(&mut self, sentence: &Sentence) -> Result<(), TranslitError> {
        sentence
            .tokens()
            .iter()
            .try_for_each(|t| self.discover_token(t))
    }

    fn insert(&mut self, ch: char) -> Result<(), TranslitError> {
        if self.forward.contains_key(&ch) {
            return Ok(());
        }
        if self.backward.contains_key(&ch) {
            return Err(TranslitError::ImageCollision(ch));
        }
        let image = loop {
            if self.next_image > PUA_END {
                return Err(TranslitError::AlphabetOverflow {
                    distinct: self.pairs.len() + 1,
                    capacity: PUA_CAPACITY,
                });
            }
            let cand = char::from_u32(self.next_image).expect("PUA codepoints are scalar values");
            self.next_image += 1;
            if !self.forward.contains_key(&cand) {
                break cand;
            }
        };
        self.pairs.push((ch, image));
        self.forward.insert(ch, image);
        self.backward.insert(image, ch);
        Ok(())
    }

    pub fn transliterate_token(&self, token: &str) -> Result<String, TranslitError> {
        if self.is_special(token) {
            return Ok(token.to_owned());
        }
        token
            .chars()
            .map(|ch| {
                self.image(ch).ok_or_else(|| TranslitError::UnmappedCharacter {
                    ch,
                    token: token.to_owned(),
                })
            })
            .collect()
    }

    pub fn invert_token(&self, token: &str) -> Result<String, TranslitError> {
        if self.is_special(token) {
            return Ok(token.to_owned());
        }
        token
            .chars()
            .map(|ch| {
                self.preimage(ch).ok_or_else(|| TranslitError::UnmappedCharacter {
                    ch,
                    token: token.to_owned(),
                })
            })
            .collect()
    }

    /// Serializes as a special-token header followed by one
    /// `U+XXXX<TAB>U+XXXX` pair per line.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from(SPECIAL_HEADER);
        for tok in &self.special_tokens {
            header.push('\t');
            header.push_str(tok);
        }
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for &(src, dst) in &self.pairs {
            line.clear();
            let _ = write!(line, "U+{:04X}\tU+{:04X}", src as u32, dst as u32);
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, TranslitError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or(TranslitError::Malformed {
            line: 1,
            reason: "missing special-token header".into(),
        })?;
        let mut fields = header.split('\t');
        if fields.next() != Some(SPECIAL_HEADER) {
            return Err(TranslitError::Malformed {
                line: 1,
                reason: format!("expected header starting with {SPECIAL_HEADER:?}"),
            });
        }
        let mut map = TranslitMap::new(fields.filter(|f| !f.is_empty()));
        let mut images = HashSet::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| TranslitError::Malformed {
                line: line_no,
                reason,
            };
            let (src, dst) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected two tab-separated codepoints".into()))?;
            let src = parse_codepoint(src).map_err(malformed)?;
            let dst = parse_codepoint(dst).map_err(malformed)?;
            if map.forward.contains_key(&src) || !images.insert(dst) {
                return Err(malformed("map is not one-to-one".into()));
            }
            map.pairs.push((src, dst));
            map.forward.insert(src, dst);
            map.backward.insert(dst, src);
            map.next_image = map.next_image.max(dst as u32 + 1);
        }
        if map.forward.keys().any(|c| map.backward.contains_key(c)) {
            return Err(TranslitError::Malformed {
                line: 0,
                reason: "domain and image overlap".into(),
            });
        }
        Ok(map)
    }
}

fn parse_codepoint(field: &str) -> Result<char, String> {
    let hex = field
        .trim()
        .strip_prefix("U+")
        .ok_or_else(|| format!("codepoint {field:?} lacks the U+ prefix"))?;
    let value = u32::from_str_radix(hex, 16).map_err(|e| format!("bad codepoint {field:?}: {e}"))?;
    char::from_u32(value).ok_or_else(|| format!("U+{value:04X} is not a scalar value"))
}

/// Collects the source alphabet in first-appearance order, then assigns
/// images. Usable over a stream of tokens.
#[derive(Debug, Default)]
pub struct TranslitMapBuilder {
    special_tokens: Vec<String>,
    domain: Vec<char>,
    seen: HashSet<char>,
}

impl TranslitMapBuilder {
    pub fn new<I, S>(special_tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TranslitMapBuilder {
            special_tokens: special_tokens.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn observe_token(&mut self, token: &str) {
        if self.special_tokens.iter().any(|s| s == token) {
            return;
        }
        for ch in token.chars() {
            if self.seen.insert(ch) {
                self.domain.push(ch);
            }
        }
    }

    pub fn observe_line(&mut self, line: &str) {
        for tok in line.split_whitespace() {
            self.observe_token(tok);
        }
    }

    /// Assigns images in first-appearance order, skipping any PUA codepoint
    /// that itself occurs in the observed text.
    pub fn finish(self) -> Result<TranslitMap, TranslitError> {
        let reserved = self
            .domain
            .iter()
            .filter(|&&c| (PUA_START..=PUA_END).contains(&(c as u32)))
            .count();
        if self.domain.len() > PUA_CAPACITY - reserved {
            return Err(TranslitError::AlphabetOverflow {
                distinct: self.domain.len(),
                capacity: PUA_CAPACITY - reserved,
            });
        }
        let mut map = TranslitMap::new(self.special_tokens);
        let mut cursor = PUA_START;
        for &ch in &self.domain {
            let image = loop {
                let cand = char::from_u32(cursor).expect("PUA codepoints are scalar values");
                cursor += 1;
                if !self.seen.contains(&cand) {
                    break cand;
                }
            };
            map.pairs.push((ch, image));
            map.forward.insert(ch, image);
            map.backward.insert(image, ch);
        }
        map.next_image = cursor;
        Ok(map)
    }
}

/// Builds a map covering every non-special character in `corpus`.
pub fn build_translit_map<I, S>(corpus: &Corpus, special_tokens: I) -> Result<TranslitMap, TranslitError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut builder = TranslitMapBuilder::new(special_tokens);
    for sentence in corpus {
        for tok in sentence.tokens() {
            builder.observe_token(tok);
        }
    }
    builder.finish()
}

/// Maps each non-special token character-wise; order is unchanged.
pub fn transliterate(sentence: &Sentence, map: &TranslitMap) -> Result<Sentence, TranslitError> {
    let tokens = sentence
        .tokens()
        .iter()
        .map(|t| map.transliterate_token(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sentence::from_tokens_unchecked(tokens))
}

pub fn invert_transliterate(sentence: &Sentence, map: &TranslitMap) -> Result<Sentence, TranslitError> {
    let tokens = sentence
        .tokens()
        .iter()
        .map(|t| map.invert_token(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sentence::from_tokens_unchecked(tokens))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::from_lines("t", lines.iter().copied())
    }

    #[test]
    fn two_letter_corpus_gets_two_distinct_images() {
        let map = build_translit_map(&corpus(&["ab ba"]), DEFAULT_SPECIAL_TOKENS).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map.pairs()[0], ('a', '\u{E000}'));
        assert_eq!(map.pairs()[1], ('b', '\u{E001}'));
    }

    #[test]
    fn repeated_words_share_images() {
        let c = corpus(&["I am Sam . I am"]);
        let map = build_translit_map(&c, DEFAULT_SPECIAL_TOKENS).unwrap();
        let out = transliterate(&c.sentences[0], &map).unwrap();
        let t = out.tokens();
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], t[4]);
        assert_eq!(t[1], t[5]);
        let distinct: HashSet<_> = t.iter().collect();
        assert_eq!(distinct.len(), 4);
        assert!(t.iter().flat_map(|w| w.chars()).all(|c| c as u32 >= PUA_START));
    }

    #[test]
    fn special_tokens_pass_through() {
        let c = corpus(&["[CLS] hi"]);
        let map = build_translit_map(&c, DEFAULT_SPECIAL_TOKENS).unwrap();
        let out = transliterate(&c.sentences[0], &map).unwrap();
        assert_eq!(out.tokens()[0], "[CLS]");
        assert_eq!(out.tokens()[1], map.transliterate_token("hi").unwrap());
        // Brackets and letters of the special token were never added.
        assert!(map.image('[').is_none());
        assert!(map.image('C').is_none());
    }

    #[test]
    fn frozen_map_rejects_unknown_character() {
        let map = build_translit_map(&corpus(&["ab"]), DEFAULT_SPECIAL_TOKENS).unwrap();
        let err = transliterate(&Sentence::parse("abc"), &map).unwrap_err();
        assert!(matches!(err, TranslitError::UnmappedCharacter { ch: 'c', .. }));
    }

    #[test]
    fn pua_characters_in_source_are_skipped_as_images() {
        let c = corpus(&["a\u{E000} b"]);
        let map = build_translit_map(&c, Vec::<String>::new()).unwrap();
        let domain: HashSet<char> = map.pairs().iter().map(|p| p.0).collect();
        assert!(map.pairs().iter().all(|p| !domain.contains(&p.1)));
        let s = transliterate(&c.sentences[0], &map).unwrap();
        assert_eq!(invert_transliterate(&s, &map).unwrap(), c.sentences[0]);
    }

    #[test]
    fn overflow_is_reported() {
        let line: String = (0..PUA_CAPACITY as u32 + 1)
            .map(|i| char::from_u32(0x4E00 + i).unwrap())
            .collect();
        let err = build_translit_map(&corpus(&[&line]), Vec::<String>::new()).unwrap_err();
        assert!(matches!(err, TranslitError::AlphabetOverflow { .. }));
    }

    #[test]
    fn discovery_extends_and_detects_collisions() {
        let mut map = TranslitMap::new(Vec::<String>::new());
        map.discover(&Sentence::parse("xy")).unwrap();
        assert_eq!(map.len(), 2);
        let err = map.discover_token("\u{E000}").unwrap_err();
        assert!(matches!(err, TranslitError::ImageCollision('\u{E000}')));
    }

    #[test]
    fn file_round_trip() {
        let map = build_translit_map(&corpus(&["héllo wörld [SEP]"]), DEFAULT_SPECIAL_TOKENS).unwrap();
        let mut buf = Vec::new();
        map.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#special\t[CLS]\t[SEP]\t[MASK]\t[PAD]\t[UNK]\n"));
        assert!(text.contains("U+0068\tU+E000\n"));
        let back = TranslitMap::read(buf.as_slice()).unwrap();
        assert_eq!(back.pairs(), map.pairs());
        assert_eq!(back.special_tokens(), map.special_tokens());
    }

    #[test]
    fn read_rejects_non_injective_map() {
        let text = "#special\nU+0061\tU+E000\nU+0062\tU+E000\n";
        assert!(matches!(
            TranslitMap::read(text.as_bytes()),
            Err(TranslitError::Malformed { line: 3, .. })
        ));
    }
}
