//! Whitespace-tokenized sentences and line-oriented corpora.
//!
//! A corpus file is UTF-8 text with one sentence per line. Tokens are the
//! maximal runs of non-whitespace characters on that line.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// An ordered sequence of whitespace-free tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    /// Builds a sentence from tokens that are already split.
    ///
    /// Tokens containing whitespace are split further and empty tokens are
    /// dropped, so the no-whitespace invariant always holds.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens = tokens
            .into_iter()
            .flat_map(|t| {
                t.as_ref()
                    .split_whitespace()
                    .map(str::to_owned)
                    .collect::<Vec<_>>()
            })
            .collect();
        Sentence { tokens }
    }

    /// Wraps tokens without re-splitting them.
    ///
    /// Callers must guarantee that no token is empty or contains whitespace.
    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        Sentence { tokens }
    }

    pub fn parse(line: &str) -> Self {
        Sentence {
            tokens: line.split_whitespace().map(str::to_owned).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(tok)?;
        }
        Ok(())
    }
}

impl From<&str> for Sentence {
    fn from(line: &str) -> Self {
        Sentence::parse(line)
    }
}

/// An ordered collection of sentences with a provenance label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub source_id: String,
}

impl Corpus {
    pub fn new(source_id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Corpus {
            sentences,
            source_id: source_id.into(),
        }
    }

    pub fn from_lines<'a, I>(source_id: impl Into<String>, lines: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        Corpus::new(source_id, lines.into_iter().map(Sentence::parse).collect())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    pub fn read<R: BufRead>(source_id: impl Into<String>, reader: R) -> io::Result<Self> {
        let sentences = reader
            .lines()
            .map(|line| line.map(|l| Sentence::parse(&l)))
            .collect::<io::Result<Vec<_>>>()?;
        Ok(Corpus::new(source_id, sentences))
    }

    pub fn read_file(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        Corpus::read(path.display().to_string(), BufReader::new(file))
    }

    /// Writes one sentence per line, LF-terminated.
    pub fn write<W: Write>(&self, mut writer: W) -> io::Result<()> {
        for sentence in &self.sentences {
            writeln!(writer, "{sentence}")?;
        }
        writer.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sentence;
    type IntoIter = std::slice::Iter<'a, Sentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_splits_on_any_whitespace() {
        let s = Sentence::parse("  a\tb  c \u{3000}d ");
        assert_eq!(s.tokens(), ["a", "b", "c", "d"]);
        assert_eq!(s.to_string(), "a b c d");
    }

    #[test]
    fn new_resplits_tokens() {
        let s = Sentence::new(["a b", "", "c"]);
        assert_eq!(s.tokens(), ["a", "b", "c"]);
    }

    #[test]
    fn empty_line_is_empty_sentence() {
        let c = Corpus::read("t", "x y\n\nz\n".as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.sentences[1].is_empty());
        let mut out = Vec::new();
        c.write(&mut out).unwrap();
        assert_eq!(out, b"x y\n\nz\n");
    }
}
