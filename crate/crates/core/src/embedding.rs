//! Dense token embedding tables and the word2vec text format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("malformed embedding table at line {line}: {reason}")]
    MalformedTable { line: usize, reason: String },
    #[error("corpus has no tokens that survive the frequency threshold")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// `vocab.len()` rows of `dim` finite values, one per distinct token.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vec<String>,
    vectors: Vec<f32>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(vocab: Vec<String>, vectors: Vec<f32>, dim: usize) -> Result<Self, EmbedError> {
        let bad = |reason: String| EmbedError::MalformedTable { line: 0, reason };
        if dim == 0 {
            return Err(bad("dimension must be positive".into()));
        }
        if vectors.len() != vocab.len() * dim {
            return Err(bad(format!(
                "{} values for {} tokens of dimension {dim}",
                vectors.len(),
                vocab.len()
            )));
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite value in row {}", pos / dim)));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, tok) in vocab.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(bad(format!("token {tok:?} is empty or contains whitespace")));
            }
            if index.insert(tok.clone(), i).is_some() {
                return Err(bad(format!("duplicate token {tok:?}")));
            }
        }
        Ok(EmbeddingTable {
            vocab,
            vectors,
            dim,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index_of(token).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vocab
            .iter()
            .map(String::as_str)
            .zip(self.vectors.chunks_exact(self.dim))
    }

    /// word2vec text format: `count dim`, then `token v1 ... vd` per row.
    /// Values use the shortest representation that reads back exactly.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for (tok, row) in self.rows() {
            line.clear();
            line.push_str(tok);
            for v in row {
                line.push(' ');
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, EmbedError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or(EmbedError::MalformedTable {
            line: 1,
            reason: "empty file".into(),
        })?;
        let mut fields = header.split_whitespace();
        let (count, dim) = match (
            fields.next().and_then(|f| f.parse::<usize>().ok()),
            fields.next().and_then(|f| f.parse::<usize>().ok()),
            fields.next(),
        ) {
            (Some(c), Some(d), None) if d > 0 => (c, d),
            _ => {
                return Err(EmbedError::MalformedTable {
                    line: 1,
                    reason: format!("expected \"count dim\" header, found {header:?}"),
                })
            }
        };
        let mut vocab = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| EmbedError::MalformedTable {
                line: line_no,
                reason,
            };
            if vocab.len() == count {
                return Err(malformed(format!("more rows than the {count} declared")));
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("line is not blank");
            let before = vectors.len();
            for p in parts {
                let v: f32 = p.parse().map_err(|_| malformed(format!("invalid number {p:?}")))?;
                if !v.is_finite() {
                    return Err(malformed(format!("non-finite value {p:?}")));
                }
                vectors.push(v);
            }
            if vectors.len() - before != dim {
                return Err(malformed(format!(
                    "row has {} values, header declares {dim}",
                    vectors.len() - before
                )));
            }
            vocab.push(token.to_owned());
        }
        if vocab.len() != count {
            return Err(EmbedError::MalformedTable {
                line: 1,
                reason: format!("header declares {count} rows, found {}", vocab.len()),
            });
        }
        EmbeddingTable::new(vocab, vectors, dim)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        EmbeddingTable::read(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(
            vec!["a".into(), "b".into()],
            vec![0.1, -2.5, 1e-7, 3.0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let t = table();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = EmbeddingTable::read(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn hand_built_word2vec_fixture_loads() {
        let text = "3 4\nthe 0.418 0.24968 -0.41242 0.1217\n, 0.013441 0.23682 -0.16899 0.40951\nof 0.70853 0.57088 -0.4716 0.18048\n";
        let t = EmbeddingTable::read(text.as_bytes()).unwrap();
        assert_eq!((t.len(), t.dim()), (3, 4));
        assert_eq!(t.get(",").unwrap()[1], 0.23682);
    }

    #[test]
    fn header_mismatch_is_malformed() {
        for text in ["3 2\na 1 2\nb 3 4\n", "1 2\na 1 2\nb 3 4\n", "1 3\na 1 2\n", "x\n", "1 2\na 1 nan\n"] {
            assert!(
                matches!(EmbeddingTable::read(text.as_bytes()), Err(EmbedError::MalformedTable { .. })),
                "{text:?}"
            );
        }
    }

    #[test]
    fn duplicates_rejected() {
        assert!(EmbeddingTable::new(vec!["a".into(), "a".into()], vec![0.0; 4], 2).is_err());
    }
}
