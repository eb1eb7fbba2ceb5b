use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use super::AnalysisError;
use crate::embedding::EmbeddingTable;
use crate::translit::{TranslitError, TranslitMap};

/// One-to-one pairing of original tokens with their derived counterparts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabBijection {
    pairs: Vec<(String, String)>,
}

impl VocabBijection {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self, AnalysisError> {
        let mut left = HashSet::new();
        let mut right = HashSet::new();
        for (o, d) in &pairs {
            if !left.insert(o.as_str()) {
                return Err(AnalysisError::NotBijective(format!("{o:?} is mapped twice")));
            }
            if !right.insert(d.as_str()) {
                return Err(AnalysisError::NotBijective(format!("{d:?} is the image of two tokens")));
            }
        }
        Ok(VocabBijection { pairs })
    }

    /// Pairs each token with its transliteration. Special tokens, which map
    /// to themselves, are left out.
    pub fn from_translit<'a, I>(tokens: I, map: &TranslitMap) -> Result<Self, AnalysisError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let pairs = tokens
            .into_iter()
            .filter(|t| !map.is_special(t))
            .map(|t| Ok((t.to_owned(), map.transliterate_token(t)?)))
            .collect::<Result<Vec<_>, TranslitError>>()
            .map_err(|e| AnalysisError::NotBijective(e.to_string()))?;
        VocabBijection::new(pairs)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `original<TAB>derived` per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, AnalysisError> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (o, d) = line.split_once('\t').ok_or(AnalysisError::Malformed {
                line: i + 1,
                reason: "expected original<TAB>derived".into(),
            })?;
            pairs.push((o.trim().to_owned(), d.trim().to_owned()));
        }
        VocabBijection::new(pairs)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (o, d) in &self.pairs {
            writeln!(w, "{o}\t{d}")?;
        }
        w.flush()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            _ => Err(format!("unknown metric {s:?} (expected cosine or euclidean)")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

fn normalized(row: &[f32]) -> Vec<f32> {
    let norm = row.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm == 0.0 {
        row.to_vec()
    } else {
        row.iter().map(|v| v / norm).collect()
    }
}

/// Fraction of original tokens whose nearest derived-token row is their own
/// counterpart.
///
/// Only derived rows of the bijection are searched. Ties go to the earliest
/// derived token in bijection order.
pub fn alignment(table: &EmbeddingTable, bijection: &VocabBijection, metric: Metric) -> Result<f64, AnalysisError> {
    if bijection.is_empty() {
        return Err(AnalysisError::EmptyBijection);
    }
    let missing: Vec<String> = bijection
        .pairs()
        .iter()
        .flat_map(|(o, d)| [o, d])
        .filter(|t| table.index_of(t).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(AnalysisError::MissingToken(missing));
    }
    let prepare = |tok: &str| {
        let row = table.get(tok).expect("checked above");
        match metric {
            Metric::Cosine => normalized(row),
            Metric::Euclidean => row.to_vec(),
        }
    };
    let derived: Vec<Vec<f32>> = bijection.pairs().iter().map(|(_, d)| prepare(d)).collect();
    let hits = bijection
        .pairs()
        .par_iter()
        .enumerate()
        .filter(|(i, (o, _))| {
            let q = prepare(o);
            let mut best = 0;
            let mut best_score = f32::NEG_INFINITY;
            for (j, cand) in derived.iter().enumerate() {
                let score = match metric {
                    Metric::Cosine => q.iter().zip(cand).map(|(a, b)| a * b).sum::<f32>(),
                    Metric::Euclidean => -q.iter().zip(cand).map(|(a, b)| (a - b) * (a - b)).sum::<f32>(),
                };
                if score > best_score {
                    best_score = score;
                    best = j;
                }
            }
            best == *i
        })
        .count();
    Ok(hits as f64 / bijection.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn copied_table(n: usize, dim: usize, seed: u64) -> (EmbeddingTable, VocabBijection) {
        let mut r = rng::stream(seed, 0);
        let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..dim).map(|_| r.random::<f32>() - 0.5).collect()).collect();
        let mut vocab = Vec::new();
        let mut vectors = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            vocab.push(format!("w{i}"));
            vectors.extend(row);
        }
        for (i, row) in rows.iter().enumerate() {
            vocab.push(format!("d{i}"));
            vectors.extend(row);
        }
        let bij = VocabBijection::new((0..n).map(|i| (format!("w{i}"), format!("d{i}"))).collect()).unwrap();
        (EmbeddingTable::new(vocab, vectors, dim).unwrap(), bij)
    }

    #[test]
    fn copied_rows_align_perfectly() {
        let (t, b) = copied_table(50, 8, 1);
        assert_eq!(alignment(&t, &b, Metric::Cosine).unwrap(), 1.0);
        assert_eq!(alignment(&t, &b, Metric::Euclidean).unwrap(), 1.0);
    }

    #[test]
    fn missing_tokens_are_listed() {
        let (t, _) = copied_table(3, 4, 2);
        let b = VocabBijection::new(vec![("w0".into(), "d0".into()), ("zz".into(), "d1".into())]).unwrap();
        match alignment(&t, &b, Metric::Cosine) {
            Err(AnalysisError::MissingToken(list)) => assert_eq!(list, ["zz"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bijection_must_be_one_to_one() {
        assert!(VocabBijection::new(vec![("a".into(), "x".into()), ("b".into(), "x".into())]).is_err());
        assert!(VocabBijection::new(vec![("a".into(), "x".into()), ("a".into(), "y".into())]).is_err());
    }

    #[test]
    fn cosine_ignores_rotation() {
        let (t, b) = copied_table(40, 2, 3);
        // Perturb derived rows so the score is not trivially 1.
        let mut r = rng::stream(3, 1);
        let noisy: Vec<f32> = t
            .rows()
            .flat_map(|(tok, row)| {
                let jitter = if tok.starts_with('d') { 0.3 } else { 0.0 };
                row.iter().map(|v| v + jitter * (r.random::<f32>() - 0.5)).collect::<Vec<_>>()
            })
            .collect();
        let base = EmbeddingTable::new(t.vocab().to_vec(), noisy.clone(), 2).unwrap();
        let (s, c) = (0.6f32.sin(), 0.6f32.cos());
        let rotated: Vec<f32> = noisy.chunks(2).flat_map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
        let rot = EmbeddingTable::new(t.vocab().to_vec(), rotated, 2).unwrap();
        let a = alignment(&base, &b, Metric::Cosine).unwrap();
        let a_rot = alignment(&rot, &b, Metric::Cosine).unwrap();
        assert!((a - a_rot).abs() < 1e-9, "{a} vs {a_rot}");
    }

    #[test]
    fn bijection_from_translit_map() {
        use crate::corpus::Corpus;
        use crate::translit::{build_translit_map, DEFAULT_SPECIAL_TOKENS};
        let map = build_translit_map(&Corpus::from_lines("t", ["ab ba [CLS]"]), DEFAULT_SPECIAL_TOKENS).unwrap();
        let b = VocabBijection::from_translit(["ab", "ba", "[CLS]"], &map).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.pairs()[0].1, "\u{E000}\u{E001}");
    }
}
