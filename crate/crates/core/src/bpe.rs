//! Word-internal byte pair encoding with an end-of-word marker.
//!
//! Training repeatedly merges the most frequent adjacent symbol pair across
//! the word-frequency table. Frequency ties go to the lexicographically
//! smallest `(left, right)` pair, so a corpus and target size always yield
//! the same merge list.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, Sentence};

pub const END_OF_WORD: &str = "</w>";
pub const DEFAULT_VOCAB_SIZE: usize = 40_000;

const HEADER: &str = "#glosshift-bpe";

#[derive(Debug, Error)]
pub enum BpeError {
    #[error("target vocabulary size {target} is smaller than the alphabet ({alphabet} symbols)")]
    TargetTooSmall { target: usize, alphabet: usize },
    #[error("malformed vocabulary file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubwordVocab {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
    alphabet: BTreeSet<String>,
    vocab: BTreeSet<String>,
    /// Requested vocabulary size.
    pub size: usize,
}

/// Splits a word into characters, attaching the marker to the last one.
pub fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: String,
    right: String,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Symbols {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Symbols {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }
}

fn add_pairs(word: &[u32], count: i64, counts: &mut HashMap<(u32, u32), i64>, touched: &mut HashSet<(u32, u32)>) {
    for w in word.windows(2) {
        let pair = (w[0], w[1]);
        *counts.entry(pair).or_insert(0) += count;
        touched.insert(pair);
    }
}

/// Learns merges from the word frequencies of `corpus`.
///
/// Stops once the vocabulary (alphabet plus merge results) reaches
/// `target_size` or no pair occurs at least twice.
pub fn train_bpe(corpus: &Corpus, target_size: usize) -> Result<SubwordVocab, BpeError> {
    let mut freqs: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for tok in sentence.tokens() {
            *freqs.entry(tok.as_str()).or_insert(0) += 1;
        }
    }

    let mut symbols = Symbols {
        names: Vec::new(),
        ids: HashMap::new(),
    };
    let mut words: Vec<(Vec<u32>, u64)> = Vec::with_capacity(freqs.len());
    let mut alphabet = BTreeSet::new();
    for (word, &count) in &freqs {
        let syms = initial_symbols(word);
        let ids = syms.iter().map(|s| symbols.intern(s)).collect();
        alphabet.extend(syms);
        words.push((ids, count));
    }
    if target_size < alphabet.len() {
        return Err(BpeError::TargetTooSmall {
            target: target_size,
            alphabet: alphabet.len(),
        });
    }

    let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut locations: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
    for (idx, (word, count)) in words.iter().enumerate() {
        for w in word.windows(2) {
            let pair = (w[0], w[1]);
            *counts.entry(pair).or_insert(0) += *count as i64;
            locations.entry(pair).or_default().insert(idx);
        }
    }
    let candidate = |pair: (u32, u32), count: i64, symbols: &Symbols| Candidate {
        count: count as u64,
        left: symbols.names[pair.0 as usize].clone(),
        right: symbols.names[pair.1 as usize].clone(),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts
        .iter()
        .map(|(&pair, &count)| candidate(pair, count, &symbols))
        .collect();

    let mut vocab = alphabet.clone();
    let mut merges = Vec::new();
    while vocab.len() < target_size {
        let Some(top) = heap.pop() else { break };
        let current = counts.get(&top.pair).copied().unwrap_or(0);
        if current as u64 != top.count {
            continue;
        }
        if current < 2 {
            break;
        }
        let (a, b) = top.pair;
        let merged_name = format!("{}{}", top.left, top.right);
        let merged = symbols.intern(&merged_name);
        let mut touched = HashSet::new();
        let affected: Vec<usize> = locations.remove(&top.pair).unwrap_or_default().into_iter().collect();
        for idx in affected {
            let (word, count) = &mut words[idx];
            if !word.windows(2).any(|w| w[0] == a && w[1] == b) {
                continue;
            }
            let c = *count as i64;
            add_pairs(word, -c, &mut counts, &mut touched);
            let mut next = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == a && word[i + 1] == b {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(word[i]);
                    i += 1;
                }
            }
            add_pairs(&next, c, &mut counts, &mut touched);
            for w in next.windows(2) {
                locations.entry((w[0], w[1])).or_default().insert(idx);
            }
            *word = next;
        }
        counts.remove(&top.pair);
        touched.remove(&top.pair);
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for pair in touched {
            match counts.get(&pair).copied() {
                Some(c) if c > 0 => heap.push(candidate(pair, c, &symbols)),
                Some(_) => {
                    counts.remove(&pair);
                }
                None => {}
            }
        }
        merges.push((top.left, top.right));
        vocab.insert(merged_name);
    }

    Ok(SubwordVocab::from_parts(merges, alphabet, target_size))
}

impl SubwordVocab {
    fn from_parts(merges: Vec<(String, String)>, alphabet: BTreeSet<String>, size: usize) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let mut vocab = alphabet.clone();
        vocab.extend(merges.iter().map(|(l, r)| format!("{l}{r}")));
        SubwordVocab {
            merges,
            ranks,
            alphabet,
            vocab,
            size,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    /// Alphabet plus every merge result.
    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn contains(&self, subword: &str) -> bool {
        self.vocab.contains(subword)
    }

    /// Segments one word by repeatedly merging its lowest-ranked pair.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut syms = initial_symbols(word);
        loop {
            let best = syms
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| {
                    self.ranks
                        .get(&(w[0].clone(), w[1].clone()))
                        .map(|&r| (r, i))
                })
                .min();
            let Some((rank, _)) = best else { break };
            let (left, right) = &self.merges[rank];
            let mut next = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && &syms[i] == left && &syms[i + 1] == right {
                    next.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    next.push(std::mem::take(&mut syms[i]));
                    i += 1;
                }
            }
            syms = next;
        }
        syms
    }

    pub fn encode(&self, sentence: &Sentence) -> Vec<String> {
        sentence
            .tokens()
            .iter()
            .flat_map(|w| self.encode_word(w))
            .collect()
    }

    /// Writes a header line (size, marker), an alphabet line, then one
    /// space-separated merge pair per line in training order.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{HEADER}\tsize={}\tmarker={END_OF_WORD}", self.size)?;
        let alphabet: Vec<&str> = self.alphabet.iter().map(String::as_str).collect();
        writeln!(w, "#alphabet\t{}", alphabet.join("\t"))?;
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
        }
        w.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, BpeError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let mut fields = header.split('\t');
        if fields.next() != Some(HEADER) {
            return Err(BpeError::Malformed {
                line: 1,
                reason: format!("expected header starting with {HEADER:?}"),
            });
        }
        let mut size = None;
        for field in fields {
            if let Some(v) = field.strip_prefix("size=") {
                size = v.parse().ok();
            } else if let Some(m) = field.strip_prefix("marker=") {
                if m != END_OF_WORD {
                    return Err(BpeError::Malformed {
                        line: 1,
                        reason: format!("unsupported end-of-word marker {m:?}"),
                    });
                }
            }
        }
        let size = size.ok_or(BpeError::Malformed {
            line: 1,
            reason: "missing or invalid size".into(),
        })?;
        let alphabet_line = lines.next().transpose()?.unwrap_or_default();
        let alphabet = alphabet_line
            .strip_prefix("#alphabet")
            .ok_or(BpeError::Malformed {
                line: 2,
                reason: "expected #alphabet line".into(),
            })?
            .split('\t')
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect();
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (l, r) = line.split_once(' ').ok_or(BpeError::Malformed {
                line: i + 3,
                reason: "expected a space-separated pair".into(),
            })?;
            merges.push((l.to_owned(), r.to_owned()));
        }
        Ok(SubwordVocab::from_parts(merges, alphabet, size))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, BpeError> {
        SubwordVocab::read(BufReader::new(File::open(path)?))
    }
}

/// Reassembles words from sub-words by splitting after each marker.
pub fn decode<S: AsRef<str>>(subwords: &[S]) -> Sentence {
    let mut words = Vec::new();
    let mut cur = String::new();
    for sw in subwords {
        let sw = sw.as_ref();
        match sw.strip_suffix(END_OF_WORD) {
            Some(stem) => {
                cur.push_str(stem);
                words.push(std::mem::take(&mut cur));
            }
            None => cur.push_str(sw),
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    Sentence::new(words)
}

/// Sub-word type counts for two corpora and their Jaccard index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapReport {
    pub e1_size: usize,
    pub e2_size: usize,
    pub intersection_size: usize,
    pub union_size: usize,
    pub overlap: f64,
}

/// Set of sub-word types produced by encoding `corpus`.
pub fn subword_types(corpus: &Corpus, vocab: &SubwordVocab) -> BTreeSet<String> {
    let words: HashSet<&str> = corpus
        .iter()
        .flat_map(|s| s.tokens().iter().map(String::as_str))
        .collect();
    let words: Vec<&str> = words.into_iter().collect();
    words
        .par_iter()
        .map(|w| vocab.encode_word(w))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// `|E1 ∩ E2| / |E1 ∪ E2|` over the sub-word types of each corpus. Two
/// corpora with no sub-words at all count as identical (overlap 1).
pub fn subword_overlap(c1: &Corpus, c2: &Corpus, vocab: &SubwordVocab) -> OverlapReport {
    let e1 = subword_types(c1, vocab);
    let e2 = subword_types(c2, vocab);
    let intersection_size = e1.intersection(&e2).count();
    let union_size = e1.len() + e2.len() - intersection_size;
    let overlap = if union_size == 0 {
        1.0
    } else {
        intersection_size as f64 / union_size as f64
    };
    OverlapReport {
        e1_size: e1.len(),
        e2_size: e2.len(),
        intersection_size,
        union_size,
        overlap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(text: &str) -> Corpus {
        Corpus::from_lines("t", text.lines())
    }

    fn classic() -> Corpus {
        let mut lines = Vec::new();
        for (w, n) in [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)] {
            lines.extend(std::iter::repeat_n(w, n));
        }
        Corpus::from_lines("classic", lines)
    }

    #[test]
    fn repeated_pair_merges_first() {
        let v = train_bpe(&corpus("aa aa aa"), 4).unwrap();
        assert_eq!(v.merges()[0], ("a".to_owned(), "a</w>".to_owned()));
        assert_eq!(v.encode(&Sentence::parse("aa")), ["aa</w>"]);
    }

    #[test]
    fn classic_first_merges() {
        let v = train_bpe(&classic(), 100).unwrap();
        // (e,s) and (s,t</w>) both occur 9 times; the tie goes to (e,s).
        assert_eq!(v.merges()[0], ("e".into(), "s".into()));
        assert_eq!(v.merges()[1], ("es".into(), "t</w>".into()));
    }

    #[test]
    fn target_below_alphabet_is_rejected() {
        let err = train_bpe(&corpus("abc"), 2).unwrap_err();
        assert!(matches!(err, BpeError::TargetTooSmall { target: 2, alphabet: 3 }));
    }

    #[test]
    fn stops_at_target_or_when_pairs_are_rare() {
        let v = train_bpe(&classic(), 13).unwrap();
        assert_eq!(v.vocab().len(), 13);
        let v = train_bpe(&corpus("ab cd"), 100).unwrap();
        assert!(v.merges().is_empty());
    }

    #[test]
    fn deterministic() {
        let a = train_bpe(&classic(), 30).unwrap();
        let b = train_bpe(&classic(), 30).unwrap();
        assert_eq!(a.merges(), b.merges());
    }

    #[test]
    fn trained_word_is_one_token_and_empty_is_empty() {
        let v = train_bpe(&classic(), 1000).unwrap();
        assert_eq!(v.encode(&Sentence::parse("newest")), ["newest</w>"]);
        assert!(v.encode(&Sentence::parse("")).is_empty());
        assert_eq!(v.encode(&Sentence::parse("zq")), ["z", "q</w>"]);
    }

    #[test]
    fn overlap_examples() {
        // Single-character words: E1 = {a, b}, E2 = {a, b, c, d} (each with the marker).
        let c1 = corpus("a b");
        let c2 = corpus("a b c d");
        let mut both = c1.clone();
        both.sentences.extend(c2.sentences.clone());
        let v = train_bpe(&both, 6).unwrap();
        let r = subword_overlap(&c1, &c2, &v);
        assert_eq!((r.e1_size, r.e2_size, r.intersection_size, r.union_size), (2, 4, 2, 4));
        assert_eq!(r.overlap, 0.5);
        assert_eq!(subword_overlap(&c2, &c2, &v).overlap, 1.0);
    }

    #[test]
    fn file_round_trip() {
        let v = train_bpe(&classic(), 20).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#glosshift-bpe\tsize=20\tmarker=</w>\n#alphabet\t"));
        assert!(text.contains("\ne s\n"));
        assert_eq!(SubwordVocab::read(buf.as_slice()).unwrap(), v);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(words in prop::collection::vec("[a-e]{1,6}|[αβγ]{1,3}", 0..12)) {
            let v = train_bpe(&classic(), 40).unwrap();
            let s = Sentence::new(&words);
            let pieces = v.encode(&s);
            prop_assert!(pieces.iter().all(|p| v.contains(p) || p.trim_end_matches(END_OF_WORD).chars().count() == 1));
            prop_assert_eq!(decode(&pieces), s);
        }

        #[test]
        fn overlap_is_symmetric(a in "[a-d ]{0,20}", b in "[b-f ]{0,20}") {
            let c1 = corpus(&a);
            let c2 = corpus(&b);
            let mut both = c1.clone();
            both.sentences.extend(c2.sentences.clone());
            let v = train_bpe(&both, 30).unwrap();
            let x = subword_overlap(&c1, &c2, &v);
            let y = subword_overlap(&c2, &c1, &v);
            prop_assert_eq!(x.overlap, y.overlap);
            prop_assert!((0.0..=1.0).contains(&x.overlap));
        }
    }
}
