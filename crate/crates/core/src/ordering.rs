//! Dependent-ordering statistics and stochastic tree linearization.
//!
//! The model records, for every `(head UPOS, dependency relation)` pair seen
//! in a treebank, how often the dependent appears before versus after its
//! head. Reordering samples a side for each dependent of a selected head
//! independently from those statistics, keeps same-side dependents in their
//! original relative order, and emits every subtree contiguously.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::conllu::DependencyTree;
use crate::corpus::Sentence;

const HEADER: &str = "#glosshift-ordering";
const VERSION: &str = "v1";

pub const DEFAULT_HEADS: [&str; 4] = ["NOUN", "VERB", "PROPN", "AUX"];

#[derive(Debug, Error)]
pub enum OrderingError {
    #[error("cannot estimate an ordering model from an empty treebank")]
    EmptyTreebank,
    #[error("malformed ordering model at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SideCounts {
    pub before: u64,
    pub after: u64,
}

impl SideCounts {
    pub fn total(&self) -> u64 {
        self.before + self.after
    }
}

/// Relation subtypes (`obl:tmod`) are folded into their base relation.
fn relation_key(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderingModel {
    counts: BTreeMap<(String, String), SideCounts>,
    /// Add-k constant applied to both sides.
    pub smoothing: f64,
}

impl OrderingModel {
    pub fn new(smoothing: f64) -> Self {
        OrderingModel {
            counts: BTreeMap::new(),
            smoothing,
        }
    }

    /// Adds raw counts for a key; used for hand-built models and by the reader.
    pub fn add_counts(&mut self, head_upos: &str, deprel: &str, before: u64, after: u64) {
        let entry = self
            .counts
            .entry((head_upos.to_owned(), relation_key(deprel).to_owned()))
            .or_default();
        entry.before += before;
        entry.after += after;
    }

    pub fn counts(&self) -> impl Iterator<Item = (&str, &str, SideCounts)> {
        self.counts
            .iter()
            .map(|((h, d), c)| (h.as_str(), d.as_str(), *c))
    }

    pub fn get_counts(&self, head_upos: &str, deprel: &str) -> Option<SideCounts> {
        self.counts
            .get(&(head_upos.to_owned(), relation_key(deprel).to_owned()))
            .copied()
    }

    fn smoothed(&self, before: u64, total: u64) -> f64 {
        let k = self.smoothing;
        let denom = total as f64 + 2.0 * k;
        if denom <= 0.0 {
            0.5
        } else {
            (before as f64 + k) / denom
        }
    }

    /// Fallback for unseen keys: smoothed share of all dependents that
    /// precede their head.
    pub fn prior(&self) -> f64 {
        let (before, total) = self
            .counts
            .values()
            .fold((0, 0), |(b, t), c| (b + c.before, t + c.total()));
        self.smoothed(before, total)
    }

    /// Probability that a `deprel` dependent precedes a `head_upos` head.
    pub fn precedence(&self, head_upos: &str, deprel: &str) -> f64 {
        match self.get_counts(head_upos, deprel) {
            Some(c) => self.smoothed(c.before, c.total()),
            None => self.prior(),
        }
    }

    /// Writes the count table: a version header, then
    /// `head_upos<TAB>deprel<TAB>before<TAB>after` rows.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{HEADER}\t{VERSION}\tsmoothing={}", self.smoothing)?;
        for ((head, rel), c) in &self.counts {
            writeln!(w, "{head}\t{rel}\t{}\t{}", c.before, c.after)?;
        }
        w.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, OrderingError> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let mut parts = header.split('\t');
        if parts.next() != Some(HEADER) || parts.next() != Some(VERSION) {
            return Err(OrderingError::Malformed {
                line: 1,
                reason: format!("expected header \"{HEADER}\\t{VERSION}\""),
            });
        }
        let smoothing = match parts.next().and_then(|p| p.strip_prefix("smoothing=")) {
            Some(v) => v.parse::<f64>().ok().filter(|k| *k >= 0.0).ok_or(OrderingError::Malformed {
                line: 1,
                reason: format!("invalid smoothing {v:?}"),
            })?,
            None => 1.0,
        };
        let mut model = OrderingModel::new(smoothing);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: &str| OrderingError::Malformed {
                line: line_no,
                reason: reason.to_owned(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(malformed("expected four tab-separated fields"));
            }
            let before = f[2].parse().map_err(|_| malformed("invalid before count"))?;
            let after = f[3].parse().map_err(|_| malformed("invalid after count"))?;
            model.add_counts(f[0], f[1], before, after);
        }
        Ok(model)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, OrderingError> {
        OrderingModel::read(BufReader::new(File::open(path)?))
    }
}

/// Counts dependent sides over every head-dependent arc in `treebank`.
pub fn estimate_ordering(treebank: &[DependencyTree], smoothing: f64) -> Result<OrderingModel, OrderingError> {
    if treebank.is_empty() {
        return Err(OrderingError::EmptyTreebank);
    }
    let mut model = OrderingModel::new(smoothing);
    for tree in treebank {
        for node in tree.nodes().iter().filter(|n| n.head != 0) {
            let head = tree.node(node.head);
            let before = node.index < node.head;
            model.add_counts(&head.upos, &node.deprel, before as u64, (!before) as u64);
        }
    }
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReorderOptions {
    /// Head categories whose dependents are resampled.
    pub heads: BTreeSet<String>,
    /// Resample punctuation dependents too; off by default.
    pub include_punct: bool,
}

impl Default for ReorderOptions {
    fn default() -> Self {
        ReorderOptions {
            heads: DEFAULT_HEADS.iter().map(|s| s.to_string()).collect(),
            include_punct: false,
        }
    }
}

/// Returns the new surface order as 0-based indices into the tree's words.
pub fn reorder_indices<R: Rng + ?Sized>(
    tree: &DependencyTree,
    model: &OrderingModel,
    rng: &mut R,
    opts: &ReorderOptions,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(tree.len());
    linearize(tree, tree.root(), model, rng, opts, &mut out);
    out
}

fn linearize<R: Rng + ?Sized>(
    tree: &DependencyTree,
    head: usize,
    model: &OrderingModel,
    rng: &mut R,
    opts: &ReorderOptions,
    out: &mut Vec<usize>,
) {
    let head_node = tree.node(head);
    let resample = opts.heads.contains(&head_node.upos);
    let mut before = Vec::new();
    let mut after = Vec::new();
    for &dep in tree.children(head) {
        let dep_node = tree.node(dep);
        let is_punct = relation_key(&dep_node.deprel) == "punct";
        let goes_before = if resample && (opts.include_punct || !is_punct) {
            rng.random::<f64>() < model.precedence(&head_node.upos, &dep_node.deprel)
        } else {
            dep < head
        };
        if goes_before {
            before.push(dep);
        } else {
            after.push(dep);
        }
    }
    for dep in before {
        linearize(tree, dep, model, rng, opts, out);
    }
    out.push(head - 1);
    for dep in after {
        linearize(tree, dep, model, rng, opts, out);
    }
}

/// Linearizes `tree` under `model`, returning the reordered words.
pub fn reorder<R: Rng + ?Sized>(
    tree: &DependencyTree,
    model: &OrderingModel,
    rng: &mut R,
    opts: &ReorderOptions,
) -> Sentence {
    let order = reorder_indices(tree, model, rng, opts);
    Sentence::new(order.into_iter().map(|i| tree.nodes()[i].form.as_str()))
}
