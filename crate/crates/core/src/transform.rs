//! Sentence-level transformations and their composition.
//!
//! A [`TransformSpec`] lists transformations outermost first, so
//! `translit.inv` inverts a sentence and then transliterates it. Every
//! application is tracked: alongside the output tokens we keep, for each
//! output position, the index of the input token it came from. Label and
//! span co-transformation in [`crate::datasets`] rely on that.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::conllu::DependencyTree;
use crate::corpus::{Corpus, Sentence};
use crate::ordering::{reorder_indices, OrderingModel, ReorderOptions};
use crate::rng::{self, Stream};
use crate::translit::{TranslitError, TranslitMap};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("unknown transformation {0:?} (expected inv, perm, translit or syn)")]
    UnknownKind(String),
    #[error("a composition needs at least one transformation")]
    EmptyComposition,
    #[error("transliteration requested but no transliteration map was supplied")]
    MissingTranslitMap,
    #[error("syntax reordering requested but no ordering model was supplied")]
    MissingOrderingModel,
    #[error("syntax reordering requested but no dependency parse is available")]
    MissingParse,
    #[error("dependency parse does not match the sentence: {0}")]
    MisalignedParse(String),
    #[error("mode nonparallel_diff needs a second corpus")]
    MissingSecondCorpus,
    #[error("a second corpus is only used in mode nonparallel_diff")]
    UnexpectedSecondCorpus,
    #[error("unknown mixture mode {0:?} (expected parallel, nonparallel_same or nonparallel_diff)")]
    UnknownMode(String),
    #[error(transparent)]
    Translit(#[from] TranslitError),
    #[error("sentence {index}: {source}")]
    AtSentence {
        index: usize,
        #[source]
        source: Box<TransformError>,
    },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl TransformError {
    pub fn at(self, index: usize) -> Self {
        match self {
            e @ TransformError::AtSentence { .. } => e,
            e => TransformError::AtSentence {
                index,
                source: Box::new(e),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Inv,
    Perm,
    Translit,
    Syn,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Inv => "inv",
            TransformKind::Perm => "perm",
            TransformKind::Translit => "translit",
            TransformKind::Syn => "syn",
        }
    }

    /// Whether the transformation can move tokens.
    pub fn reorders(self) -> bool {
        !matches!(self, TransformKind::Translit)
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, TransformKind::Perm | TransformKind::Syn)
    }
}

impl FromStr for TransformKind {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inv" | "inversion" => Ok(TransformKind::Inv),
            "perm" | "permutation" => Ok(TransformKind::Perm),
            "translit" | "trans" | "transliteration" => Ok(TransformKind::Translit),
            "syn" | "syntax" => Ok(TransformKind::Syn),
            _ => Err(TransformError::UnknownKind(s.to_owned())),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A transformation or composition, written outermost first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformSpec {
    steps: Vec<TransformKind>,
    pub seed: u64,
}

impl TransformSpec {
    pub fn new(steps: Vec<TransformKind>, seed: u64) -> Result<Self, TransformError> {
        if steps.is_empty() {
            return Err(TransformError::EmptyComposition);
        }
        Ok(TransformSpec { steps, seed })
    }

    pub fn single(kind: TransformKind, seed: u64) -> Self {
        TransformSpec {
            steps: vec![kind],
            seed,
        }
    }

    /// Parses `translit.inv` (or `translit∘inv`); the rightmost step runs first.
    pub fn parse(text: &str, seed: u64) -> Result<Self, TransformError> {
        let steps = text
            .split(['.', '∘'])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()?;
        TransformSpec::new(steps, seed)
    }

    /// Steps as written (outermost first).
    pub fn steps(&self) -> &[TransformKind] {
        &self.steps
    }

    /// Steps in the order they are applied.
    pub fn application_order(&self) -> impl Iterator<Item = TransformKind> + '_ {
        self.steps.iter().rev().copied()
    }

    pub fn contains(&self, kind: TransformKind) -> bool {
        self.steps.contains(&kind)
    }

    pub fn is_stochastic(&self) -> bool {
        self.steps.iter().any(|k| k.is_stochastic())
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.steps.iter().map(|k| k.name()).collect();
        f.write_str(&names.join("."))
    }
}

/// Tokens after transformation together with their provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tracked {
    pub tokens: Vec<String>,
    /// `origin[j]` is the input position of the token now at position `j`.
    pub origin: Vec<usize>,
}

impl Tracked {
    pub fn identity(tokens: &[String]) -> Self {
        Tracked {
            tokens: tokens.to_vec(),
            origin: (0..tokens.len()).collect(),
        }
    }

    pub fn into_sentence(self) -> Sentence {
        Sentence::from_tokens_unchecked(self.tokens)
    }

    fn permute(&mut self, perm: &[usize]) {
        let mut tokens = std::mem::take(&mut self.tokens);
        let mut slots: Vec<Option<String>> = tokens.drain(..).map(Some).collect();
        self.tokens = perm.iter().map(|&i| slots[i].take().expect("perm is a permutation")).collect();
        self.origin = perm.iter().map(|&i| self.origin[i]).collect();
    }
}

/// Uniform random permutation of `0..n` by Fisher-Yates.
pub fn sample_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

pub fn invert(sentence: &Sentence) -> Sentence {
    Sentence::from_tokens_unchecked(sentence.tokens().iter().rev().cloned().collect())
}

pub fn permute<R: Rng + ?Sized>(sentence: &Sentence, rng: &mut R) -> Sentence {
    let perm = sample_permutation(sentence.len(), rng);
    Sentence::from_tokens_unchecked(perm.iter().map(|&i| sentence.tokens()[i].clone()).collect())
}

/// Parameters for syntax reordering.
#[derive(Clone, Debug)]
pub struct SyntaxParams {
    pub model: OrderingModel,
    pub options: ReorderOptions,
}

/// A [`TransformSpec`] bound to the resources its steps need.
#[derive(Clone, Debug)]
pub struct Transformer {
    spec: TransformSpec,
    translit: Option<TranslitMap>,
    syntax: Option<SyntaxParams>,
}

impl Transformer {
    pub fn new(spec: TransformSpec) -> Self {
        Transformer {
            spec,
            translit: None,
            syntax: None,
        }
    }

    pub fn with_translit(mut self, map: TranslitMap) -> Self {
        self.translit = Some(map);
        self
    }

    pub fn with_syntax(mut self, model: OrderingModel, options: ReorderOptions) -> Self {
        self.syntax = Some(SyntaxParams { model, options });
        self
    }

    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    pub fn translit_map(&self) -> Option<&TranslitMap> {
        self.translit.as_ref()
    }

    /// Checks that every step's resources are present.
    pub fn validate(&self) -> Result<(), TransformError> {
        if self.spec.contains(TransformKind::Translit) && self.translit.is_none() {
            return Err(TransformError::MissingTranslitMap);
        }
        if self.spec.contains(TransformKind::Syn) && self.syntax.is_none() {
            return Err(TransformError::MissingOrderingModel);
        }
        Ok(())
    }

    /// Generator for item `index` under this transformer's seed.
    pub fn stream(&self, index: usize) -> Stream {
        rng::stream(self.spec.seed, index as u64)
    }

    /// Applies every step to `tokens`, drawing randomness from `rng` in
    /// application order. `tree` must parse `tokens` when the composition
    /// contains a syntax step.
    pub fn apply_tracked<R: Rng + ?Sized>(
        &self,
        tokens: &[String],
        tree: Option<&DependencyTree>,
        rng: &mut R,
    ) -> Result<Tracked, TransformError> {
        let mut cur = Tracked::identity(tokens);
        for kind in self.spec.application_order() {
            match kind {
                TransformKind::Inv => {
                    cur.tokens.reverse();
                    cur.origin.reverse();
                }
                TransformKind::Perm => {
                    let perm = sample_permutation(cur.tokens.len(), rng);
                    cur.permute(&perm);
                }
                TransformKind::Translit => {
                    let map = self.translit.as_ref().ok_or(TransformError::MissingTranslitMap)?;
                    for tok in &mut cur.tokens {
                        *tok = map.transliterate_token(tok)?;
                    }
                }
                TransformKind::Syn => {
                    let params = self.syntax.as_ref().ok_or(TransformError::MissingOrderingModel)?;
                    let tree = tree.ok_or(TransformError::MissingParse)?;
                    check_alignment(tree, tokens)?;
                    // The tree fixes the new order of the input tokens; map it
                    // back onto current positions.
                    let order = reorder_indices(tree, &params.model, rng, &params.options);
                    let mut position = vec![0; tokens.len()];
                    for (pos, &orig) in cur.origin.iter().enumerate() {
                        position[orig] = pos;
                    }
                    let perm: Vec<usize> = order.iter().map(|&orig| position[orig]).collect();
                    cur.permute(&perm);
                }
            }
        }
        Ok(cur)
    }

    /// Transforms sentence number `index` with its own random stream.
    pub fn apply_sentence(
        &self,
        index: usize,
        sentence: &Sentence,
        tree: Option<&DependencyTree>,
    ) -> Result<Sentence, TransformError> {
        let mut rng = self.stream(index);
        self.apply_tracked(sentence.tokens(), tree, &mut rng)
            .map(Tracked::into_sentence)
            .map_err(|e| e.at(index))
    }
}

fn check_alignment(tree: &DependencyTree, tokens: &[String]) -> Result<(), TransformError> {
    if tree.len() != tokens.len() {
        return Err(TransformError::MisalignedParse(format!(
            "parse has {} words, sentence has {} tokens",
            tree.len(),
            tokens.len()
        )));
    }
    for (node, tok) in tree.nodes().iter().zip(tokens) {
        if &node.form != tok {
            return Err(TransformError::MisalignedParse(format!(
                "word {} is {:?} in the parse but {:?} in the sentence",
                node.index, node.form, tok
            )));
        }
    }
    Ok(())
}

fn parse_for(parses: Option<&[DependencyTree]>, index: usize) -> Option<&DependencyTree> {
    parses.and_then(|p| p.get(index))
}

/// Applies `transformer` to every sentence; `parses[i]` is the dependency
/// parse of sentence `i` when syntax reordering is involved.
///
/// Sentences are processed in parallel; the output does not depend on the
/// thread count.
pub fn apply_transform(
    corpus: &Corpus,
    transformer: &Transformer,
    parses: Option<&[DependencyTree]>,
) -> Result<Corpus, TransformError> {
    transformer.validate()?;
    let results: Vec<Result<Sentence, TransformError>> = corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| transformer.apply_sentence(i, s, parse_for(parses, i)))
        .collect();
    let sentences = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Corpus::new(
        format!("{}({})", transformer.spec(), corpus.source_id),
        sentences,
    ))
}

/// Transforms a line-oriented corpus from `reader` to `writer` in chunks of
/// `chunk_lines`, returning the number of sentences written.
pub fn stream_transform<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    transformer: &Transformer,
    parses: Option<&[DependencyTree]>,
    chunk_lines: usize,
) -> Result<usize, TransformError> {
    transformer.validate()?;
    let chunk_lines = chunk_lines.max(1);
    let mut lines = reader.lines();
    let mut done = 0;
    loop {
        let chunk: Vec<String> = lines.by_ref().take(chunk_lines).collect::<io::Result<_>>()?;
        if chunk.is_empty() {
            break;
        }
        let out: Vec<Result<String, TransformError>> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, line)| {
                let i = done + k;
                transformer
                    .apply_sentence(i, &Sentence::parse(line), parse_for(parses, i))
                    .map(|s| s.to_string())
            })
            .collect();
        for line in out {
            writer.write_all(line?.as_bytes())?;
            writer.write_all(b"\n")?;
        }
        done += chunk.len();
    }
    writer.flush()?;
    Ok(done)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixMode {
    /// The corpus and its own transform.
    Parallel,
    /// First half untouched, second half transformed.
    NonparallelSame,
    /// The first corpus and the transform of a different corpus.
    NonparallelDiff,
}

impl FromStr for MixMode {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(MixMode::Parallel),
            "nonparallel_same" | "nonparallel-same" => Ok(MixMode::NonparallelSame),
            "nonparallel_diff" | "nonparallel-diff" => Ok(MixMode::NonparallelDiff),
            _ => Err(TransformError::UnknownMode(s.to_owned())),
        }
    }
}

impl fmt::Display for MixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixMode::Parallel => "parallel",
            MixMode::NonparallelSame => "nonparallel_same",
            MixMode::NonparallelDiff => "nonparallel_diff",
        })
    }
}

fn subcorpus(corpus: &Corpus, range: std::ops::Range<usize>) -> Corpus {
    Corpus::new(corpus.source_id.clone(), corpus.sentences[range].to_vec())
}

/// Builds the (original, derived) pair of pre-training corpora.
///
/// `parses` belong to the corpus that gets transformed (`second` for
/// [`MixMode::NonparallelDiff`], `first` otherwise) and are indexed like it.
/// Random streams use each sentence's index in that corpus. Both outputs
/// have the same number of sentences.
pub fn build_bilingual_mixture(
    first: &Corpus,
    second: Option<&Corpus>,
    transformer: &Transformer,
    mode: MixMode,
    parses: Option<&[DependencyTree]>,
) -> Result<(Corpus, Corpus), TransformError> {
    transformer.validate()?;
    let transform_range = |source: &Corpus, range: std::ops::Range<usize>| {
        let sentences = source.sentences[range.clone()]
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                let i = range.start + k;
                transformer.apply_sentence(i, s, parse_for(parses, i))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        Ok::<_, TransformError>(Corpus::new(
            format!("{}({})", transformer.spec(), source.source_id),
            sentences,
        ))
    };
    match (mode, second) {
        (MixMode::NonparallelDiff, None) => Err(TransformError::MissingSecondCorpus),
        (MixMode::NonparallelDiff, Some(second)) => {
            let n = first.len().min(second.len());
            Ok((subcorpus(first, 0..n), transform_range(second, 0..n)?))
        }
        (_, Some(_)) => Err(TransformError::UnexpectedSecondCorpus),
        (MixMode::Parallel, None) => Ok((first.clone(), transform_range(first, 0..first.len())?)),
        (MixMode::NonparallelSame, None) => {
            let half = first.len() / 2;
            Ok((subcorpus(first, 0..half), transform_range(first, half..2 * half)?))
        }
    }
}
