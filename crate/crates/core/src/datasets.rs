//! Downstream datasets carried into the derived language.
//!
//! Classification instances have every text field transformed and keep
//! their label. Token-labelled sentences move each label together with its
//! token. Question-answering instances only admit transformations that keep
//! the answer contiguous (inversion and transliteration); the answer span is
//! recomputed from token provenance.

use std::io::{self, BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::conllu::DependencyTree;
use crate::corpus::Sentence;
use crate::transform::{TransformError, TransformKind, Transformer};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("{0} can scatter an answer span; only inv and translit are allowed for QA")]
    SpanUnsafeTransform(TransformKind),
    #[error("answer span could not be re-established: {0}")]
    SpanLost(String),
    #[error("answer span does not match the answer text: {0}")]
    SpanMismatch(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("instance {index}: {source}")]
    AtInstance {
        index: usize,
        #[source]
        source: Box<DatasetError>,
    },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl DatasetError {
    /// Tags the error with the instance it came from.
    pub fn at(self, index: usize) -> Self {
        DatasetError::AtInstance {
            index,
            source: Box::new(self),
        }
    }

    /// True for errors caused by a missing or mismatched dependency parse.
    fn is_parse_problem(&self) -> bool {
        match self {
            DatasetError::Transform(e) => is_parse_problem(e),
            DatasetError::AtInstance { source, .. } => source.is_parse_problem(),
            _ => false,
        }
    }
}

fn is_parse_problem(e: &TransformError) -> bool {
    match e {
        TransformError::MissingParse | TransformError::MisalignedParse(_) => true,
        TransformError::AtSentence { source, .. } => is_parse_problem(source),
        _ => false,
    }
}

/// Items that were transformed, plus the input indices dropped because their
/// dependency parse was missing or did not match.
#[derive(Clone, Debug, PartialEq)]
pub struct Transformed<T> {
    pub items: Vec<T>,
    pub skipped: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationInstance {
    pub sentences: Vec<Sentence>,
    pub label: Value,
}

/// Transforms each instance's sentences, drawing randomness from one stream
/// per instance.
///
/// For syntax reordering, `parses` holds one tree per sentence, in order
/// (instance 0's sentences, then instance 1's, ...).
pub fn transform_classification(
    data: &[ClassificationInstance],
    t: &Transformer,
    parses: Option<&[DependencyTree]>,
) -> Result<Transformed<ClassificationInstance>, DatasetError> {
    t.validate()?;
    let mut items = Vec::with_capacity(data.len());
    let mut skipped = Vec::new();
    let mut offset = 0;
    for (index, inst) in data.iter().enumerate() {
        let mut rng = t.stream(index);
        let result = inst
            .sentences
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let tree = parses.and_then(|p| p.get(offset + j));
                t.apply_tracked(s.tokens(), tree, &mut rng).map(|tr| tr.into_sentence())
            })
            .collect::<Result<Vec<_>, _>>();
        offset += inst.sentences.len();
        match result {
            Ok(sentences) => items.push(ClassificationInstance {
                sentences,
                label: inst.label.clone(),
            }),
            Err(e) if is_parse_problem(&e) => skipped.push(index),
            Err(e) => return Err(DatasetError::from(e).at(index)),
        }
    }
    Ok(Transformed { items, skipped })
}

/// A sentence with one label per token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    tokens: Vec<String>,
    labels: Vec<String>,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<String>, labels: Vec<String>) -> Result<Self, DatasetError> {
        if tokens.len() != labels.len() {
            return Err(DatasetError::LengthMismatch {
                tokens: tokens.len(),
                labels: labels.len(),
            });
        }
        if let Some(bad) = tokens.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(DatasetError::Malformed {
                line: 0,
                reason: format!("token {bad:?} is empty or contains whitespace"),
            });
        }
        Ok(LabeledSentence { tokens, labels })
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let (tokens, labels) = pairs.into_iter().map(|(a, b)| (a.into(), b.into())).unzip();
        LabeledSentence { tokens, labels }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.tokens.iter().map(String::as_str).zip(self.labels.iter().map(String::as_str))
    }
}

/// Transforms the tokens and moves each label to wherever its token went.
pub fn transform_token_labels<R: Rng + ?Sized>(
    s: &LabeledSentence,
    t: &Transformer,
    tree: Option<&DependencyTree>,
    rng: &mut R,
) -> Result<LabeledSentence, DatasetError> {
    if s.tokens.len() != s.labels.len() {
        return Err(DatasetError::LengthMismatch {
            tokens: s.tokens.len(),
            labels: s.labels.len(),
        });
    }
    let tracked = t.apply_tracked(&s.tokens, tree, rng)?;
    let labels = tracked.origin.iter().map(|&o| s.labels[o].clone()).collect();
    Ok(LabeledSentence {
        tokens: tracked.tokens,
        labels,
    })
}

/// Applies [`transform_token_labels`] to every sentence; `parses[i]` is the
/// parse of sentence `i`.
pub fn transform_token_dataset(
    data: &[LabeledSentence],
    t: &Transformer,
    parses: Option<&[DependencyTree]>,
) -> Result<Transformed<LabeledSentence>, DatasetError> {
    t.validate()?;
    let mut items = Vec::with_capacity(data.len());
    let mut skipped = Vec::new();
    for (index, s) in data.iter().enumerate() {
        let tree = parses.and_then(|p| p.get(index));
        match transform_token_labels(s, t, tree, &mut t.stream(index)) {
            Ok(out) => items.push(out),
            Err(e) if e.is_parse_problem() => skipped.push(index),
            Err(e) => return Err(e.at(index)),
        }
    }
    Ok(Transformed { items, skipped })
}

/// An extractive QA example with a token-level answer span `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QAInstance {
    pub context: Sentence,
    pub question: Sentence,
    pub answer_text: String,
    pub answer_start: usize,
    pub answer_end: usize,
}

impl QAInstance {
    /// Builds an instance, checking that the span tokens joined by single
    /// spaces equal `answer_text`.
    pub fn new(
        context: Sentence,
        question: Sentence,
        answer_text: impl Into<String>,
        answer_start: usize,
        answer_end: usize,
    ) -> Result<Self, DatasetError> {
        let q = QAInstance {
            context,
            question,
            answer_text: answer_text.into(),
            answer_start,
            answer_end,
        };
        q.check_span().map_err(DatasetError::SpanMismatch)?;
        Ok(q)
    }

    pub fn span_text(&self) -> Option<String> {
        if self.answer_start >= self.answer_end || self.answer_end > self.context.len() {
            return None;
        }
        Some(self.context.tokens()[self.answer_start..self.answer_end].join(" "))
    }

    fn check_span(&self) -> Result<(), String> {
        match self.span_text() {
            None => Err(format!(
                "span [{}, {}) is empty or outside a {}-token context",
                self.answer_start,
                self.answer_end,
                self.context.len()
            )),
            Some(text) if text != self.answer_text => Err(format!(
                "span reads {text:?}, answer is {:?}",
                self.answer_text
            )),
            Some(_) => Ok(()),
        }
    }
}

/// Converts a character offset answer into a token span over the
/// whitespace-tokenized context. The answer must start and end on token
/// boundaries; whitespace inside it is normalized to single spaces.
pub fn char_span_to_token_span(context: &str, char_start: usize, answer_text: &str) -> Result<(usize, usize), DatasetError> {
    let char_end = char_start + answer_text.chars().count();
    let mismatch = |reason: String| DatasetError::SpanMismatch(reason);
    let surface: String = context.chars().skip(char_start).take(char_end - char_start).collect();
    if surface != answer_text {
        return Err(mismatch(format!(
            "context characters {char_start}..{char_end} read {surface:?}, not {answer_text:?}"
        )));
    }
    // Token character ranges.
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in context.chars().chain(std::iter::once(' ')).enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    let first = spans.iter().position(|&(s, _)| s == char_start);
    let last = spans.iter().position(|&(_, e)| e == char_end);
    match (first, last) {
        (Some(a), Some(b)) if a <= b => Ok((a, b + 1)),
        _ => Err(mismatch(format!(
            "answer at characters {char_start}..{char_end} does not align with token boundaries"
        ))),
    }
}

/// Transforms context and question, then recomputes the answer span from
/// where the answer tokens ended up.
pub fn transform_qa(q: &QAInstance, t: &Transformer, index: usize) -> Result<QAInstance, DatasetError> {
    if let Some(&kind) = t
        .spec()
        .steps()
        .iter()
        .find(|k| matches!(k, TransformKind::Perm | TransformKind::Syn))
    {
        return Err(DatasetError::SpanUnsafeTransform(kind));
    }
    let mut rng = t.stream(index);
    let context = t.apply_tracked(q.context.tokens(), None, &mut rng)?;
    let question = t.apply_tracked(q.question.tokens(), None, &mut rng)?;
    let mut positions: Vec<usize> = context
        .origin
        .iter()
        .enumerate()
        .filter(|(_, &o)| (q.answer_start..q.answer_end).contains(&o))
        .map(|(j, _)| j)
        .collect();
    positions.sort_unstable();
    let (Some(&start), Some(&last)) = (positions.first(), positions.last()) else {
        return Err(DatasetError::SpanLost("answer span is empty".into()));
    };
    if last + 1 - start != positions.len() || positions.len() != q.answer_end - q.answer_start {
        return Err(DatasetError::SpanLost(format!(
            "answer tokens landed on non-contiguous positions {positions:?}"
        )));
    }
    let out = QAInstance {
        answer_text: context.tokens[start..=last].join(" "),
        context: context.into_sentence(),
        question: question.into_sentence(),
        answer_start: start,
        answer_end: last + 1,
    };
    out.check_span().map_err(DatasetError::SpanLost)?;
    Ok(out)
}

pub fn transform_qa_dataset(data: &[QAInstance], t: &Transformer) -> Result<Vec<QAInstance>, DatasetError> {
    t.validate()?;
    data.iter()
        .enumerate()
        .map(|(i, q)| transform_qa(q, t, i).map_err(|e| e.at(i)))
        .collect()
}

// ---------------------------------------------------------------------------
// Interchange formats

/// One JSON object per line; unknown fields are carried through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NliRecord {
    pub premise: String,
    pub hypothesis: String,
    pub label: Value,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl NliRecord {
    pub fn to_instance(&self) -> ClassificationInstance {
        ClassificationInstance {
            sentences: vec![Sentence::parse(&self.premise), Sentence::parse(&self.hypothesis)],
            label: self.label.clone(),
        }
    }

    pub fn with_instance(&self, inst: &ClassificationInstance) -> NliRecord {
        NliRecord {
            premise: inst.sentences[0].to_string(),
            hypothesis: inst.sentences[1].to_string(),
            label: inst.label.clone(),
            extra: self.extra.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedRecord {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub context: String,
    pub question: String,
    pub answer_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_token_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_token_end: Option<usize>,
    /// Character offset of the answer, accepted on input when token offsets
    /// are absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_start: Option<usize>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl QaRecord {
    pub fn to_instance(&self) -> Result<QAInstance, DatasetError> {
        let (start, end) = match (self.answer_token_start, self.answer_token_end, self.answer_start) {
            (Some(s), Some(e), _) => (s, e),
            (None, None, Some(c)) => char_span_to_token_span(&self.context, c, &self.answer_text)?,
            _ => {
                return Err(DatasetError::SpanMismatch(
                    "record needs answer_token_start/answer_token_end or answer_start".into(),
                ))
            }
        };
        QAInstance::new(
            Sentence::parse(&self.context),
            Sentence::parse(&self.question),
            self.answer_text.clone(),
            start,
            end,
        )
    }

    pub fn with_instance(&self, q: &QAInstance) -> QaRecord {
        QaRecord {
            context: q.context.to_string(),
            question: q.question.to_string(),
            answer_text: q.answer_text.clone(),
            answer_token_start: Some(q.answer_start),
            answer_token_end: Some(q.answer_end),
            answer_start: None,
            extra: self.extra.clone(),
        }
    }
}

/// Reads JSON Lines, skipping blank lines.
pub fn read_jsonl<T, R>(reader: R) -> Result<Vec<T>, DatasetError>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| DatasetError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut writer: W) -> Result<(), DatasetError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|source| DatasetError::Json { line: 0, source })?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn tagged_records_to_sentences(records: &[TaggedRecord]) -> Result<Vec<LabeledSentence>, DatasetError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| LabeledSentence::new(r.tokens.clone(), r.labels.clone()).map_err(|e| e.at(i)))
        .collect()
}

/// Reads `token<TAB>label` columns with blank lines between sentences. With
/// more than two columns, the first is the token and the last the label.
pub fn read_conll_columns<R: BufRead>(reader: R) -> Result<Vec<LabeledSentence>, DatasetError> {
    let mut out = Vec::new();
    let mut cur = LabeledSentence {
        tokens: Vec::new(),
        labels: Vec::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::replace(
                    &mut cur,
                    LabeledSentence {
                        tokens: Vec::new(),
                        labels: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols[0].is_empty() || cols[0].chars().any(char::is_whitespace) {
            return Err(DatasetError::Malformed {
                line: i + 1,
                reason: "expected token<TAB>label".into(),
            });
        }
        cur.tokens.push(cols[0].to_owned());
        cur.labels.push(cols[cols.len() - 1].to_owned());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn write_conll_columns<W: Write>(data: &[LabeledSentence], mut writer: W) -> io::Result<()> {
    for (i, s) in data.iter().enumerate() {
        if i > 0 {
            writeln!(writer)?;
        }
        for (tok, label) in s.pairs() {
            writeln!(writer, "{tok}\t{label}")?;
        }
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use crate::transform::TransformSpec;
    use crate::translit::{build_translit_map, DEFAULT_SPECIAL_TOKENS};

    fn inv() -> Transformer {
        Transformer::new(TransformSpec::single(TransformKind::Inv, 0))
    }

    fn translit_for(text: &str) -> Transformer {
        let map = build_translit_map(&Corpus::from_lines("t", [text]), DEFAULT_SPECIAL_TOKENS).unwrap();
        Transformer::new(TransformSpec::single(TransformKind::Translit, 0)).with_translit(map)
    }

    #[test]
    fn nli_pair_under_inversion() {
        let data = vec![ClassificationInstance {
            sentences: vec![Sentence::parse("a cat sat"), Sentence::parse("an animal sat")],
            label: Value::from("entailment"),
        }];
        let out = transform_classification(&data, &inv(), None).unwrap();
        assert_eq!(out.items[0].sentences[0].to_string(), "sat cat a");
        assert_eq!(out.items[0].sentences[1].to_string(), "sat animal an");
        assert_eq!(out.items[0].label, "entailment");
        assert!(transform_classification(&[], &inv(), None).unwrap().items.is_empty());
    }

    #[test]
    fn ner_labels_follow_inversion() {
        let s = LabeledSentence::from_pairs([("Sara", "PER"), ("ate", "O"), ("apples", "O")]);
        let out = transform_token_labels(&s, &inv(), None, &mut crate::rng::stream(0, 0)).unwrap();
        assert_eq!(out.tokens(), ["apples", "ate", "Sara"]);
        assert_eq!(out.labels(), ["O", "O", "PER"]);
    }

    #[test]
    fn translit_keeps_labels() {
        let s = LabeledSentence::from_pairs([("Sara", "B-PER"), ("ate", "O")]);
        let out = transform_token_labels(&s, &translit_for("Sara ate"), None, &mut crate::rng::stream(0, 0)).unwrap();
        assert_eq!(out.labels(), s.labels());
        assert_ne!(out.tokens(), s.tokens());
    }

    #[test]
    fn length_mismatch() {
        let err = LabeledSentence::new(vec!["a".into()], vec![]).unwrap_err();
        assert!(matches!(err, DatasetError::LengthMismatch { tokens: 1, labels: 0 }));
    }

    #[test]
    fn qa_inversion_moves_span() {
        let q = QAInstance::new(Sentence::parse("c0 c1 c2 c3 c4"), Sentence::parse("what ?"), "c1 c2", 1, 3).unwrap();
        let out = transform_qa(&q, &inv(), 0).unwrap();
        assert_eq!((out.answer_start, out.answer_end), (2, 4));
        assert_eq!(out.answer_text, "c2 c1");
        assert_eq!(out.question.to_string(), "? what");
    }

    #[test]
    fn qa_translit_keeps_indices() {
        let t = translit_for("alpha beta gamma who");
        let q = QAInstance::new(Sentence::parse("alpha beta gamma"), Sentence::parse("who"), "beta gamma", 1, 3).unwrap();
        let out = transform_qa(&q, &t, 0).unwrap();
        assert_eq!((out.answer_start, out.answer_end), (1, 3));
        let map = t.translit_map().unwrap();
        let mapped: String = "beta gamma".chars().map(|c| if c == ' ' { c } else { map.image(c).unwrap() }).collect();
        assert_eq!(out.answer_text, mapped);
    }

    #[test]
    fn qa_refuses_reordering() {
        let q = QAInstance::new(Sentence::parse("a b"), Sentence::parse("q"), "a", 0, 1).unwrap();
        for kind in ["perm", "syn", "translit.perm"] {
            let t = Transformer::new(TransformSpec::parse(kind, 1).unwrap());
            assert!(matches!(transform_qa(&q, &t, 0), Err(DatasetError::SpanUnsafeTransform(_))));
        }
    }

    #[test]
    fn qa_ingest_checks_span() {
        assert!(matches!(
            QAInstance::new(Sentence::parse("a b c"), Sentence::parse("q"), "a c", 0, 2),
            Err(DatasetError::SpanMismatch(_))
        ));
        assert!(QAInstance::new(Sentence::parse("a b"), Sentence::parse("q"), "", 1, 1).is_err());
    }

    #[test]
    fn char_offsets_to_token_span() {
        let ctx = "The  cat sat on the mat";
        assert_eq!(char_span_to_token_span(ctx, 5, "cat sat").unwrap(), (1, 3));
        assert_eq!(char_span_to_token_span(ctx, 20, "mat").unwrap(), (5, 6));
        assert!(char_span_to_token_span(ctx, 6, "at").is_err());
        assert!(char_span_to_token_span(ctx, 5, "dog").is_err());
    }

    #[test]
    fn jsonl_round_trip_keeps_extra_fields() {
        let text = r#"{"premise":"a b","hypothesis":"c","label":1,"id":"x7"}"#;
        let recs: Vec<NliRecord> = read_jsonl(text.as_bytes()).unwrap();
        let inst = recs[0].to_instance();
        let out = recs[0].with_instance(&transform_classification(&[inst], &inv(), None).unwrap().items[0]);
        let mut buf = Vec::new();
        write_jsonl(&[out], &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["premise"], "b a");
        assert_eq!(v["id"], "x7");
        assert_eq!(v["label"], 1);
        assert!(matches!(read_jsonl::<NliRecord, _>("{oops".as_bytes()), Err(DatasetError::Json { line: 1, .. })));
    }

    #[test]
    fn qa_record_from_char_offset() {
        let text = r#"{"context":"x y z","question":"q","answer_text":"y z","answer_start":2}"#;
        let recs: Vec<QaRecord> = read_jsonl(text.as_bytes()).unwrap();
        let q = recs[0].to_instance().unwrap();
        assert_eq!((q.answer_start, q.answer_end), (1, 3));
        let out = recs[0].with_instance(&q);
        assert_eq!(out.answer_token_start, Some(1));
        assert_eq!(out.answer_start, None);
    }

    #[test]
    fn conll_columns_round_trip() {
        let text = "Sara\tB-PER\nate\tO\n\nHi\tX\textra\tINTJ\n";
        let data = read_conll_columns(text.as_bytes()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[1].labels(), ["INTJ"]);
        let mut buf = Vec::new();
        write_conll_columns(&data, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "Sara\tB-PER\nate\tO\n\nHi\tINTJ\n");
        assert!(matches!(read_conll_columns("lonely\n".as_bytes()), Err(DatasetError::Malformed { line: 1, .. })));
    }

    #[test]
    fn misaligned_parses_are_skipped() {
        use crate::conllu::parse_conllu;
        use crate::ordering::{OrderingModel, ReorderOptions};
        let tree = parse_conllu("1\tx\t_\tNOUN\t_\t_\t0\troot\t_\t_\n".as_bytes()).unwrap().remove(0);
        let t = Transformer::new(TransformSpec::single(TransformKind::Syn, 3))
            .with_syntax(OrderingModel::new(1.0), ReorderOptions::default());
        let data = vec![
            LabeledSentence::from_pairs([("x", "A")]),
            LabeledSentence::from_pairs([("y", "B")]),
        ];
        let out = transform_token_dataset(&data, &t, Some(&[tree.clone(), tree])).unwrap();
        assert_eq!(out.items.len(), 1);
        assert_eq!(out.skipped, vec![1]);
    }
}
