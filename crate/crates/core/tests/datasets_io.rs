use std::collections::BTreeMap;

use glosshift::datasets::{
    read_conll_columns, read_jsonl, transform_classification, transform_qa, transform_token_dataset, write_conll_columns,
    write_jsonl, NliRecord, QaRecord, TaggedRecord, tagged_records_to_sentences,
};
use glosshift::ordering::OrderingModel;
use glosshift::translit::{TranslitMapBuilder, DEFAULT_SPECIAL_TOKENS};
use glosshift::{TransformKind, TransformSpec, Transformer};

const NLI: &str = r#"{"premise": "A man plays guitar .", "hypothesis": "Someone makes music .", "label": "entailment", "pair_id": 7}
{"premise": "Two dogs run .", "hypothesis": "The cats sleep .", "label": "contradiction", "pair_id": 8}

{"premise": "It rains .", "hypothesis": "The ground is wet .", "label": 0, "pair_id": 9}
"#;

#[test]
fn nli_labels_and_extra_fields_survive() {
    let recs: Vec<NliRecord> = read_jsonl(NLI.as_bytes()).unwrap();
    assert_eq!(recs.len(), 3);
    let data: Vec<_> = recs.iter().map(NliRecord::to_instance).collect();
    let t = Transformer::new(TransformSpec::single(TransformKind::Perm, 12));
    let out = transform_classification(&data, &t, None).unwrap();
    assert!(out.skipped.is_empty());
    let histogram = |labels: Vec<String>| {
        labels.into_iter().fold(BTreeMap::new(), |mut m, l| {
            *m.entry(l).or_insert(0) += 1;
            m
        })
    };
    assert_eq!(
        histogram(data.iter().map(|d| d.label.to_string()).collect()),
        histogram(out.items.iter().map(|d| d.label.to_string()).collect())
    );
    let written: Vec<NliRecord> = recs.iter().zip(&out.items).map(|(r, i)| r.with_instance(i)).collect();
    let mut buf = Vec::new();
    write_jsonl(&written, &mut buf).unwrap();
    let back: Vec<NliRecord> = read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(back[0].extra["pair_id"], 7);
    assert_eq!(back, written);
}

#[test]
fn ner_inversion_moves_labels_with_tokens() {
    let text = "Sara\tB-PER\nate\tO\napples\tO\n\nParis\tB-LOC\nis\tO\nbig\tO\n";
    let data = read_conll_columns(text.as_bytes()).unwrap();
    let t = Transformer::new(TransformSpec::single(TransformKind::Inv, 0));
    let out = transform_token_dataset(&data, &t, None).unwrap();
    assert_eq!(out.items[0].tokens(), ["apples", "ate", "Sara"]);
    assert_eq!(out.items[0].labels(), ["O", "O", "B-PER"]);
    let mut buf = Vec::new();
    write_conll_columns(&out.items, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "apples\tO\nate\tO\nSara\tB-PER\n\nbig\tO\nis\tO\nParis\tB-LOC\n"
    );
}

#[test]
fn tagged_jsonl_length_mismatch_is_reported() {
    let recs: Vec<TaggedRecord> =
        read_jsonl(r#"{"tokens": ["a", "b"], "labels": ["X"]}"#.as_bytes()).unwrap();
    assert!(tagged_records_to_sentences(&recs).is_err());
}

#[test]
fn pos_syntax_without_parses_skips_instances() {
    let data = read_conll_columns("Dogs\tNOUN\nbark\tVERB\n".as_bytes()).unwrap();
    let t = Transformer::new(TransformSpec::single(TransformKind::Syn, 0))
        .with_syntax(OrderingModel::new(1.0), Default::default());
    let out = transform_token_dataset(&data, &t, None).unwrap();
    assert!(out.items.is_empty());
    assert_eq!(out.skipped, [0]);
}

#[test]
fn qa_char_offsets_convert_and_transliterate() {
    let line = r#"{"context": "The Eiffel Tower is in Paris .", "question": "Where is the tower ?", "answer_text": "in Paris", "answer_start": 20}"#;
    let recs: Vec<QaRecord> = read_jsonl(line.as_bytes()).unwrap();
    let q = recs[0].to_instance().unwrap();
    assert_eq!((q.answer_start, q.answer_end), (4, 6));

    let mut b = TranslitMapBuilder::new(DEFAULT_SPECIAL_TOKENS);
    b.observe_line(&q.context.to_string());
    b.observe_line(&q.question.to_string());
    let map = b.finish().unwrap();
    let t = Transformer::new(TransformSpec::parse("translit.inv", 0).unwrap()).with_translit(map.clone());
    let out = transform_qa(&q, &t, 0).unwrap();
    assert_eq!((out.answer_start, out.answer_end), (1, 3));
    let expected: Vec<String> = ["Paris", "in"].iter().map(|w| map.transliterate_token(w).unwrap()).collect();
    assert_eq!(out.answer_text, expected.join(" "));
    let rec = recs[0].with_instance(&out);
    assert_eq!(rec.answer_token_start, Some(1));
    assert_eq!(rec.answer_start, None);
}

#[test]
fn qa_offset_off_token_boundary_is_an_error() {
    let line = r#"{"context": "The Eiffel Tower", "question": "q", "answer_text": "iffel", "answer_start": 5}"#;
    let recs: Vec<QaRecord> = read_jsonl(line.as_bytes()).unwrap();
    assert!(recs[0].to_instance().is_err());
}
