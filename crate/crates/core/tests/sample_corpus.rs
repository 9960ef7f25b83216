//! The shipped sample corpus: extraction goldens and consistency of the
//! checked-in files.

use std::path::PathBuf;

use kanbun_core::corpus::{extract_record, format_corpus, load_corpus, load_raw, CorpusRecord};
use kanbun_core::kaeriten::{parse_marks, render_marks};
use kanbun_core::{corpus_stats, Annotations, CharFormTable};

fn sample(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/sample")
        .join(name)
}

fn extracted() -> Vec<CorpusRecord> {
    let raw = load_raw(&sample("raw.tsv")).unwrap();
    let notes =
        Annotations::parse(&std::fs::read_to_string(sample("annotations.tsv")).unwrap()).unwrap();
    let table = CharFormTable::shipped();
    raw.iter()
        .map(|r| extract_record(r, &notes, &table).unwrap())
        .collect()
}

const EXPECTED: [(&str, &str); 20] = [
    ("shungyo-1", "12543"),
    ("shungyo-2", "12453"),
    ("shungyo-3", "12345"),
    ("shungyo-4", "12345"),
    ("seiyashi-1", "12453"),
    ("seiyashi-2", "12345"),
    ("seiyashi-3", "21453"),
    ("seiyashi-4", "21453"),
    ("kanjakuro-1", "12435"),
    ("kanjakuro-2", "12435"),
    ("kanjakuro-3", "34521"),
    ("kanjakuro-4", "12345"),
    ("rokusai-1", "12543"),
    ("rokusai-2", "13452"),
    ("rokusai-3", "12453"),
    ("rokusai-4", "13452"),
    ("kosetsu-1", "12345"),
    ("kosetsu-2", "12345"),
    ("kosetsu-3", "12345"),
    ("kosetsu-4", "12345"),
];

#[test]
fn extraction_recovers_every_order() {
    let records = extracted();
    let got: Vec<(String, String)> = records
        .iter()
        .map(|r| (r.id.clone(), r.order.order_string()))
        .collect();
    let want: Vec<(String, String)> = EXPECTED
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    assert_eq!(got, want);
    assert_eq!(records[0].source.text(), "春眠不覚暁");
}

#[test]
fn checked_in_corpus_matches_extraction() {
    let records = extracted();
    let shipped = std::fs::read_to_string(sample("corpus.tsv")).unwrap();
    assert_eq!(format_corpus(&records), shipped);
    assert_eq!(load_corpus(&sample("corpus.tsv")).unwrap(), records);
    let stats = corpus_stats(&records);
    assert_eq!(
        (stats.poems, stats.sentences, stats.characters),
        (5, 20, 100)
    );
}

#[test]
fn every_sample_order_has_marks() {
    for r in extracted() {
        let marked = render_marks(r.source.chars(), &r.order).unwrap();
        assert_eq!(parse_marks(&marked).unwrap().order(), r.order.order());
    }
}
