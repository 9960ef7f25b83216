//! Classical Chinese to Kanbun reading-order toolkit.
//!
//! The crate covers the whole pipeline: character handling ([`text`]),
//! reading orders ([`order`]), order extraction from Kanbun renderings
//! ([`kanbun`]), return marks ([`kaeriten`]), order prediction ([`reorder`]),
//! evaluation metrics ([`metrics`]) and corpus management ([`corpus`]).

pub mod corpus;
pub mod kaeriten;
pub mod kanbun;
pub mod metrics;
pub mod order;
pub mod reorder;
pub mod text;

pub use corpus::{
    corpus_stats, group_split, load_corpus, save_corpus, CorpusError, CorpusRecord, CorpusStats,
    Split, SplitSpec,
};
pub use kaeriten::{
    enumerate_representable, parse_marks, render_marks, KaeritenError, KaeritenMark,
    MarkedSentence, Series,
};
pub use kanbun::{
    extract_order, AnnotationEscape, Annotations, EscapeKind, KanbunError, KanbunSentence,
    ParsedKanbun,
};
pub use metrics::{
    bleu_char, fleiss_kappa, kendall_tau, pearson, pmr, ribes_char, rouge_l_char, spearman,
    BleuConfig, MetricError, MetricReport, OrderPair, Smoothing,
};
pub use order::{OrderError, ReadingKind, ReadingOrder};
pub use reorder::{
    decode_order, fit_sentences, make_examples, reorder_sentence, BaselinePredictor, RankExample,
    RankPredictor, ReorderError, TrainablePredictor,
};
pub use text::{normalize_forms, segment_chars, CharFormTable, SourceSentence, TextError};
