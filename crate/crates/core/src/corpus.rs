//! Corpus records, their TSV format, poem-grouped splitting and statistics.
//!
//! A corpus file holds one record per line with six tab-separated fields:
//! `id`, `poem_id`, `source`, `order`, `kanbun`, `flags`. The order uses
//! [`ReadingOrder::order_string`], `kanbun` is `-` when absent and `flags` is
//! one `n`/`r`/`u` code per source character. Lines starting with `#` and
//! blank lines are ignored.
//!
//! A raw parallel file (input to extraction) has four fields:
//! `id`, `poem_id`, `source`, `kanbun`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::ops::Add;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kanbun::{extract_order, Annotations, KanbunError, KanbunSentence};
use crate::order::ReadingOrder;
use crate::text::{CharFormTable, SourceSentence};

pub const CORPUS_HEADER: &str = "# id\tpoem_id\tsource\torder\tkanbun\tflags";
const ABSENT: &str = "-";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("need at least 3 poems to split, found {found}")]
    TooFewGroups { found: usize },
    #[error("invalid split ratios {0:?}: each must lie in (0, 1) and they must sum to 1")]
    InvalidRatios([f64; 3]),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    /// Line number for data errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Parse { line, .. } | CorpusError::DuplicateId { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: String,
    pub poem_id: String,
    pub source: SourceSentence,
    pub order: ReadingOrder,
    pub kanbun: Option<KanbunSentence>,
}

impl CorpusRecord {
    /// Validates lengths and aligns the Kanbun text, if any, to the order.
    pub fn new(
        id: &str,
        poem_id: &str,
        source: &str,
        order: ReadingOrder,
        kanbun: Option<&str>,
    ) -> Result<Self, String> {
        if id.is_empty() || poem_id.is_empty() {
            return Err("id and poem_id must be non-empty".into());
        }
        let source = SourceSentence::new(id, poem_id, source).map_err(|e| e.to_string())?;
        if order.len() != source.len() {
            return Err(format!(
                "order describes {} characters but the source has {}",
                order.len(),
                source.len()
            ));
        }
        let kanbun = kanbun
            .map(|k| KanbunSentence::align(k, &source, &order))
            .transpose()
            .map_err(|e| e.to_string())?;
        Ok(Self {
            id: id.to_string(),
            poem_id: poem_id.to_string(),
            source,
            order,
            kanbun,
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.poem_id,
            self.source.text(),
            self.order.order_string(),
            self.kanbun.as_ref().map_or(ABSENT, |k| k.text()),
            self.order.flags_string()
        )
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let err = |message: String| CorpusError::Parse { line, message };
        let f: Vec<&str> = l.split('\t').collect();
        let [id, poem, source, order, kanbun, flags] = f.as_slice() else {
            return Err(err(format!(
                "expected 6 tab-separated fields, found {}",
                f.len()
            )));
        };
        let order = ReadingOrder::parse(order, flags).map_err(|e| err(e.to_string()))?;
        let kanbun = (*kanbun != ABSENT).then_some(*kanbun);
        let record = CorpusRecord::new(id, poem, source, order, kanbun).map_err(err)?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line,
                id: record.id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn format_corpus(records: &[CorpusRecord]) -> String {
    let mut s = String::new();
    writeln!(s, "{CORPUS_HEADER}").unwrap();
    for r in records {
        writeln!(s, "{}", r.to_line()).unwrap();
    }
    s
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>, CorpusError> {
    parse_corpus(&read(path)?)
}

pub fn save_corpus(records: &[CorpusRecord], path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, format_corpus(records)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One line of a raw parallel file, before extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub line: usize,
    pub id: String,
    pub poem_id: String,
    pub source: String,
    pub kanbun: String,
}

pub fn parse_raw(text: &str) -> Result<Vec<RawRecord>, CorpusError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let f: Vec<&str> = l.split('\t').collect();
        let [id, poem, source, kanbun] = f.as_slice() else {
            return Err(CorpusError::Parse {
                line,
                message: format!("expected 4 tab-separated fields, found {}", f.len()),
            });
        };
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateId {
                line,
                id: id.to_string(),
            });
        }
        out.push(RawRecord {
            line,
            id: id.to_string(),
            poem_id: poem.to_string(),
            source: source.to_string(),
            kanbun: kanbun.to_string(),
        });
    }
    Ok(out)
}

pub fn load_raw(path: &Path) -> Result<Vec<RawRecord>, CorpusError> {
    parse_raw(&read(path)?)
}

#[derive(Debug, Error)]
#[error("line {line} ({id}): {message}")]
pub struct ExtractError {
    pub line: usize,
    pub id: String,
    pub message: String,
    pub kanbun: Option<KanbunError>,
}

/// Normalizes character forms on both sides, then extracts the order of one
/// raw record using its escapes.
pub fn extract_record(
    raw: &RawRecord,
    annotations: &Annotations,
    table: &CharFormTable,
) -> Result<CorpusRecord, ExtractError> {
    let fail = |message: String, kanbun: Option<KanbunError>| ExtractError {
        line: raw.line,
        id: raw.id.clone(),
        message,
        kanbun,
    };
    let source = table.normalize_str(&raw.source);
    let kanbun = table.normalize_str(&raw.kanbun);
    let src = SourceSentence::new(&raw.id, &raw.poem_id, &source)
        .map_err(|e| fail(e.to_string(), None))?;
    let parsed = extract_order(&src, &kanbun, annotations.get(&raw.id))
        .map_err(|e| fail(e.to_string(), Some(e)))?;
    CorpusRecord::new(&raw.id, &raw.poem_id, &source, parsed.order, Some(&kanbun))
        .map_err(|m| fail(m, None))
}

/// Split ratios (train, validation, test) and the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(ratios: [f64; 3], seed: u64) -> Result<Self, CorpusError> {
        let in_range = ratios.iter().all(|r| *r > 0.0 && *r < 1.0);
        if !in_range || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios(ratios));
        }
        Ok(Self { ratios, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<CorpusRecord>,
    pub validation: Vec<CorpusRecord>,
    pub test: Vec<CorpusRecord>,
}

/// Poems per split by largest remainder; every split gets at least one.
fn target_counts(groups: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * groups as f64).collect();
    let mut counts: [usize; 3] = [0; 3];
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
    }
    let mut by_remainder: Vec<usize> = (0..3).collect();
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = groups - counts.iter().sum::<usize>();
    for &i in by_remainder.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    for i in 0..3 {
        if counts[i] == 0 {
            let donor = (0..3)
                .max_by_key(|&j| (counts[j], std::cmp::Reverse(j)))
                .unwrap();
            counts[donor] -= 1;
            counts[i] = 1;
        }
    }
    counts
}

/// Shuffles the distinct poems with the seed and cuts the shuffled list
/// into train, validation and test by poem count. Records keep their input
/// order within each split.
pub fn group_split(records: &[CorpusRecord], spec: &SplitSpec) -> Result<Split, CorpusError> {
    let mut poems: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in records {
        if seen.insert(r.poem_id.as_str()) {
            poems.push(&r.poem_id);
        }
    }
    if poems.len() < 3 {
        return Err(CorpusError::TooFewGroups { found: poems.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    poems.shuffle(&mut rng);
    let [train, validation, _] = target_counts(poems.len(), spec.ratios);
    let mut part: HashMap<&str, usize> = HashMap::new();
    for (i, p) in poems.iter().enumerate() {
        let k = if i < train {
            0
        } else if i < train + validation {
            1
        } else {
            2
        };
        part.insert(p, k);
    }
    let mut split = Split::default();
    for r in records {
        let target = match part[r.poem_id.as_str()] {
            0 => &mut split.train,
            1 => &mut split.validation,
            _ => &mut split.test,
        };
        target.push(r.clone());
    }
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorpusStats {
    pub poems: usize,
    pub sentences: usize,
    pub characters: usize,
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(self, o: CorpusStats) -> CorpusStats {
        CorpusStats {
            poems: self.poems + o.poems,
            sentences: self.sentences + o.sentences,
            characters: self.characters + o.characters,
        }
    }
}

pub fn corpus_stats(records: &[CorpusRecord]) -> CorpusStats {
    let poems: BTreeSet<&str> = records.iter().map(|r| r.poem_id.as_str()).collect();
    CorpusStats {
        poems: poems.len(),
        sentences: records.len(),
        characters: records.iter().map(|r| r.source.len()).sum(),
    }
}

/// Number of records per poem, in poem-id order.
pub fn poem_sizes(records: &[CorpusRecord]) -> BTreeMap<&str, usize> {
    let mut sizes = BTreeMap::new();
    for r in records {
        *sizes.entry(r.poem_id.as_str()).or_default() += 1;
    }
    sizes
}
