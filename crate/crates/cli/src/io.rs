//! File formats owned by the command line: order lists, text lists and
//! human judgement tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use kanbun_core::corpus::{parse_corpus, CorpusRecord};
use kanbun_core::{CharFormTable, ReadingOrder};

use crate::error::{CliError, Result};

pub const ORDERS_HEADER: &str = "# id\torder\tflags";

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(path, None, e))
}

/// Writes to `path`, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| CliError::data(p, None, e)),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::data(Path::new("<stdout>"), None, e))
        }
    }
}

/// Non-blank, non-comment lines with 1-based line numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    Ok(load_corpus_with_lines(path)?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

/// Corpus records paired with the line each came from.
pub fn load_corpus_with_lines(path: &Path) -> Result<Vec<(usize, CorpusRecord)>> {
    let text = read_text(path)?;
    let records = parse_corpus(&text).map_err(|e| CliError::data(path, e.line(), e))?;
    // parse_corpus reads exactly the content lines, one record each.
    Ok(content_lines(&text).map(|(l, _)| l).zip(records).collect())
}

/// Sentences to process: a corpus file, or `id\tsource` lines.
pub fn load_sources(path: &Path, table: &CharFormTable) -> Result<Vec<(String, String)>> {
    let text = read_text(path)?;
    let first = content_lines(&text)
        .next()
        .map(|(_, l)| l.split('\t').count());
    if first == Some(6) {
        return Ok(load_corpus(path)?
            .into_iter()
            .map(|r| (r.id, r.source.text()))
            .collect());
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, l) in content_lines(&text) {
        let Some((id, source)) = l.split_once('\t') else {
            return Err(CliError::data(path, Some(line), "expected `id\\tsource`"));
        };
        if source.contains('\t') {
            return Err(CliError::data(path, Some(line), "expected `id\\tsource`"));
        }
        if !seen.insert(id.to_string()) {
            return Err(CliError::data(
                path,
                Some(line),
                format!("duplicate id {id:?}"),
            ));
        }
        out.push((id.to_string(), table.normalize_str(source)));
    }
    Ok(out)
}

/// Reading orders keyed by id, from a corpus file or an `id\torder\tflags`
/// file. Returned in file order.
pub fn load_orders(path: &Path) -> Result<Vec<(String, ReadingOrder)>> {
    let text = read_text(path)?;
    let first = content_lines(&text)
        .next()
        .map(|(_, l)| l.split('\t').count());
    if first == Some(6) {
        return Ok(load_corpus(path)?
            .into_iter()
            .map(|r| (r.id, r.order))
            .collect());
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, l) in content_lines(&text) {
        let f: Vec<&str> = l.split('\t').collect();
        let [id, order, flags] = f.as_slice() else {
            return Err(CliError::data(
                path,
                Some(line),
                format!("expected `id\\torder\\tflags`, found {} fields", f.len()),
            ));
        };
        let order =
            ReadingOrder::parse(order, flags).map_err(|e| CliError::data(path, Some(line), e))?;
        if !seen.insert(id.to_string()) {
            return Err(CliError::data(
                path,
                Some(line),
                format!("duplicate id {id:?}"),
            ));
        }
        out.push((id.to_string(), order));
    }
    Ok(out)
}

pub fn format_orders(orders: &[(String, ReadingOrder)]) -> String {
    let mut s = String::new();
    writeln!(s, "{ORDERS_HEADER}").unwrap();
    for (id, o) in orders {
        writeln!(s, "{id}\t{}\t{}", o.order_string(), o.flags_string()).unwrap();
    }
    s
}

/// Lines of `text` or `id\ttext`; ids default to 1-based line counters.
pub fn load_texts(path: &Path) -> Result<Vec<(String, String, usize)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (n, (line, l)) in content_lines(&text).enumerate() {
        match l.split_once('\t') {
            Some((id, t)) => out.push((id.to_string(), t.to_string(), line)),
            None => out.push(((n + 1).to_string(), l.to_string(), line)),
        }
    }
    Ok(out)
}

/// `id\tcriterion\trater\tscore` judgements.
pub struct HumanScores {
    /// criterion -> id -> rater -> score
    pub by_criterion: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

pub fn load_human(path: &Path) -> Result<HumanScores> {
    let text = read_text(path)?;
    let mut by_criterion: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>> =
        BTreeMap::new();
    for (line, l) in content_lines(&text) {
        let f: Vec<&str> = l.split('\t').collect();
        let [id, criterion, rater, score] = f.as_slice() else {
            return Err(CliError::data(
                path,
                Some(line),
                "expected `id\\tcriterion\\trater\\tscore`",
            ));
        };
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| CliError::data(path, Some(line), format!("bad score {score:?}")))?;
        let slot = by_criterion
            .entry(criterion.to_string())
            .or_default()
            .entry(id.to_string())
            .or_default();
        if slot.insert(rater.to_string(), score).is_some() {
            return Err(CliError::data(
                path,
                Some(line),
                format!("rater {rater:?} scored {id:?} twice for {criterion:?}"),
            ));
        }
    }
    Ok(HumanScores { by_criterion })
}

/// Metric names, then each id's scores in that order.
pub type ScoreTable = (Vec<String>, BTreeMap<String, Vec<f64>>);

/// Per-sentence automatic scores: `id\t<metric>...` with a header row.
pub fn load_auto(path: &Path) -> Result<ScoreTable> {
    let text = read_text(path)?;
    let mut lines = content_lines_with_header(&text);
    let Some((_, header)) = lines.next() else {
        return Err(CliError::data(path, None, "empty score file"));
    };
    let metrics: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
    if metrics.is_empty() {
        return Err(CliError::data(
            path,
            Some(1),
            "header needs `id` and at least one metric",
        ));
    }
    let mut rows = BTreeMap::new();
    for (line, l) in lines {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != metrics.len() + 1 {
            return Err(CliError::data(
                path,
                Some(line),
                format!("expected {} fields", metrics.len() + 1),
            ));
        }
        let values = f[1..]
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::data(path, Some(line), "bad score"))?;
        if rows.insert(f[0].to_string(), values).is_some() {
            return Err(CliError::data(
                path,
                Some(line),
                format!("duplicate id {:?}", f[0]),
            ));
        }
    }
    Ok((metrics, rows))
}

/// Like [`content_lines`] but keeps a first line starting with `id`.
fn content_lines_with_header(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}
