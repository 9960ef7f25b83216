//! Order and translation metrics, plus agreement and correlation statistics.
//!
//! Order metrics compare a predicted [`ReadingOrder`] with the gold one
//! (Kendall's τ, perfect match ratio). Translation metrics work on
//! characters: whitespace is dropped and every other scalar value is a token.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::order::ReadingOrder;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("orders cover different position sets")]
    PositionSetMismatch,
    #[error("empty list")]
    EmptyList,
    #[error("empty text")]
    EmptyText,
    #[error("at least two values are needed")]
    TooFewValues,
    #[error("zero variance")]
    ZeroVariance,
    #[error("rating rows sum to different rater counts ({expected} vs {found} in row {row})")]
    UnequalRaterCounts {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("fewer than two raters per item")]
    TooFewRaters,
    #[error("agreement is degenerate: every rating falls in one category")]
    DegenerateAgreement,
    #[error("report line {line}: {message}")]
    Report { line: usize, message: String },
}

/// Sum with Neumaier compensation, so aggregates barely depend on order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| compensated_sum(values.iter().copied()) / values.len() as f64)
}

/// A gold order and a prediction over the same read positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderPair {
    gold: ReadingOrder,
    predicted: ReadingOrder,
}

impl OrderPair {
    /// Pairs two orders of the same sentence. A prediction that also places
    /// positions the gold marks unpronounced is restricted to the gold's
    /// read positions first.
    pub fn new(gold: ReadingOrder, predicted: ReadingOrder) -> Result<Self, MetricError> {
        if gold.len() != predicted.len() {
            return Err(MetricError::LengthMismatch {
                left: gold.len(),
                right: predicted.len(),
            });
        }
        let read =
            |o: &ReadingOrder| -> Vec<bool> { o.flags().iter().map(|k| k.is_read()).collect() };
        let (g, p) = (read(&gold), read(&predicted));
        let predicted = if g == p {
            predicted
        } else if g.iter().zip(&p).all(|(&g, &p)| !g || p) {
            predicted
                .restricted_to(gold.flags())
                .map_err(|_| MetricError::PositionSetMismatch)?
        } else {
            return Err(MetricError::PositionSetMismatch);
        };
        Ok(Self { gold, predicted })
    }

    pub fn gold(&self) -> &ReadingOrder {
        &self.gold
    }

    pub fn predicted(&self) -> &ReadingOrder {
        &self.predicted
    }

    pub fn is_exact(&self) -> bool {
        self.gold.order() == self.predicted.order()
    }

    /// Position pairs read in opposite relative order.
    pub fn inversions(&self) -> u64 {
        let mut rank = vec![0usize; self.gold.len() + 1];
        for (slot, &p) in self.predicted.order().iter().enumerate() {
            rank[p] = slot;
        }
        let mut seq: Vec<usize> = self.gold.order().iter().map(|&p| rank[p]).collect();
        count_inversions(&mut seq)
    }
}

/// Counts pairs `i < j` with `seq[i] > seq[j]` by merge sort; sorts `seq`.
pub fn count_inversions(seq: &mut [usize]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut seq[..mid]) + count_inversions(&mut seq[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            merged.push(seq[i]);
            i += 1;
        } else {
            merged.push(seq[j]);
            inv += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&seq[i..mid]);
    merged.extend_from_slice(&seq[j..n]);
    seq.copy_from_slice(&merged);
    inv
}

/// Kendall's τ = 1 − 4·inversions / (n(n−1)); a single slot scores 1.
pub fn kendall_tau(pair: &OrderPair) -> f64 {
    tau_from_inversions(pair.inversions(), pair.gold.slots())
}

fn tau_from_inversions(inversions: u64, n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    1.0 - 4.0 * inversions as f64 / (n as f64 * (n as f64 - 1.0))
}

/// Fraction of pairs whose prediction matches the gold exactly.
pub fn pmr(pairs: &[OrderPair]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let exact = pairs.iter().filter(|p| p.is_exact()).count();
    Ok(exact as f64 / pairs.len() as f64)
}

fn tokens(text: &str) -> Vec<char> {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// How zero n-gram matches are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    /// Any zero precision makes the score zero.
    None,
    /// A zero precision at order n ≥ 2 becomes 1 / (2^k · total), where k
    /// counts the zero orders seen so far.
    #[default]
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuConfig {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            smoothing: Smoothing::Exponential,
        }
    }
}

/// Clipped n-gram counts of one candidate against one reference.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuStats {
    pub fn new(candidate: &str, reference: &str, max_n: usize) -> Self {
        let (c, r) = (tokens(candidate), tokens(reference));
        let mut stats = BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            candidate_len: c.len() as u64,
            reference_len: r.len() as u64,
        };
        for n in 1..=max_n {
            if c.len() < n {
                continue;
            }
            let mut ref_counts: HashMap<&[char], u64> = HashMap::new();
            for g in r.windows(n) {
                *ref_counts.entry(g).or_default() += 1;
            }
            let mut cand_counts: HashMap<&[char], u64> = HashMap::new();
            for g in c.windows(n) {
                *cand_counts.entry(g).or_default() += 1;
            }
            stats.totals[n - 1] = (c.len() + 1 - n) as u64;
            stats.matches[n - 1] = cand_counts
                .iter()
                .map(|(g, &k)| k.min(ref_counts.get(g).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    fn add(&mut self, other: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Score from counts, using n-gram orders up to `max_order`.
    pub fn score(&self, max_order: usize, smoothing: Smoothing) -> f64 {
        let orders = max_order.min(self.matches.len());
        if orders == 0 || self.candidate_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut halving = 1.0;
        for n in 0..orders {
            let (m, t) = (self.matches[n] as f64, self.totals[n] as f64);
            let p = if m > 0.0 {
                m / t
            } else if n == 0 || smoothing == Smoothing::None || t == 0.0 {
                return 0.0;
            } else {
                halving *= 2.0;
                1.0 / (halving * t)
            };
            log_sum += p.ln();
        }
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        bp * (log_sum / orders as f64).exp()
    }
}

fn check_corpus(candidates: &[&str], references: &[&str]) -> Result<(), MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyList);
    }
    Ok(())
}

/// Corpus BLEU over characters: n-gram counts are summed over the corpus and
/// the highest order is capped at the longest candidate's length.
pub fn bleu_char(
    candidates: &[&str],
    references: &[&str],
    config: BleuConfig,
) -> Result<f64, MetricError> {
    check_corpus(candidates, references)?;
    let stats: Vec<BleuStats> = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| BleuStats::new(c, r, config.max_n))
        .collect();
    Ok(corpus_bleu(&stats, config))
}

/// Corpus BLEU from per-sentence counts.
pub fn corpus_bleu(stats: &[BleuStats], config: BleuConfig) -> f64 {
    let mut total = BleuStats {
        matches: vec![0; config.max_n],
        totals: vec![0; config.max_n],
        ..Default::default()
    };
    let mut longest = 0;
    for s in stats {
        total.add(s);
        longest = longest.max(s.candidate_len as usize);
    }
    total.score(config.max_n.min(longest), config.smoothing)
}

/// Single-pair BLEU with the order cap at the candidate's own length.
pub fn sentence_bleu(candidate: &str, reference: &str, config: BleuConfig) -> f64 {
    let stats = BleuStats::new(candidate, reference, config.max_n);
    stats.score(
        config.max_n.min(stats.candidate_len as usize),
        config.smoothing,
    )
}

/// Unweighted mean of sentence BLEU scores.
pub fn mean_sentence_bleu(
    candidates: &[&str],
    references: &[&str],
    config: BleuConfig,
) -> Result<f64, MetricError> {
    check_corpus(candidates, references)?;
    let scores: Vec<f64> = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| sentence_bleu(c, r, config))
        .collect();
    Ok(mean(&scores).expect("non-empty"))
}

pub const RIBES_ALPHA: f64 = 0.25;
pub const RIBES_BETA: f64 = 0.10;

fn count_of<T: PartialEq>(haystack: &[T], needle: &[T]) -> usize {
    haystack
        .windows(needle.len())
        .filter(|w| *w == needle)
        .count()
}

fn find(haystack: &[char], needle: &[char]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Reference index of each alignable candidate character, in candidate
/// order. A character aligns if it occurs once in each text, or if its left
/// (then right) bigram does.
pub fn ribes_alignment(candidate: &[char], reference: &[char]) -> Vec<usize> {
    let mut used = vec![false; reference.len()];
    let mut out = Vec::new();
    for (i, &h) in candidate.iter().enumerate() {
        let unique = [h];
        let mut target = None;
        if count_of(candidate, &unique) == 1 && count_of(reference, &unique) == 1 {
            target = find(reference, &unique);
        }
        if target.is_none() && i > 0 {
            let left = [candidate[i - 1], h];
            if count_of(candidate, &left) == 1 && count_of(reference, &left) == 1 {
                target = find(reference, &left).map(|j| j + 1);
            }
        }
        if target.is_none() && i + 1 < candidate.len() {
            let right = [h, candidate[i + 1]];
            if count_of(candidate, &right) == 1 && count_of(reference, &right) == 1 {
                target = find(reference, &right);
            }
        }
        if let Some(j) = target {
            if !used[j] {
                used[j] = true;
                out.push(j);
            }
        }
    }
    out
}

/// Character RIBES: NKT · precision^α · BP^β.
pub fn ribes_char(candidate: &str, reference: &str) -> Result<f64, MetricError> {
    let (c, r) = (tokens(candidate), tokens(reference));
    if c.is_empty() || r.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let ranks = ribes_alignment(&c, &r);
    if ranks.is_empty() {
        return Ok(0.0);
    }
    let k = ranks.len();
    let nkt = if k < 2 {
        1.0
    } else {
        let mut seq = ranks.clone();
        let inv = count_inversions(&mut seq);
        let pairs = (k * (k - 1) / 2) as f64;
        (pairs - inv as f64) / pairs
    };
    let precision = k as f64 / c.len() as f64;
    let bp = (1.0 - r.len() as f64 / c.len() as f64).exp().min(1.0);
    Ok(nkt * precision.powf(RIBES_ALPHA) * bp.powf(RIBES_BETA))
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F-measure over characters.
pub fn rouge_l_char(candidate: &str, reference: &str) -> Result<f64, MetricError> {
    let (c, r) = (tokens(candidate), tokens(reference));
    if c.is_empty() || r.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let l = lcs_len(&c, &r) as f64;
    if l == 0.0 {
        return Ok(0.0);
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    Ok(2.0 * p * rec / (p + rec))
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(MetricError::TooFewValues);
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x).unwrap(), mean(y).unwrap());
    let cov = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let vx = compensated_sum(x.iter().map(|a| (a - mx).powi(2)));
    let vy = compensated_sum(y.iter().map(|b| (b - my).powi(2)));
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Fleiss' κ over an items × categories table of rater counts.
pub fn fleiss_kappa(ratings: &[Vec<usize>]) -> Result<f64, MetricError> {
    if ratings.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let raters: usize = ratings[0].iter().sum();
    for (row, r) in ratings.iter().enumerate() {
        let found: usize = r.iter().sum();
        if found != raters || r.len() != ratings[0].len() {
            return Err(MetricError::UnequalRaterCounts {
                row: row + 1,
                expected: raters,
                found,
            });
        }
    }
    if raters < 2 {
        return Err(MetricError::TooFewRaters);
    }
    let items = ratings.len() as f64;
    let n = raters as f64;
    let p_bar = compensated_sum(ratings.iter().map(|r| {
        let agree = compensated_sum(r.iter().map(|&c| (c * c) as f64)) - n;
        agree / (n * (n - 1.0))
    })) / items;
    let p_e = compensated_sum((0..ratings[0].len()).map(|j| {
        let pj = compensated_sum(ratings.iter().map(|r| r[j] as f64)) / (items * n);
        pj * pj
    }));
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(MetricError::DegenerateAgreement);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Correlation of one automatic metric with one human criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub metric: String,
    pub criterion: String,
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
}

/// Scores of one sentence; fields a report does not cover are `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceScores {
    pub id: String,
    pub tau: Option<f64>,
    pub inversions: Option<u64>,
    pub exact: Option<bool>,
    pub bleu: Option<BleuStats>,
    pub ribes: Option<f64>,
    pub rouge_l: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusScores {
    pub sentences: usize,
    pub tau_mean: Option<f64>,
    pub pmr: Option<f64>,
    pub bleu: Option<f64>,
    pub ribes_mean: Option<f64>,
    pub rouge_l_mean: Option<f64>,
}

/// Per-sentence scores plus corpus aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_sentence: Vec<SentenceScores>,
    pub corpus: CorpusScores,
    pub bleu_config: BleuConfig,
}

const REPORT_HEADER: &str = "# kanbun metric report v1";
const COLUMNS: &str =
    "id\ttau\tinversions\texact\tbleu_matches\tbleu_totals\tcand_len\tref_len\tribes\trouge_l";
const CORPUS_MARKER: &str = "## corpus";
const MISSING: &str = "-";

impl MetricReport {
    /// τ and PMR for aligned (id, pair) lists.
    pub fn for_orders(pairs: &[(String, OrderPair)]) -> Self {
        let per_sentence = pairs
            .iter()
            .map(|(id, p)| {
                let inv = p.inversions();
                SentenceScores {
                    id: id.clone(),
                    tau: Some(tau_from_inversions(inv, p.gold.slots())),
                    inversions: Some(inv),
                    exact: Some(p.is_exact()),
                    ..Default::default()
                }
            })
            .collect();
        Self::from_sentences(per_sentence, BleuConfig::default())
    }

    /// BLEU, RIBES and ROUGE-L for aligned candidate/reference lists.
    pub fn for_translations(
        ids: &[String],
        candidates: &[&str],
        references: &[&str],
        config: BleuConfig,
    ) -> Result<Self, MetricError> {
        check_corpus(candidates, references)?;
        if ids.len() != candidates.len() {
            return Err(MetricError::LengthMismatch {
                left: ids.len(),
                right: candidates.len(),
            });
        }
        let per_sentence = ids
            .iter()
            .zip(candidates.iter().zip(references))
            .map(|(id, (c, r))| {
                Ok(SentenceScores {
                    id: id.clone(),
                    bleu: Some(BleuStats::new(c, r, config.max_n)),
                    ribes: Some(ribes_char(c, r)?),
                    rouge_l: Some(rouge_l_char(c, r)?),
                    ..Default::default()
                })
            })
            .collect::<Result<Vec<_>, MetricError>>()?;
        Ok(Self::from_sentences(per_sentence, config))
    }

    /// Builds the report, deriving the corpus block from the sentences.
    pub fn from_sentences(per_sentence: Vec<SentenceScores>, bleu_config: BleuConfig) -> Self {
        let corpus = Self::aggregate(&per_sentence, bleu_config);
        Self {
            per_sentence,
            corpus,
            bleu_config,
        }
    }

    fn aggregate(rows: &[SentenceScores], config: BleuConfig) -> CorpusScores {
        let collect = |f: &dyn Fn(&SentenceScores) -> Option<f64>| -> Option<f64> {
            let v: Option<Vec<f64>> = rows.iter().map(f).collect();
            v.and_then(|v| mean(&v))
        };
        let bleu: Option<Vec<BleuStats>> = rows.iter().map(|r| r.bleu.clone()).collect();
        CorpusScores {
            sentences: rows.len(),
            tau_mean: collect(&|r| r.tau),
            pmr: collect(&|r| r.exact.map(|e| if e { 1.0 } else { 0.0 })),
            bleu: bleu
                .filter(|b| !b.is_empty())
                .map(|b| corpus_bleu(&b, config)),
            ribes_mean: collect(&|r| r.ribes),
            rouge_l_mean: collect(&|r| r.rouge_l),
        }
    }

    /// Corpus block recomputed from the per-sentence records.
    pub fn recompute_corpus(&self) -> CorpusScores {
        Self::aggregate(&self.per_sentence, self.bleu_config)
    }

    pub fn from_text(text: &str) -> Result<Self, MetricError> {
        let err = |line: usize, message: &str| MetricError::Report {
            line: line + 1,
            message: message.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&REPORT_HEADER) {
            return Err(err(0, "missing report header"));
        }
        let mut config = BleuConfig::default();
        let mut i = 1;
        if let Some(rest) = lines.get(i).and_then(|l| l.strip_prefix("# bleu\t")) {
            let f: Vec<&str> = rest.split('\t').collect();
            match f.as_slice() {
                [n, s] => {
                    config.max_n = n.parse().map_err(|_| err(i, "bad max_n"))?;
                    config.smoothing = match *s {
                        "exponential" => Smoothing::Exponential,
                        "none" => Smoothing::None,
                        _ => return Err(err(i, "unknown smoothing")),
                    };
                }
                _ => return Err(err(i, "bad bleu settings")),
            }
            i += 1;
        }
        if lines.get(i) != Some(&COLUMNS) {
            return Err(err(i, "missing column header"));
        }
        i += 1;
        let mut rows = Vec::new();
        while i < lines.len() && lines[i] != CORPUS_MARKER {
            rows.push(parse_row(lines[i]).map_err(|m| err(i, &m))?);
            i += 1;
        }
        if i == lines.len() {
            return Err(err(i, "missing corpus block"));
        }
        let mut corpus = CorpusScores::default();
        for (j, line) in lines.iter().enumerate().skip(i + 1) {
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| err(j, "expected key\\tvalue"))?;
            let v = opt_f64(value).map_err(|m| err(j, &m))?;
            match key {
                "sentences" => {
                    corpus.sentences = value.parse().map_err(|_| err(j, "bad sentence count"))?
                }
                "tau_mean" => corpus.tau_mean = v,
                "pmr" => corpus.pmr = v,
                "bleu" => corpus.bleu = v,
                "ribes_mean" => corpus.ribes_mean = v,
                "rouge_l_mean" => corpus.rouge_l_mean = v,
                _ => return Err(err(j, "unknown corpus field")),
            }
        }
        Ok(Self {
            per_sentence: rows,
            corpus,
            bleu_config: config,
        })
    }
}

fn opt_f64(s: &str) -> Result<Option<f64>, String> {
    if s == MISSING {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad number {s:?}"))
    }
}

fn counts(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|v| v.parse().map_err(|_| format!("bad count {v:?}")))
        .collect()
}

fn parse_row(line: &str) -> Result<SentenceScores, String> {
    let f: Vec<&str> = line.split('\t').collect();
    let [id, tau, inv, exact, matches, totals, clen, rlen, ribes, rouge] = f.as_slice() else {
        return Err("expected 10 fields".into());
    };
    let bleu = if *matches == MISSING {
        None
    } else {
        Some(BleuStats {
            matches: counts(matches)?,
            totals: counts(totals)?,
            candidate_len: clen.parse().map_err(|_| "bad length")?,
            reference_len: rlen.parse().map_err(|_| "bad length")?,
        })
    };
    Ok(SentenceScores {
        id: id.to_string(),
        tau: opt_f64(tau)?,
        inversions: if *inv == MISSING {
            None
        } else {
            Some(inv.parse().map_err(|_| "bad inversion count")?)
        },
        exact: match *exact {
            "1" => Some(true),
            "0" => Some(false),
            MISSING => None,
            _ => return Err("bad exact flag".into()),
        },
        bleu,
        ribes: opt_f64(ribes)?,
        rouge_l: opt_f64(rouge)?,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.6}"))
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Tab-separated layout: a header, BLEU settings, one row per sentence with
/// the columns in `COLUMNS`, then `## corpus` and `key\tvalue` lines. Scores
/// are printed with six decimals; absent values are `-`.
impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        writeln!(s, "{REPORT_HEADER}")?;
        let smoothing = match self.bleu_config.smoothing {
            Smoothing::Exponential => "exponential",
            Smoothing::None => "none",
        };
        writeln!(s, "# bleu\t{}\t{smoothing}", self.bleu_config.max_n)?;
        writeln!(s, "{COLUMNS}")?;
        for r in &self.per_sentence {
            let (m, t, c, l) = match &r.bleu {
                Some(b) => (
                    join(&b.matches),
                    join(&b.totals),
                    b.candidate_len.to_string(),
                    b.reference_len.to_string(),
                ),
                None => Default::default(),
            };
            let dash = |v: String| if v.is_empty() { MISSING.to_string() } else { v };
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.id,
                fmt_opt(r.tau),
                r.inversions
                    .map_or_else(|| MISSING.to_string(), |v| v.to_string()),
                r.exact.map_or(MISSING, |e| if e { "1" } else { "0" }),
                dash(m),
                dash(t),
                dash(c),
                dash(l),
                fmt_opt(r.ribes),
                fmt_opt(r.rouge_l),
            )?;
        }
        writeln!(s, "{CORPUS_MARKER}")?;
        writeln!(s, "sentences\t{}", self.corpus.sentences)?;
        writeln!(s, "tau_mean\t{}", fmt_opt(self.corpus.tau_mean))?;
        writeln!(s, "pmr\t{}", fmt_opt(self.corpus.pmr))?;
        writeln!(s, "bleu\t{}", fmt_opt(self.corpus.bleu))?;
        writeln!(s, "ribes_mean\t{}", fmt_opt(self.corpus.ribes_mean))?;
        writeln!(s, "rouge_l_mean\t{}", fmt_opt(self.corpus.rouge_l_mean))?;
        f.write_str(&s)
    }
}
