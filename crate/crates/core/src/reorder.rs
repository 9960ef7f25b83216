//! Reading-order prediction as per-character rank regression.
//!
//! Every source character becomes one [`RankExample`] whose input names the
//! character and its position and carries the whole sentence:
//! `覚4[SEP]春眠不覚暁`. A [`RankPredictor`] maps that input to a relative
//! rank in (0, 1]; sorting the scores gives the predicted order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::order::{OrderError, ReadingKind, ReadingOrder};
use crate::text::{segment_chars, SourceSentence, TextError};

/// Separator between the target character and the sentence in an input.
pub const SEP: &str = "[SEP]";

const MODEL_HEADER: &str = "kanbun-baseline";
const MODEL_VERSION: u32 = 1;
const BOS: char = '^';
const EOS: char = '$';
const RIDGE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ReorderError {
    #[error("malformed rank input {0:?}")]
    MalformedInput(String),
    #[error("no scores to decode")]
    EmptyScores,
    #[error("score {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("order covers {order} positions but the sentence has {sentence}")]
    LengthMismatch { order: usize, sentence: usize },
    #[error("no training examples")]
    EmptyTrainingSet,
    #[error("model line {line}: {message}")]
    Model { line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Text(#[from] TextError),
}

/// One training or inference instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RankExample {
    pub sentence_id: String,
    pub input: String,
    /// 1-based source position of the target character.
    pub position: usize,
    /// Gold relative rank in (0, 1].
    pub gold: f64,
}

/// Formats the model input for the character at 1-based `position`.
pub fn format_input(chars: &[char], position: usize) -> String {
    let mut s = String::new();
    s.push(chars[position - 1]);
    write!(s, "{position}{SEP}").unwrap();
    s.extend(chars.iter());
    s
}

/// Splits an input back into character, 1-based position and sentence.
pub fn parse_input(input: &str) -> Result<(char, usize, Vec<char>), ReorderError> {
    let malformed = || ReorderError::MalformedInput(input.to_string());
    let (head, sentence) = input.split_once(SEP).ok_or_else(malformed)?;
    let mut it = head.chars();
    let ch = it.next().ok_or_else(malformed)?;
    let position: usize = it.as_str().parse().map_err(|_| malformed())?;
    let chars = segment_chars(sentence).map_err(|_| malformed())?;
    if position == 0 || position > chars.len() || chars[position - 1] != ch {
        return Err(malformed());
    }
    Ok((ch, position, chars))
}

/// Gold relative rank of every source position.
///
/// Read positions rank by reading slot. An unpronounced position is placed
/// between the slots of its nearest read neighbours (half a slot beyond the
/// only neighbour at an edge) and all positions are then re-ranked, so the
/// values are always `k / n` for distinct `k`.
pub fn gold_ranks(order: &ReadingOrder) -> Vec<f64> {
    let n = order.len();
    let slots = order.slot_of();
    let key = |i: usize| -> f64 {
        if let Some(s) = slots[i] {
            return s as f64;
        }
        let left = (0..i).rev().find_map(|j| slots[j]);
        let right = (i + 1..n).find_map(|j| slots[j]);
        match (left, right) {
            (Some(l), Some(r)) => (l + r) as f64 / 2.0,
            (Some(l), None) => l as f64 + 0.5,
            (None, Some(r)) => r as f64 - 0.5,
            (None, None) => (i + 1) as f64,
        }
    };
    let keys: Vec<f64> = (0..n).map(key).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut gold = vec![0.0; n];
    for (rank, &i) in idx.iter().enumerate() {
        gold[i] = (rank + 1) as f64 / n as f64;
    }
    gold
}

/// One example per source character, including unpronounced ones.
pub fn make_examples(
    source: &SourceSentence,
    order: &ReadingOrder,
) -> Result<Vec<RankExample>, ReorderError> {
    if order.len() != source.len() {
        return Err(ReorderError::LengthMismatch {
            order: order.len(),
            sentence: source.len(),
        });
    }
    let gold = gold_ranks(order);
    Ok((1..=source.len())
        .map(|p| RankExample {
            sentence_id: source.id.clone(),
            input: format_input(source.chars(), p),
            position: p,
            gold: gold[p - 1],
        })
        .collect())
}

/// 1-based positions sorted by ascending score; ties keep source order.
pub fn decode_order(scores: &[f64]) -> Result<Vec<usize>, ReorderError> {
    if scores.is_empty() {
        return Err(ReorderError::EmptyScores);
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ReorderError::NonFiniteScore { index });
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    Ok(idx.into_iter().map(|i| i + 1).collect())
}

pub trait RankPredictor {
    /// Relative rank of the input's target character; lower reads earlier.
    fn score(&self, input: &str) -> Result<f64, ReorderError>;
}

pub trait TrainablePredictor: RankPredictor + Sized {
    fn fit(examples: &[RankExample]) -> Result<Self, ReorderError>;
}

/// Fits a predictor on every character of the given sentences.
pub fn fit_sentences<'a, P, I>(sentences: I) -> Result<P, ReorderError>
where
    P: TrainablePredictor,
    I: IntoIterator<Item = (&'a SourceSentence, &'a ReadingOrder)>,
{
    let mut examples = Vec::new();
    for (source, order) in sentences {
        examples.extend(make_examples(source, order)?);
    }
    P::fit(&examples)
}

/// Predicts the source order.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPredictor;

impl RankPredictor for IdentityPredictor {
    fn score(&self, input: &str) -> Result<f64, ReorderError> {
        let (_, p, chars) = parse_input(input)?;
        Ok(p as f64 / chars.len() as f64)
    }
}

/// Predicts an order for every character of `source`; all positions are
/// flagged normal.
pub fn reorder_sentence<P: RankPredictor + ?Sized>(
    predictor: &P,
    source: &SourceSentence,
) -> Result<ReadingOrder, ReorderError> {
    let scores = (1..=source.len())
        .map(|p| predictor.score(&format_input(source.chars(), p)))
        .collect::<Result<Vec<_>, _>>()?;
    let order = decode_order(&scores)?;
    Ok(ReadingOrder::new(
        order,
        vec![ReadingKind::Normal; source.len()],
    )?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Stat {
    count: u32,
    sum: f64,
}

impl Stat {
    fn add(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
    }

    fn mean(self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Mean with one observation `v` removed.
    fn mean_without(self, v: f64) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.sum - v) / (self.count - 1) as f64
        }
    }
}

/// Linear model over relative position plus three lexical features: how far,
/// on average, the character and its left and right bigrams are read from
/// their source position. Unseen keys contribute zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePredictor {
    weights: [f64; 3],
    chars: BTreeMap<char, Stat>,
    left: BTreeMap<(char, char), Stat>,
    right: BTreeMap<(char, char), Stat>,
}

struct Keys {
    ch: char,
    left: (char, char),
    right: (char, char),
    rel: f64,
}

fn keys_of(input: &str) -> Result<Keys, ReorderError> {
    let (ch, p, chars) = parse_input(input)?;
    let n = chars.len();
    let l = if p > 1 { chars[p - 2] } else { BOS };
    let r = if p < n { chars[p] } else { EOS };
    Ok(Keys {
        ch,
        left: (l, ch),
        right: (ch, r),
        rel: p as f64 / n as f64,
    })
}

impl BaselinePredictor {
    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    fn features(&self, k: &Keys) -> [f64; 3] {
        let get = |m: Option<&Stat>| m.copied().unwrap_or_default().mean();
        [
            get(self.chars.get(&k.ch)),
            get(self.left.get(&k.left)),
            get(self.right.get(&k.right)),
        ]
    }

    /// Text serialization; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = format!("{MODEL_HEADER}\t{MODEL_VERSION}\n");
        let [a, b, c] = self.weights;
        writeln!(s, "weights\t{a}\t{b}\t{c}").unwrap();
        for (k, v) in &self.chars {
            writeln!(s, "char\t{k}\t{}\t{}", v.count, v.sum).unwrap();
        }
        for ((a, b), v) in &self.left {
            writeln!(s, "left\t{a}{b}\t{}\t{}", v.count, v.sum).unwrap();
        }
        for ((a, b), v) in &self.right {
            writeln!(s, "right\t{a}{b}\t{}\t{}", v.count, v.sum).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ReorderError> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, message: &str| ReorderError::Model {
            line: line + 1,
            message: message.to_string(),
        };
        match lines.next() {
            Some((_, h)) if h == format!("{MODEL_HEADER}\t{MODEL_VERSION}") => {}
            _ => return Err(err(0, "missing or unsupported model header")),
        }
        let mut model = BaselinePredictor {
            weights: [0.0; 3],
            chars: BTreeMap::new(),
            left: BTreeMap::new(),
            right: BTreeMap::new(),
        };
        let mut have_weights = false;
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let float = |s: &str| s.parse::<f64>().map_err(|_| err(i, "bad number"));
            match f.as_slice() {
                ["weights", a, b, c] => {
                    model.weights = [float(a)?, float(b)?, float(c)?];
                    have_weights = true;
                }
                [kind, key, count, sum] => {
                    let stat = Stat {
                        count: count.parse().map_err(|_| err(i, "bad count"))?,
                        sum: float(sum)?,
                    };
                    let k: Vec<char> = key.chars().collect();
                    match (*kind, k.as_slice()) {
                        ("char", [c]) => {
                            model.chars.insert(*c, stat);
                        }
                        ("left", [a, b]) => {
                            model.left.insert((*a, *b), stat);
                        }
                        ("right", [a, b]) => {
                            model.right.insert((*a, *b), stat);
                        }
                        _ => return Err(err(i, "unknown table entry")),
                    }
                }
                _ => return Err(err(i, "wrong number of fields")),
            }
        }
        if !have_weights {
            return Err(err(0, "missing weights"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReorderError> {
        std::fs::write(path, self.to_text()).map_err(|source| ReorderError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ReorderError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReorderError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }
}

impl RankPredictor for BaselinePredictor {
    fn score(&self, input: &str) -> Result<f64, ReorderError> {
        let k = keys_of(input)?;
        let f = self.features(&k);
        Ok(k.rel + self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>())
    }
}

impl TrainablePredictor for BaselinePredictor {
    /// Collects the lexical statistics, then fits the weights by ridge
    /// regression on leave-one-out features so a key never explains its own
    /// target.
    fn fit(examples: &[RankExample]) -> Result<Self, ReorderError> {
        if examples.is_empty() {
            return Err(ReorderError::EmptyTrainingSet);
        }
        let keys = examples
            .iter()
            .map(|e| keys_of(&e.input))
            .collect::<Result<Vec<_>, _>>()?;
        let targets: Vec<f64> = examples
            .iter()
            .zip(&keys)
            .map(|(e, k)| e.gold - k.rel)
            .collect();
        let mut model = BaselinePredictor {
            weights: [0.0; 3],
            chars: BTreeMap::new(),
            left: BTreeMap::new(),
            right: BTreeMap::new(),
        };
        for (k, &t) in keys.iter().zip(&targets) {
            model.chars.entry(k.ch).or_default().add(t);
            model.left.entry(k.left).or_default().add(t);
            model.right.entry(k.right).or_default().add(t);
        }
        let m = examples.len();
        let x = DMatrix::from_fn(m, 3, |i, j| {
            let k = &keys[i];
            let t = targets[i];
            match j {
                0 => model.chars[&k.ch].mean_without(t),
                1 => model.left[&k.left].mean_without(t),
                _ => model.right[&k.right].mean_without(t),
            }
        });
        let y = DVector::from_vec(targets);
        let a = x.transpose() * &x + DMatrix::identity(3, 3) * RIDGE;
        let b = x.transpose() * y;
        let w = a
            .cholesky()
            .map(|c| c.solve(&b))
            .unwrap_or_else(|| DVector::zeros(3));
        model.weights = [w[0], w[1], w[2]];
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sentence(s: &str) -> SourceSentence {
        SourceSentence::new("s", "p", s).unwrap()
    }

    #[test]
    fn input_format_round_trips() {
        let chars: Vec<char> = "春眠不覚暁".chars().collect();
        let input = format_input(&chars, 4);
        assert_eq!(input, "覚4[SEP]春眠不覚暁");
        assert_eq!(parse_input(&input).unwrap(), ('覚', 4, chars));
        assert!(parse_input("眠4[SEP]春眠不覚暁").is_err());
        assert!(parse_input("覚4春眠不覚暁").is_err());
    }

    #[test]
    fn gold_of_spring_dawn_line() {
        let order: ReadingOrder = "12543".parse().unwrap();
        let gold = gold_ranks(&order);
        assert_eq!(gold, vec![0.2, 0.4, 1.0, 0.8, 0.6]);
    }

    #[test]
    fn unpronounced_sits_between_neighbours() {
        // 学而時習之 read 1 3 5 4: 而 falls between 学 and 時.
        let order = ReadingOrder::parse("1354", "nunnn").unwrap();
        let gold = gold_ranks(&order);
        assert_eq!(gold, vec![0.2, 0.4, 0.6, 1.0, 0.8]);
        let order = ReadingOrder::parse("12", "nnu").unwrap();
        assert_eq!(gold_ranks(&order), vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn decode_handles_ties_and_errors() {
        assert_eq!(
            decode_order(&[0.5, 0.1, 0.5, 0.2]).unwrap(),
            vec![2, 4, 1, 3]
        );
        assert!(matches!(decode_order(&[]), Err(ReorderError::EmptyScores)));
        assert!(matches!(
            decode_order(&[0.1, f64::NAN]),
            Err(ReorderError::NonFiniteScore { index: 1 })
        ));
    }

    #[test]
    fn identity_corpus_trains_identity_model() {
        let mut ex = Vec::new();
        for s in ["夜来風雨声", "千山鳥飛絶", "孤舟蓑笠翁"] {
            let src = sentence(s);
            ex.extend(make_examples(&src, &ReadingOrder::identity(src.len())).unwrap());
        }
        let model = BaselinePredictor::fit(&ex).unwrap();
        let out = reorder_sentence(&model, &sentence("花落知多少")).unwrap();
        assert!(out.is_identity());
    }

    #[test]
    fn learns_negation_inversion() {
        let mut ex = Vec::new();
        for (s, o) in [
            ("春眠不覚暁", "12543"),
            ("空山不見人", "12543"),
            ("我不知其人", "14532"),
            ("夜来風雨声", "12345"),
        ] {
            let src = sentence(s);
            ex.extend(make_examples(&src, &o.parse().unwrap()).unwrap());
        }
        let model = BaselinePredictor::fit(&ex).unwrap();
        let out = reorder_sentence(&model, &sentence("君不見黄河")).unwrap();
        let slots = out.slot_of();
        assert!(
            slots[1] > slots[2],
            "不 should follow what it negates: {out}"
        );
    }

    #[test]
    fn model_text_round_trips() {
        let src = sentence("春眠不覚暁");
        let ex = make_examples(&src, &"12543".parse().unwrap()).unwrap();
        let model = BaselinePredictor::fit(&ex).unwrap();
        let back = BaselinePredictor::from_text(&model.to_text()).unwrap();
        assert_eq!(back, model);
        assert!(BaselinePredictor::from_text("nonsense\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tsv");
        model.save(&path).unwrap();
        assert_eq!(BaselinePredictor::load(&path).unwrap(), model);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            BaselinePredictor::fit(&[]),
            Err(ReorderError::EmptyTrainingSet)
        ));
    }

    proptest! {
        #[test]
        fn decode_returns_a_permutation(scores in prop::collection::vec(-10.0f64..10.0, 1..30)) {
            let mut order = decode_order(&scores).unwrap();
            for w in order.windows(2) {
                prop_assert!(scores[w[0] - 1] <= scores[w[1] - 1]);
            }
            order.sort_unstable();
            prop_assert_eq!(order, (1..=scores.len()).collect::<Vec<_>>());
        }

        #[test]
        fn examples_decode_to_the_gold_order(
            (perm, unread) in (1usize..16).prop_flat_map(|n| (
                Just((1..=n).collect::<Vec<_>>()).prop_shuffle(),
                prop::collection::vec(prop::bool::weighted(0.15), n),
            ))
        ) {
            let n = perm.len();
            let mut unread = unread;
            unread[perm[0] - 1] = false;
            let flags: Vec<ReadingKind> = unread
                .iter()
                .map(|&u| if u { ReadingKind::Unpronounced } else { ReadingKind::Normal })
                .collect();
            let read: Vec<usize> = perm.iter().copied().filter(|&p| !unread[p - 1]).collect();
            let order = ReadingOrder::new(read, flags).unwrap();
            let text: String = "春眠不覚暁処聞啼鳥夜来風雨声花落".chars().take(n).collect();
            let src = sentence(&text);
            let gold: Vec<f64> = make_examples(&src, &order).unwrap().iter().map(|e| e.gold).collect();
            let decoded = decode_order(&gold).unwrap();
            let kept: Vec<usize> = decoded.iter().copied().filter(|&p| !unread[p - 1]).collect();
            prop_assert_eq!(kept.as_slice(), order.order());
            // Strictly increasing rescalings cannot change the decoded order.
            let rescaled = |f: fn(f64) -> f64| decode_order(&gold.iter().map(|&g| f(g)).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(&rescaled(|g| 3.0 * g - 7.0), &decoded);
            prop_assert_eq!(&rescaled(|g| g * g * g), &decoded);
            prop_assert_eq!(&rescaled(f64::exp), &decoded);
        }

        #[test]
        fn gold_ranks_are_distinct_multiples(perm in Just((1..=7usize).collect::<Vec<_>>()).prop_shuffle()) {
            let order = ReadingOrder::from_permutation(perm).unwrap();
            let mut gold: Vec<u64> = gold_ranks(&order).iter().map(|g| (g * 7.0).round() as u64).collect();
            gold.sort_unstable();
            prop_assert_eq!(gold, (1..=7).collect::<Vec<_>>());
        }
    }
}
