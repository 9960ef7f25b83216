//! Recovering reading orders from Kanbun renderings.
//!
//! Every kanji of the Kanbun text is aligned to a source position, kana
//! following a kanji is taken as its okurigana, and the sequence of aligned
//! positions is the reading order. Cases the rules cannot decide (characters
//! rendered as kana, skipped characters, reordered duplicates) are resolved
//! by [`AnnotationEscape`]s kept in a sidecar file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::order::{OrderError, ReadingKind, ReadingOrder};
use crate::text::{is_cjk_ideograph, is_kana, SourceSentence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KanbunError {
    #[error("empty Kanbun text")]
    EmptyKanbun,
    #[error("unexpected character {ch:?} at Kanbun offset {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("kanji {ch:?} at Kanbun offset {offset} has no unused source position")]
    UnalignableKanji { ch: char, offset: usize },
    #[error("source character {ch:?} occurs at positions {positions:?}; add an escape to say which one is meant")]
    AmbiguousAlignment { ch: char, positions: Vec<usize> },
    #[error(
        "source position {position} ({ch:?}) is missing from the Kanbun and has no skip escape"
    )]
    UncoveredSource { position: usize, ch: char },
    #[error("kana at Kanbun offset {offset} precedes every kanji")]
    LeadingKana { offset: usize },
    #[error("yomigana {kana:?} for position {position} not found in the Kanbun text")]
    YomiganaNotFound { position: usize, kana: String },
    #[error("re-read tail {kana:?} for position {position} not found after its first reading")]
    RereadTailNotFound { position: usize, kana: String },
    #[error("invalid escape: {0}")]
    InvalidEscape(String),
    #[error(transparent)]
    Order(#[from] OrderError),
}

/// Manual annotation resolving a case the alignment rules leave open.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnnotationEscape {
    pub source_position: usize,
    pub kind: EscapeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EscapeKind {
    /// The character is not pronounced (okiji).
    Skip,
    /// The character is read twice; the kana string is the second reading.
    Reread { tail: String },
    /// Align the kanji at this 1-based Kanbun character offset to the position.
    ForceAlign { kanbun_offset: usize },
    /// The character is written as this kana string in the Kanbun text.
    Yomigana { kana: String },
}

impl EscapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            EscapeKind::Skip => "skip",
            EscapeKind::Reread { .. } => "reread",
            EscapeKind::ForceAlign { .. } => "force-align",
            EscapeKind::Yomigana { .. } => "yomigana",
        }
    }
}

impl AnnotationEscape {
    pub fn skip(position: usize) -> Self {
        Self {
            source_position: position,
            kind: EscapeKind::Skip,
        }
    }

    pub fn reread(position: usize, tail: &str) -> Self {
        Self {
            source_position: position,
            kind: EscapeKind::Reread { tail: tail.into() },
        }
    }

    pub fn force_align(position: usize, kanbun_offset: usize) -> Self {
        Self {
            source_position: position,
            kind: EscapeKind::ForceAlign { kanbun_offset },
        }
    }

    pub fn yomigana(position: usize, kana: &str) -> Self {
        Self {
            source_position: position,
            kind: EscapeKind::Yomigana { kana: kana.into() },
        }
    }
}

impl fmt::Display for AnnotationEscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.kind.name(), self.source_position)?;
        match &self.kind {
            EscapeKind::Skip => Ok(()),
            EscapeKind::Reread { tail } => write!(f, "\t{tail}"),
            EscapeKind::ForceAlign { kanbun_offset } => write!(f, "\t{kanbun_offset}"),
            EscapeKind::Yomigana { kana } => write!(f, "\t{kana}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct AnnotationParseError {
    pub line: usize,
    pub message: String,
}

/// Escapes keyed by sentence id, as read from the sidecar file
/// (`<sentence-id>\t<kind>\t<source-position>[\t<argument>]`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    by_sentence: BTreeMap<String, Vec<AnnotationEscape>>,
}

impl Annotations {
    pub fn parse(text: &str) -> Result<Self, AnnotationParseError> {
        let mut by_sentence: BTreeMap<String, Vec<AnnotationEscape>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| AnnotationParseError { line, message };
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(err(format!(
                    "expected 3 or 4 fields, found {}",
                    fields.len()
                )));
            }
            let position: usize = fields[2]
                .parse()
                .ok()
                .filter(|&p| p > 0)
                .ok_or_else(|| err(format!("bad source position {:?}", fields[2])))?;
            let arg = fields.get(3).copied().filter(|a| !a.is_empty());
            let kind = match (fields[1], arg) {
                ("skip", None) => EscapeKind::Skip,
                ("reread", Some(tail)) => EscapeKind::Reread { tail: tail.into() },
                ("yomigana", Some(kana)) => EscapeKind::Yomigana { kana: kana.into() },
                ("force-align", Some(off)) => EscapeKind::ForceAlign {
                    kanbun_offset: off
                        .parse()
                        .ok()
                        .filter(|&o: &usize| o > 0)
                        .ok_or_else(|| err(format!("bad Kanbun offset {off:?}")))?,
                },
                ("skip", Some(_)) => return Err(err("skip takes no argument".into())),
                (k @ ("reread" | "yomigana" | "force-align"), None) => {
                    return Err(err(format!("{k} needs an argument")))
                }
                (other, _) => return Err(err(format!("unknown escape kind {other:?}"))),
            };
            by_sentence
                .entry(fields[0].to_string())
                .or_default()
                .push(AnnotationEscape {
                    source_position: position,
                    kind,
                });
        }
        Ok(Self { by_sentence })
    }

    pub fn get(&self, sentence_id: &str) -> &[AnnotationEscape] {
        self.by_sentence
            .get(sentence_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn insert(&mut self, sentence_id: &str, escape: AnnotationEscape) {
        self.by_sentence
            .entry(sentence_id.to_string())
            .or_default()
            .push(escape);
    }

    pub fn sentence_ids(&self) -> impl Iterator<Item = &str> {
        self.by_sentence.keys().map(String::as_str)
    }
}

/// Mixed kanji/kana Japanese text aligned to the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KanbunSentence {
    text: String,
    /// Source position realized by each kanji of `text`, in text order.
    alignment: Vec<usize>,
}

impl KanbunSentence {
    pub fn new(
        text: impl Into<String>,
        alignment: Vec<usize>,
        source_len: usize,
    ) -> Result<Self, KanbunError> {
        let text = text.into();
        let kanji = text.chars().filter(|&c| is_cjk_ideograph(c)).count();
        if kanji != alignment.len() {
            return Err(KanbunError::InvalidEscape(format!(
                "{kanji} kanji but {} alignment entries",
                alignment.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &p in &alignment {
            if p == 0 || p > source_len {
                return Err(OrderError::InvalidPosition {
                    position: p,
                    len: source_len,
                }
                .into());
            }
            if !seen.insert(p) {
                return Err(OrderError::DuplicatePosition(p).into());
            }
        }
        Ok(Self { text, alignment })
    }

    /// Derives the alignment of an already extracted record: each kanji is
    /// matched to the next slot of `order` holding the same character, and
    /// slots skipped over are those realized as kana.
    pub fn align(
        text: &str,
        source: &SourceSentence,
        order: &ReadingOrder,
    ) -> Result<Self, KanbunError> {
        let mut alignment = Vec::new();
        let mut slots = order.order().iter().copied();
        for (offset, ch) in text.chars().enumerate() {
            if is_cjk_ideograph(ch) {
                let pos = slots
                    .by_ref()
                    .find(|&p| source.char_at(p) == Some(ch))
                    .ok_or(KanbunError::UnalignableKanji {
                        ch,
                        offset: offset + 1,
                    })?;
                alignment.push(pos);
            } else if !is_kana(ch) {
                return Err(KanbunError::UnexpectedCharacter {
                    ch,
                    offset: offset + 1,
                });
            }
        }
        Self::new(text, alignment, source.len())
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn alignment(&self) -> &[usize] {
        &self.alignment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Kanji,
    Yomigana,
    RereadTail,
}

/// One unit of the Kanbun text: a kanji, a kana rendering of a character or
/// the second reading of a re-read character, followed by trailing kana.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    pub position: usize,
    pub kind: SegmentKind,
    pub text: String,
    pub trailing: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedKanbun {
    pub order: ReadingOrder,
    /// Non-empty okurigana by source position.
    pub okurigana: BTreeMap<usize, String>,
    pub yomigana: BTreeMap<usize, String>,
    pub reread_tail: BTreeMap<usize, String>,
    pub segments: Vec<Segment>,
}

impl ParsedKanbun {
    /// Re-renders the Kanbun text from the segments.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            out.push_str(&s.text);
            out.push_str(&s.trailing);
        }
        out
    }

    pub fn order_string(&self) -> String {
        order_string(self)
    }

    pub fn kanbun_sentence(&self, source_len: usize) -> Result<KanbunSentence, KanbunError> {
        let alignment = self
            .segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Kanji)
            .map(|s| s.position)
            .collect();
        KanbunSentence::new(self.render(), alignment, source_len)
    }
}

/// Reading order as digits (`"12543"`), comma-separated beyond nine characters.
pub fn order_string(parsed: &ParsedKanbun) -> String {
    parsed.order.order_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Claim {
    Yomigana(usize),
    Tail(usize),
}

/// Extracts the reading order and kana annotations of one sentence.
///
/// `src` and `kanbun` are expected to use the same character forms.
pub fn extract_order(
    src: &SourceSentence,
    kanbun: &str,
    escapes: &[AnnotationEscape],
) -> Result<ParsedKanbun, KanbunError> {
    let n = src.len();
    let text: Vec<char> = kanbun.chars().collect();
    if text.is_empty() {
        return Err(KanbunError::EmptyKanbun);
    }
    for (offset, &ch) in text.iter().enumerate() {
        if !is_cjk_ideograph(ch) && !is_kana(ch) {
            return Err(KanbunError::UnexpectedCharacter {
                ch,
                offset: offset + 1,
            });
        }
    }

    // Per-position escape role; a position takes at most one.
    let mut role: BTreeMap<usize, &EscapeKind> = BTreeMap::new();
    let mut forced: BTreeMap<usize, usize> = BTreeMap::new();
    for e in escapes {
        let p = e.source_position;
        if p == 0 || p > n {
            return Err(KanbunError::InvalidEscape(format!(
                "position {p} outside 1..={n}"
            )));
        }
        if role.insert(p, &e.kind).is_some() {
            return Err(KanbunError::InvalidEscape(format!(
                "position {p} has more than one escape"
            )));
        }
        match &e.kind {
            EscapeKind::ForceAlign { kanbun_offset } => {
                let off = *kanbun_offset;
                if off == 0 || off > text.len() || !is_cjk_ideograph(text[off - 1]) {
                    return Err(KanbunError::InvalidEscape(format!(
                        "Kanbun offset {off} is not a kanji"
                    )));
                }
                if forced.insert(off - 1, p).is_some() {
                    return Err(KanbunError::InvalidEscape(format!(
                        "Kanbun offset {off} is force-aligned twice"
                    )));
                }
            }
            EscapeKind::Yomigana { kana } | EscapeKind::Reread { tail: kana } => {
                if kana.is_empty() || !kana.chars().all(is_kana) {
                    return Err(KanbunError::InvalidEscape(format!(
                        "{kana:?} for position {p} is not a kana string"
                    )));
                }
            }
            EscapeKind::Skip => {}
        }
    }

    // Kanji alignment: forced offsets first, then greedy leftmost unused.
    let mut used = vec![false; n];
    let mut aligned: Vec<Option<usize>> = vec![None; text.len()];
    for (&off, &p) in &forced {
        aligned[off] = Some(p);
        used[p - 1] = true;
    }
    for (p, kind) in &role {
        if matches!(kind, EscapeKind::Skip | EscapeKind::Yomigana { .. }) {
            used[p - 1] = true;
        }
    }
    for (off, &ch) in text.iter().enumerate() {
        if !is_cjk_ideograph(ch) || aligned[off].is_some() {
            continue;
        }
        let p = (1..=n)
            .find(|&p| !used[p - 1] && src.char_at(p) == Some(ch))
            .ok_or(KanbunError::UnalignableKanji {
                ch,
                offset: off + 1,
            })?;
        used[p - 1] = true;
        aligned[off] = Some(p);
    }
    for p in 1..=n {
        if used[p - 1] {
            continue;
        }
        let ch = src.char_at(p).expect("position in range");
        let open: Vec<usize> = (1..=n)
            .filter(|&q| {
                src.char_at(q) == Some(ch)
                    && !role.contains_key(&q)
                    && !forced.values().any(|&f| f == q)
            })
            .collect();
        return Err(if open.len() > 1 {
            KanbunError::AmbiguousAlignment {
                ch,
                positions: open,
            }
        } else {
            KanbunError::UncoveredSource { position: p, ch }
        });
    }

    // Kana claims: yomigana anywhere, then re-read tails after their owner.
    let mut claims: Vec<Option<(Claim, usize)>> = vec![None; text.len()];
    let mut claimed = vec![false; text.len()];
    let is_free_kana = |claimed: &[bool], o: usize| is_kana(text[o]) && !claimed[o];
    let find = |claimed: &[bool], from: usize, kana: &[char]| -> Option<usize> {
        (from..text.len()).find(|&start| {
            start + kana.len() <= text.len()
                && (0..kana.len())
                    .all(|k| is_free_kana(claimed, start + k) && text[start + k] == kana[k])
        })
    };
    for (&p, kind) in &role {
        if let EscapeKind::Yomigana { kana } = kind {
            let k: Vec<char> = kana.chars().collect();
            let start = find(&claimed, 0, &k).ok_or_else(|| KanbunError::YomiganaNotFound {
                position: p,
                kana: kana.clone(),
            })?;
            claims[start] = Some((Claim::Yomigana(p), k.len()));
            claimed[start..start + k.len()]
                .iter_mut()
                .for_each(|c| *c = true);
        }
    }
    for (&p, kind) in &role {
        if let EscapeKind::Reread { tail } = kind {
            let k: Vec<char> = tail.chars().collect();
            let not_found = || KanbunError::RereadTailNotFound {
                position: p,
                kana: tail.clone(),
            };
            let owner = aligned
                .iter()
                .position(|a| *a == Some(p))
                .ok_or_else(not_found)?;
            let mut from = owner + 1;
            while from < text.len() && is_free_kana(&claimed, from) {
                from += 1;
            }
            let start = find(&claimed, from, &k).ok_or_else(not_found)?;
            claims[start] = Some((Claim::Tail(p), k.len()));
            claimed[start..start + k.len()]
                .iter_mut()
                .for_each(|c| *c = true);
        }
    }

    // Segments in text order.
    let mut segments: Vec<Segment> = Vec::new();
    let mut off = 0;
    while off < text.len() {
        if let Some(p) = aligned[off] {
            segments.push(Segment {
                position: p,
                kind: SegmentKind::Kanji,
                text: text[off].to_string(),
                trailing: String::new(),
            });
            off += 1;
        } else if let Some((claim, len)) = claims[off] {
            let (position, kind) = match claim {
                Claim::Yomigana(p) => (p, SegmentKind::Yomigana),
                Claim::Tail(p) => (p, SegmentKind::RereadTail),
            };
            segments.push(Segment {
                position,
                kind,
                text: text[off..off + len].iter().collect(),
                trailing: String::new(),
            });
            off += len;
        } else {
            match segments.last_mut() {
                Some(seg) => seg.trailing.push(text[off]),
                None => return Err(KanbunError::LeadingKana { offset: off + 1 }),
            }
            off += 1;
        }
    }

    let flags: Vec<ReadingKind> = (1..=n)
        .map(|p| match role.get(&p) {
            Some(EscapeKind::Skip) => ReadingKind::Unpronounced,
            Some(EscapeKind::Reread { .. }) => ReadingKind::Reread,
            _ => ReadingKind::Normal,
        })
        .collect();
    let order_positions: Vec<usize> = segments
        .iter()
        .filter(|s| s.kind != SegmentKind::RereadTail)
        .map(|s| s.position)
        .collect();
    let order = ReadingOrder::new(order_positions, flags)?;

    let mut okurigana = BTreeMap::new();
    let mut yomigana = BTreeMap::new();
    let mut reread_tail = BTreeMap::new();
    for s in &segments {
        match s.kind {
            SegmentKind::Kanji | SegmentKind::Yomigana => {
                if !s.trailing.is_empty() {
                    okurigana.insert(s.position, s.trailing.clone());
                }
                if s.kind == SegmentKind::Yomigana {
                    yomigana.insert(s.position, s.text.clone());
                }
            }
            SegmentKind::RereadTail => {
                reread_tail.insert(s.position, s.text.clone());
            }
        }
    }

    Ok(ParsedKanbun {
        order,
        okurigana,
        yomigana,
        reread_tail,
        segments,
    })
}
