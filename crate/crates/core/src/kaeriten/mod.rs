//! Kaeriten return marks.
//!
//! A [`MarkedSentence`] carries per-character return marks; [`parse_marks`]
//! reads it the classical way and yields the reading order, while
//! [`render_marks`] goes the other way and synthesizes marks for an order.
//! [`enumerate_representable`] is an exhaustive search over mark assignments
//! used to cross-check the two.
//!
//! Reading rules implemented by [`parse_marks`]:
//!
//! * scan left to right; a character marked レ, or with a numeral other than
//!   the first of its series (二, 中/下, 乙, ...), is deferred;
//! * after reading a character, a deferred レ character right before it is
//!   read next;
//! * then, if the character carries numeral k of a series, the nearest
//!   deferred character to its left carrying numeral k+1 of the same series
//!   is read.
//!
//! Groups of numerals must nest without crossing, and a group enclosing
//! another uses a higher series (一二 < 上中下 < 甲乙丙丁).

mod enumerate;
mod parse;
mod render;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::order::OrderError;
use crate::text::is_cjk_ideograph;

pub use enumerate::{enumerate_representable, MAX_ENUMERATION_LEN};
pub use parse::parse_marks;
pub use render::render_marks;

/// Mark series in escalation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Series {
    /// レ
    Re,
    /// 一二三四
    Ichini,
    /// 上中下
    Jouge,
    /// 甲乙丙丁
    Kouotsu,
}

impl Series {
    /// Largest numeral available in the series.
    pub fn capacity(self) -> u8 {
        match self {
            Series::Re => 1,
            Series::Ichini => 4,
            Series::Jouge => 3,
            Series::Kouotsu => 4,
        }
    }

    pub(crate) const NUMBERED: [Series; 3] = [Series::Ichini, Series::Jouge, Series::Kouotsu];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KaeritenMark {
    series: Series,
    index: u8,
}

impl KaeritenMark {
    pub const RE: KaeritenMark = KaeritenMark {
        series: Series::Re,
        index: 1,
    };

    pub fn new(series: Series, index: u8) -> Option<Self> {
        (index >= 1 && index <= series.capacity()).then_some(Self { series, index })
    }

    pub fn ichini(index: u8) -> Self {
        Self::new(Series::Ichini, index).expect("index within 一..四")
    }

    pub fn jouge(index: u8) -> Self {
        Self::new(Series::Jouge, index).expect("index within 上中下")
    }

    pub fn kouotsu(index: u8) -> Self {
        Self::new(Series::Kouotsu, index).expect("index within 甲..丁")
    }

    pub fn series(self) -> Series {
        self.series
    }

    pub fn index(self) -> u8 {
        self.index
    }

    pub fn is_re(self) -> bool {
        self.series == Series::Re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MalformedReason {
    ReOnLastCharacter,
    /// A deferred character is never read.
    Dangling,
    /// 一/上/甲 with no matching second numeral to its left.
    AnchorWithoutPartner,
    /// More than one numeral, or レ stacked on a non-first numeral.
    BadCombination,
    GroupTooLarge,
    CrossingGroups,
    /// A group encloses another group of the same or a higher series.
    SeriesOrder,
    MarkOnUnreadCharacter,
}

impl fmt::Display for MalformedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MalformedReason::ReOnLastCharacter => "レ on the last character",
            MalformedReason::Dangling => "deferred character is never read",
            MalformedReason::AnchorWithoutPartner => "first numeral has no partner",
            MalformedReason::BadCombination => "invalid mark combination",
            MalformedReason::GroupTooLarge => "group exceeds its series",
            MalformedReason::CrossingGroups => "numeral groups cross",
            MalformedReason::SeriesOrder => "enclosing group does not use a higher series",
            MalformedReason::MarkOnUnreadCharacter => "unread character carries a mark",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KaeritenError {
    #[error("invalid order: {0}")]
    InvalidOrder(#[from] OrderError),
    #[error("order length {order} does not match sentence length {sentence}")]
    LengthMismatch { order: usize, sentence: usize },
    #[error("no mark assignment realizes the jump from position {from} back to {to}")]
    UnrepresentableOrder { from: usize, to: usize },
    #[error("malformed marks at position {position}: {reason}")]
    MalformedMarks {
        position: usize,
        reason: MalformedReason,
    },
    #[error("sentence length {0} is too large to enumerate (max {MAX_ENUMERATION_LEN})")]
    LengthTooLarge(usize),
    #[error("marked text, character {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// Marks of one character: at most one numeral, optionally stacked with レ.
pub type PositionMarks = Vec<KaeritenMark>;

/// A source sentence annotated with return marks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarkedSentence {
    chars: Vec<char>,
    marks: Vec<PositionMarks>,
    unread: Vec<bool>,
}

impl MarkedSentence {
    /// Builds a sentence; each position's list holds the numeral first, then レ.
    pub fn new(chars: Vec<char>, marks: Vec<PositionMarks>) -> Result<Self, KaeritenError> {
        let unread = vec![false; chars.len()];
        Self::with_unread(chars, marks, unread)
    }

    pub fn with_unread(
        chars: Vec<char>,
        mut marks: Vec<PositionMarks>,
        unread: Vec<bool>,
    ) -> Result<Self, KaeritenError> {
        if marks.len() != chars.len() || unread.len() != chars.len() {
            return Err(KaeritenError::LengthMismatch {
                order: marks.len(),
                sentence: chars.len(),
            });
        }
        for (i, list) in marks.iter_mut().enumerate() {
            list.sort();
            let bad = || KaeritenError::MalformedMarks {
                position: i + 1,
                reason: MalformedReason::BadCombination,
            };
            let res = list.iter().filter(|m| m.is_re()).count();
            let nums = list.len() - res;
            if res > 1 || nums > 1 {
                return Err(bad());
            }
            // After sorting レ comes first; store numeral first.
            list.sort_by_key(|m| m.is_re());
            if res == 1 && nums == 1 && list[0].index != 1 {
                return Err(bad());
            }
            if unread[i] && !list.is_empty() {
                return Err(KaeritenError::MalformedMarks {
                    position: i + 1,
                    reason: MalformedReason::MarkOnUnreadCharacter,
                });
            }
        }
        Ok(Self {
            chars,
            marks,
            unread,
        })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn marks(&self) -> &[PositionMarks] {
        &self.marks
    }

    /// Marks at a 1-based position.
    pub fn marks_at(&self, position: usize) -> &[KaeritenMark] {
        &self.marks[position - 1]
    }

    pub fn unread(&self) -> &[bool] {
        &self.unread
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn mark_count(&self) -> usize {
        self.marks.iter().map(Vec::len).sum()
    }

    /// For every position holding a jouge numeral, the size of its group.
    /// Groups are paired right to left, innermost first.
    fn jouge_group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.len()];
        let mut open: Vec<Vec<usize>> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in (0..self.len()).rev() {
            let Some(m) = self.marks[i].iter().find(|m| m.series == Series::Jouge) else {
                continue;
            };
            if m.index == 1 {
                open.push(vec![i]);
            } else if let Some(pos) = open.iter().rposition(|g| g.len() == m.index as usize - 1) {
                let mut g = open.remove(pos);
                g.push(i);
                open.push(g);
            }
            let (done, still): (Vec<_>, Vec<_>) = open.drain(..).partition(|g| g.len() == 3);
            groups.extend(done);
            open = still;
        }
        groups.extend(open);
        for g in groups {
            for &i in &g {
                sizes[i] = g.len();
            }
        }
        sizes
    }
}

const ICHINI: [char; 4] = ['一', '二', '三', '四'];
const KOUOTSU: [char; 4] = ['甲', '乙', '丙', '丁'];
const UNREAD_MARK: &str = "-";

fn glyph(mark: KaeritenMark, jouge_size: usize) -> char {
    let i = mark.index as usize - 1;
    match mark.series {
        Series::Re => 'レ',
        Series::Ichini => ICHINI[i],
        Series::Kouotsu => KOUOTSU[i],
        Series::Jouge => match (mark.index, jouge_size) {
            (1, _) => '上',
            (2, 3) => '中',
            _ => '下',
        },
    }
}

/// Suffix bracket notation: `春眠不[レ]覚[レ]暁`, `聞[二]`, `之[一レ]`.
/// Unread characters are written `而[-]`.
impl fmt::Display for MarkedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes = self.jouge_group_sizes();
        for (i, &c) in self.chars.iter().enumerate() {
            write!(f, "{c}")?;
            if self.unread[i] {
                write!(f, "[{UNREAD_MARK}]")?;
            } else if !self.marks[i].is_empty() {
                f.write_str("[")?;
                for &m in &self.marks[i] {
                    write!(f, "{}", glyph(m, sizes[i]))?;
                }
                f.write_str("]")?;
            }
        }
        Ok(())
    }
}

/// Placeholder index for 下 until its group is known.
const JOUGE_LAST: u8 = 0;

impl FromStr for MarkedSentence {
    type Err = KaeritenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text: Vec<char> = s.trim().chars().collect();
        let mut chars = Vec::new();
        let mut marks: Vec<PositionMarks> = Vec::new();
        let mut unread = Vec::new();
        let mut i = 0;
        let syntax = |offset: usize, message: &str| KaeritenError::Syntax {
            offset: offset + 1,
            message: message.to_string(),
        };
        while i < text.len() {
            let c = text[i];
            if !is_cjk_ideograph(c) {
                return Err(syntax(i, "expected a CJK character"));
            }
            chars.push(c);
            i += 1;
            let mut list = Vec::new();
            let mut skip = false;
            if i < text.len() && text[i] == '[' {
                let close = text[i..]
                    .iter()
                    .position(|&c| c == ']')
                    .map(|p| i + p)
                    .ok_or_else(|| syntax(i, "unclosed bracket"))?;
                let body: String = text[i + 1..close].iter().collect();
                if body == UNREAD_MARK {
                    skip = true;
                } else if body.is_empty() {
                    return Err(syntax(i, "empty bracket"));
                } else {
                    for g in body.chars() {
                        let m = match g {
                            'レ' => KaeritenMark::RE,
                            '上' => KaeritenMark::jouge(1),
                            '中' => KaeritenMark::jouge(2),
                            '下' => KaeritenMark {
                                series: Series::Jouge,
                                index: JOUGE_LAST,
                            },
                            _ => {
                                if let Some(k) = ICHINI.iter().position(|&x| x == g) {
                                    KaeritenMark::ichini(k as u8 + 1)
                                } else if let Some(k) = KOUOTSU.iter().position(|&x| x == g) {
                                    KaeritenMark::kouotsu(k as u8 + 1)
                                } else {
                                    return Err(syntax(i, &format!("unknown mark {g:?}")));
                                }
                            }
                        };
                        list.push(m);
                    }
                }
                i = close + 1;
            }
            marks.push(list);
            unread.push(skip);
        }
        if chars.is_empty() {
            return Err(syntax(0, "empty sentence"));
        }
        resolve_jouge_last(&mut marks);
        MarkedSentence::with_unread(chars, marks, unread)
    }
}

/// Gives every 下 the index after the last member of its group. Groups are
/// paired right to left: 上 opens a group, 中 extends the innermost open
/// group, 下 closes it.
fn resolve_jouge_last(marks: &mut [PositionMarks]) {
    let mut open: Vec<u8> = Vec::new();
    for list in marks.iter_mut().rev() {
        for m in list.iter_mut().filter(|m| m.series == Series::Jouge) {
            match m.index {
                1 => open.push(1),
                JOUGE_LAST => m.index = open.pop().map_or(2, |top| top + 1),
                k => {
                    if let Some(top) = open.last_mut() {
                        *top = k;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for s in [
            "春眠不[レ]覚[レ]暁",
            "処処聞[二]啼鳥[一]",
            "欲[レ]窮[二]千里目[一]",
            "不[下]読[二]書[一]者[上]",
            "甲[下]乙[中]丙[二]丁[一]戊[上]",
            "学而[-]時習[レ]之",
            "有[二]備[一レ]無",
        ] {
            let m: MarkedSentence = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }

    #[test]
    fn jouge_glyph_depends_on_group_size() {
        let m: MarkedSentence = "甲[下]乙[中]丙[一]丁[上]".parse().unwrap();
        assert_eq!(m.marks_at(1), &[KaeritenMark::jouge(3)]);
        assert_eq!(m.marks_at(2), &[KaeritenMark::jouge(2)]);
        let m: MarkedSentence = "甲[下]乙丙[上]".parse().unwrap();
        assert_eq!(m.marks_at(1), &[KaeritenMark::jouge(2)]);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            "春[".parse::<MarkedSentence>(),
            Err(KaeritenError::Syntax { .. })
        ));
        assert!(matches!(
            "春[]".parse::<MarkedSentence>(),
            Err(KaeritenError::Syntax { .. })
        ));
        assert!(matches!(
            "春[x]".parse::<MarkedSentence>(),
            Err(KaeritenError::Syntax { .. })
        ));
        assert!(matches!(
            "a".parse::<MarkedSentence>(),
            Err(KaeritenError::Syntax { .. })
        ));
        assert!(matches!(
            "春[二レ]眠".parse::<MarkedSentence>(),
            Err(KaeritenError::MalformedMarks {
                reason: MalformedReason::BadCombination,
                ..
            })
        ));
    }
}
