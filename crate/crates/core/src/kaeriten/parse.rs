//! Reading simulation for marked sentences.

use super::{KaeritenError, MalformedReason, MarkedSentence, Series};
use crate::order::{ReadingKind, ReadingOrder};

/// Marks of one read character in compact form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct Slot {
    pub re: bool,
    pub num: Option<(Series, u8)>,
}

impl Slot {
    fn deferred(self) -> bool {
        self.re || matches!(self.num, Some((_, k)) if k >= 2)
    }
}

/// Error position is a compact index into the read characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SlotError {
    pub slot: usize,
    pub reason: MalformedReason,
}

fn fail<T>(slot: usize, reason: MalformedReason) -> Result<T, SlotError> {
    Err(SlotError { slot, reason })
}

struct Reader<'a> {
    slots: &'a [Slot],
    pending: Vec<bool>,
    order: Vec<usize>,
    /// Members of each numeral group, first numeral first.
    groups: Vec<Vec<usize>>,
    group_of: Vec<Option<usize>>,
}

impl Reader<'_> {
    fn read(&mut self, i: usize) -> Result<(), SlotError> {
        self.pending[i] = false;
        self.order.push(i);
        if i > 0 && self.pending[i - 1] && self.slots[i - 1].re {
            self.read(i - 1)?;
        }
        if let Some((series, k)) = self.slots[i].num {
            let next = (0..i)
                .rev()
                .find(|&q| self.pending[q] && self.slots[q].num == Some((series, k + 1)));
            match next {
                Some(q) => {
                    let g = match self.group_of[i] {
                        Some(g) => g,
                        None => {
                            self.groups.push(vec![i]);
                            self.group_of[i] = Some(self.groups.len() - 1);
                            self.groups.len() - 1
                        }
                    };
                    self.groups[g].push(q);
                    self.group_of[q] = Some(g);
                    self.read(q)?;
                }
                None if k == 1 => return fail(i, MalformedReason::AnchorWithoutPartner),
                None => {}
            }
        }
        Ok(())
    }
}

/// Reads compact slots and returns the visiting sequence of slot indices.
pub(crate) fn simulate(slots: &[Slot]) -> Result<Vec<usize>, SlotError> {
    let n = slots.len();
    for (i, s) in slots.iter().enumerate() {
        if s.re && matches!(s.num, Some((_, k)) if k != 1) {
            return fail(i, MalformedReason::BadCombination);
        }
    }
    if n > 0 && slots[n - 1].re {
        return fail(n - 1, MalformedReason::ReOnLastCharacter);
    }
    let mut reader = Reader {
        slots,
        pending: vec![false; n],
        order: Vec::with_capacity(n),
        groups: Vec::new(),
        group_of: vec![None; n],
    };
    for (i, slot) in slots.iter().enumerate() {
        if slot.deferred() {
            reader.pending[i] = true;
        } else {
            reader.read(i)?;
        }
    }
    if let Some(i) = reader.pending.iter().position(|&p| p) {
        return fail(i, MalformedReason::Dangling);
    }
    validate_groups(slots, &reader.groups)?;
    Ok(reader.order)
}

fn validate_groups(slots: &[Slot], groups: &[Vec<usize>]) -> Result<(), SlotError> {
    let series_of = |g: &[usize]| slots[g[0]].num.map(|(s, _)| s).expect("group member");
    let span = |g: &[usize]| (*g.iter().min().unwrap(), *g.iter().max().unwrap());
    for g in groups {
        if g.len() > series_of(g).capacity() as usize {
            return fail(g[0], MalformedReason::GroupTooLarge);
        }
    }
    for (a, ga) in groups.iter().enumerate() {
        let (alo, ahi) = span(ga);
        for gb in &groups[a + 1..] {
            let (blo, bhi) = span(gb);
            if ahi < blo || bhi < alo {
                continue;
            }
            let (outer, inner) = if alo < blo && bhi < ahi {
                (ga, gb)
            } else if blo < alo && ahi < bhi {
                (gb, ga)
            } else {
                return fail(ga[0].max(gb[0]), MalformedReason::CrossingGroups);
            };
            if series_of(outer) <= series_of(inner) {
                return fail(outer[0], MalformedReason::SeriesOrder);
            }
        }
    }
    Ok(())
}

/// Compact slots of a marked sentence plus the source position of each slot.
pub(crate) fn slots_of(sentence: &MarkedSentence) -> (Vec<Slot>, Vec<usize>) {
    let mut slots = Vec::new();
    let mut positions = Vec::new();
    for (i, list) in sentence.marks.iter().enumerate() {
        if sentence.unread[i] {
            continue;
        }
        let mut slot = Slot::default();
        for m in list {
            if m.is_re() {
                slot.re = true;
            } else {
                slot.num = Some((m.series(), m.index()));
            }
        }
        slots.push(slot);
        positions.push(i + 1);
    }
    (slots, positions)
}

/// Reads a marked sentence and returns its reading order.
///
/// Unread characters are flagged [`ReadingKind::Unpronounced`]; every other
/// position is [`ReadingKind::Normal`], since marks do not encode re-reading.
pub fn parse_marks(sentence: &MarkedSentence) -> Result<ReadingOrder, KaeritenError> {
    let (slots, positions) = slots_of(sentence);
    let visit = simulate(&slots).map_err(|e| KaeritenError::MalformedMarks {
        position: positions[e.slot],
        reason: e.reason,
    })?;
    let flags = sentence
        .unread
        .iter()
        .map(|&u| {
            if u {
                ReadingKind::Unpronounced
            } else {
                ReadingKind::Normal
            }
        })
        .collect();
    let order = visit.into_iter().map(|s| positions[s]).collect();
    Ok(ReadingOrder::new(order, flags)?)
}
