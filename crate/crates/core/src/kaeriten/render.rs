//! Synthesis of return marks for a reading order.
//!
//! A marked reading decomposes into cascades: each cascade starts when the
//! scan reaches a new rightmost character, and every later character of the
//! cascade is pulled back either by レ (from the character read just before
//! it, which must be its right neighbour) or as the next numeral of a group
//! whose previous member is still open on the cascade's path. The search
//! walks the order once, choosing between those two links with
//! backtracking, then labels numeral groups with series by nesting depth and
//! confirms the result with the reading simulation.

use super::parse::{simulate, Slot};
use super::{KaeritenError, KaeritenMark, MarkedSentence, Series};
use crate::order::{ReadingKind, ReadingOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Link {
    Scan,
    Re,
    /// Next numeral after the given slot.
    Numeral(usize),
}

struct Search<'a> {
    seq: &'a [usize],
    link: Vec<Link>,
    next_numeral: Vec<Option<usize>>,
    /// Longest prefix of `seq` for which some link choice existed.
    reached: usize,
}

impl Search<'_> {
    fn run(&mut self, t: usize, open: &mut Vec<usize>, rightmost: usize) -> Option<Vec<Slot>> {
        self.reached = self.reached.max(t);
        if t == self.seq.len() {
            return self.label();
        }
        let y = self.seq[t];
        if t == 0 || y > rightmost {
            self.link[y] = Link::Scan;
            let mut fresh = vec![y];
            return self.run(t + 1, &mut fresh, y);
        }
        let x = self.seq[t - 1];
        // レ first: it is the shortest way to express an adjacent swap.
        if y + 1 == x {
            self.link[y] = Link::Re;
            open.push(y);
            if let Some(found) = self.run(t + 1, open, rightmost) {
                return Some(found);
            }
            open.pop();
        }
        for k in (0..open.len()).rev() {
            let a = open[k];
            if y >= a {
                continue;
            }
            self.link[y] = Link::Numeral(a);
            self.next_numeral[a] = Some(y);
            let mut rest: Vec<usize> = open[..k].to_vec();
            rest.push(y);
            let found = self.run(t + 1, &mut rest, rightmost);
            self.next_numeral[a] = None;
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Turns the chosen links into marks, or `None` if they cannot be labeled
    /// consistently.
    fn label(&self) -> Option<Vec<Slot>> {
        let m = self.link.len();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for first in 0..m {
            if matches!(self.link[first], Link::Numeral(_)) || self.next_numeral[first].is_none() {
                continue;
            }
            let mut g = vec![first];
            while let Some(n) = self.next_numeral[*g.last().unwrap()] {
                g.push(n);
            }
            groups.push(g);
        }
        let spans: Vec<(usize, usize)> = groups
            .iter()
            .map(|g| (*g.iter().min().unwrap(), *g.iter().max().unwrap()))
            .collect();
        // Inner groups have shorter spans, so label by span width.
        let mut by_width: Vec<usize> = (0..groups.len()).collect();
        by_width.sort_by_key(|&g| spans[g].1 - spans[g].0);
        let mut level: Vec<Option<usize>> = vec![None; groups.len()];
        for &g in &by_width {
            let (lo, hi) = spans[g];
            let mut need = 0;
            for (h, &(hlo, hhi)) in spans.iter().enumerate() {
                if h == g || hhi < lo || hi < hlo {
                    continue;
                }
                if lo < hlo && hhi < hi {
                    need = need.max(level[h]? + 1);
                } else if !(hlo < lo && hi < hhi) {
                    return None;
                }
            }
            let len = groups[g].len();
            let found = (need..Series::NUMBERED.len())
                .find(|&l| Series::NUMBERED[l].capacity() as usize >= len)?;
            level[g] = Some(found);
        }
        let mut slots = vec![Slot::default(); m];
        for (y, link) in self.link.iter().enumerate() {
            slots[y].re = *link == Link::Re;
        }
        for (g, members) in groups.iter().enumerate() {
            let series = Series::NUMBERED[level[g].expect("labeled")];
            for (k, &y) in members.iter().enumerate() {
                slots[y].num = Some((series, k as u8 + 1));
            }
        }
        match simulate(&slots) {
            Ok(visit) if visit == self.seq => Some(slots),
            _ => None,
        }
    }
}

/// Produces return marks whose reading is `order`.
///
/// Adjacent swaps use レ wherever the reading allows it. Unpronounced
/// positions are left unmarked and flagged unread; re-read flags are
/// ignored because marks only encode the order.
pub fn render_marks(chars: &[char], order: &ReadingOrder) -> Result<MarkedSentence, KaeritenError> {
    if order.len() != chars.len() {
        return Err(KaeritenError::LengthMismatch {
            order: order.len(),
            sentence: chars.len(),
        });
    }
    let unread: Vec<bool> = order
        .flags()
        .iter()
        .map(|&k| k == ReadingKind::Unpronounced)
        .collect();
    let positions: Vec<usize> = (1..=chars.len()).filter(|&p| !unread[p - 1]).collect();
    let mut compact = vec![usize::MAX; chars.len() + 1];
    for (slot, &p) in positions.iter().enumerate() {
        compact[p] = slot;
    }
    let seq: Vec<usize> = order.order().iter().map(|&p| compact[p]).collect();
    let m = seq.len();
    let mut search = Search {
        seq: &seq,
        link: vec![Link::Scan; m],
        next_numeral: vec![None; m],
        reached: 0,
    };
    let slots = match search.run(0, &mut Vec::new(), 0) {
        Some(slots) => slots,
        None => {
            let t = search.reached.clamp(1, m.max(1) - 1);
            return Err(KaeritenError::UnrepresentableOrder {
                from: positions[seq[t - 1]],
                to: positions[seq[t]],
            });
        }
    };
    let mut marks = vec![Vec::new(); chars.len()];
    for (slot, s) in slots.iter().enumerate() {
        let list = &mut marks[positions[slot] - 1];
        if let Some((series, index)) = s.num {
            list.push(KaeritenMark::new(series, index).expect("index within capacity"));
        }
        if s.re {
            list.push(KaeritenMark::RE);
        }
    }
    MarkedSentence::with_unread(chars.to_vec(), marks, unread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kaeriten::parse_marks;

    fn render(text: &str, order: &str) -> Result<String, KaeritenError> {
        let chars: Vec<char> = text.chars().collect();
        let order: ReadingOrder = order.parse()?;
        Ok(render_marks(&chars, &order)?.to_string())
    }

    #[test]
    fn renders_classic_patterns() {
        assert_eq!(render("春眠不覚暁", "12543").unwrap(), "春眠不[レ]覚[レ]暁");
        assert_eq!(render("処処聞啼鳥", "12453").unwrap(), "処処聞[二]啼鳥[一]");
        assert_eq!(
            render("欲窮千里目", "34521").unwrap(),
            "欲[レ]窮[二]千里目[一]"
        );
        assert_eq!(render("夜来風雨声", "12345").unwrap(), "夜来風雨声");
        // レ on 読 is preferred over the textbook 上下 nesting.
        assert_eq!(render("不読書者", "3241").unwrap(), "不[二]読[レ]書者[一]");
        assert_eq!(
            render("不読古書者", "34251").unwrap(),
            "不[下]読[二]古書[一]者[上]"
        );
        assert_eq!(render("有備無", "321").unwrap(), "有[レ]備[レ]無");
        assert_eq!(
            render("有以為備無", "23541").unwrap(),
            "有[二]以為備[一レ]無"
        );
    }

    #[test]
    fn unpronounced_positions_are_marked_unread() {
        let chars: Vec<char> = "学而時習之".chars().collect();
        let order = ReadingOrder::parse("1354", "nunnn").unwrap();
        let marked = render_marks(&chars, &order).unwrap();
        assert_eq!(marked.to_string(), "学而[-]時習[レ]之");
        assert_eq!(parse_marks(&marked).unwrap(), order);
    }

    #[test]
    fn reports_unrepresentable_jump() {
        // 2 then 4 then 1 then 3: the jump back to 1 cannot be marked.
        assert!(matches!(
            render("甲乙丙丁", "2413"),
            Err(KaeritenError::UnrepresentableOrder { .. })
        ));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            render("甲乙", "123"),
            Err(KaeritenError::LengthMismatch { .. })
        ));
    }
}
