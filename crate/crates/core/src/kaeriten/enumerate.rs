//! Exhaustive enumeration of the orders reachable by some mark assignment.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{parse_marks, KaeritenError, KaeritenMark, MarkedSentence, Series};

/// Longest sentence [`enumerate_representable`] accepts.
pub const MAX_ENUMERATION_LEN: usize = 8;

/// Every mark list a single character can carry.
fn alphabet() -> Vec<Vec<KaeritenMark>> {
    let mut out = vec![Vec::new(), vec![KaeritenMark::RE]];
    for series in Series::NUMBERED {
        for k in 1..=series.capacity() {
            out.push(vec![KaeritenMark::new(series, k).unwrap()]);
        }
        out.push(vec![
            KaeritenMark::new(series, 1).unwrap(),
            KaeritenMark::RE,
        ]);
    }
    out
}

fn series_slot(s: Series) -> usize {
    match s {
        Series::Ichini => 0,
        Series::Jouge => 1,
        Series::Kouotsu => 2,
        Series::Re => unreachable!("レ has no numerals"),
    }
}

/// Per series and numeral k, how many groups seen so far (scanning right to
/// left) end at numeral k. A numeral k > 1 needs such a group ending at k-1.
#[derive(Clone, Default)]
struct Open([[u8; 5]; 3]);

impl Open {
    fn place(&mut self, marks: &[KaeritenMark]) -> bool {
        for m in marks.iter().filter(|m| !m.is_re()) {
            let row = &mut self.0[series_slot(m.series())];
            let k = m.index() as usize;
            if k > 1 {
                if row[k - 1] == 0 {
                    return false;
                }
                row[k - 1] -= 1;
            }
            row[k] += 1;
        }
        true
    }

    /// Groups still waiting for their second numeral.
    fn unpartnered(&self) -> usize {
        self.0.iter().map(|row| row[1] as usize).sum()
    }
}

struct Walker<'a> {
    n: usize,
    alphabet: &'a [Vec<KaeritenMark>],
    assignment: Vec<Vec<KaeritenMark>>,
    found: BTreeSet<Vec<usize>>,
}

impl Walker<'_> {
    /// Assigns position `i` and everything to its left.
    fn walk(&mut self, i: usize, open: &Open) {
        for marks in self.alphabet {
            let mut next = open.clone();
            if !next.place(marks) || next.unpartnered() > i {
                continue;
            }
            self.assignment[i] = marks.clone();
            if i == 0 {
                self.emit();
            } else {
                self.walk(i - 1, &next);
            }
        }
    }

    fn emit(&mut self) {
        let chars = vec!['字'; self.n];
        let Ok(sentence) = MarkedSentence::new(chars, self.assignment.clone()) else {
            return;
        };
        if let Ok(order) = parse_marks(&sentence) {
            self.found.insert(order.order().to_vec());
        }
    }
}

/// All reading orders of length `n` produced by at least one valid mark
/// assignment, as 1-based position sequences.
pub fn enumerate_representable(n: usize) -> Result<BTreeSet<Vec<usize>>, KaeritenError> {
    if n > MAX_ENUMERATION_LEN {
        return Err(KaeritenError::LengthTooLarge(n));
    }
    if n == 0 {
        return Ok(BTreeSet::from([Vec::new()]));
    }
    let alphabet = alphabet();
    // The last character cannot carry レ.
    let last: Vec<&Vec<KaeritenMark>> = alphabet
        .iter()
        .filter(|m| !m.iter().any(|m| m.is_re()))
        .collect();
    let sets: Vec<BTreeSet<Vec<usize>>> = last
        .par_iter()
        .map(|marks| {
            let mut open = Open::default();
            if !open.place(marks) || open.unpartnered() > n - 1 {
                return BTreeSet::new();
            }
            let mut walker = Walker {
                n,
                alphabet: &alphabet,
                assignment: vec![Vec::new(); n],
                found: BTreeSet::new(),
            };
            walker.assignment[n - 1] = (*marks).clone();
            if n == 1 {
                walker.emit();
            } else {
                walker.walk(n - 2, &open);
            }
            walker.found
        })
        .collect();
    Ok(sets.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_has_sixteen_entries() {
        assert_eq!(alphabet().len(), 16);
    }

    #[test]
    fn small_lengths() {
        assert_eq!(
            enumerate_representable(1).unwrap(),
            BTreeSet::from([vec![1]])
        );
        assert_eq!(
            enumerate_representable(2).unwrap(),
            BTreeSet::from([vec![1, 2], vec![2, 1]])
        );
        let three = enumerate_representable(3).unwrap();
        assert!(three.contains(&vec![3, 2, 1]));
        assert!(three.contains(&vec![1, 2, 3]));
    }

    #[test]
    fn rejects_long_sentences() {
        assert!(matches!(
            enumerate_representable(9),
            Err(KaeritenError::LengthTooLarge(9))
        ));
    }
}
