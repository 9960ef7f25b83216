//! Japanese reading orders over source positions.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// How a source character takes part in the reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum ReadingKind {
    #[default]
    Normal,
    /// Read twice; the second reading is realized as kana only.
    Reread,
    /// Present in the source but skipped when reading (okiji).
    Unpronounced,
}

impl ReadingKind {
    pub fn code(self) -> char {
        match self {
            ReadingKind::Normal => 'n',
            ReadingKind::Reread => 'r',
            ReadingKind::Unpronounced => 'u',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'n' => Some(ReadingKind::Normal),
            'r' => Some(ReadingKind::Reread),
            'u' => Some(ReadingKind::Unpronounced),
            _ => None,
        }
    }

    pub fn is_read(self) -> bool {
        self != ReadingKind::Unpronounced
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("position {position} is outside 1..={len}")]
    InvalidPosition { position: usize, len: usize },
    #[error("position {0} appears more than once")]
    DuplicatePosition(usize),
    #[error("position {0} is read but missing from the order")]
    MissingPosition(usize),
    #[error("position {0} is unpronounced but appears in the order")]
    UnpronouncedInOrder(usize),
    #[error("malformed order string {0:?}")]
    MalformedOrder(String),
    #[error("malformed flag string {0:?}")]
    MalformedFlags(String),
    #[error("order covers {order} positions but flags describe {flags}")]
    LengthMismatch { order: usize, flags: usize },
}

/// A permutation of the read source positions plus per-position flags.
///
/// Positions are 1-based. Normal and re-read positions occupy exactly one
/// slot; unpronounced positions occupy none.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReadingOrder {
    order: Vec<usize>,
    flags: Vec<ReadingKind>,
}

impl ReadingOrder {
    pub fn new(order: Vec<usize>, flags: Vec<ReadingKind>) -> Result<Self, OrderError> {
        let len = flags.len();
        let mut seen = vec![false; len];
        for &p in &order {
            if p == 0 || p > len {
                return Err(OrderError::InvalidPosition { position: p, len });
            }
            if seen[p - 1] {
                return Err(OrderError::DuplicatePosition(p));
            }
            if flags[p - 1] == ReadingKind::Unpronounced {
                return Err(OrderError::UnpronouncedInOrder(p));
            }
            seen[p - 1] = true;
        }
        if let Some(missing) = (0..len).find(|&i| flags[i].is_read() && !seen[i]) {
            return Err(OrderError::MissingPosition(missing + 1));
        }
        Ok(Self { order, flags })
    }

    /// A permutation of `1..=order.len()` with every position read normally.
    pub fn from_permutation(order: Vec<usize>) -> Result<Self, OrderError> {
        let flags = vec![ReadingKind::Normal; order.len()];
        Self::new(order, flags)
    }

    pub fn identity(len: usize) -> Self {
        Self {
            order: (1..=len).collect(),
            flags: vec![ReadingKind::Normal; len],
        }
    }

    /// Parses an order string (`"12543"` or `"1,2,10,3"`) together with a
    /// flag string such as `"nnrnu"`. An empty flag string means all normal.
    pub fn parse(order: &str, flags: &str) -> Result<Self, OrderError> {
        let order = parse_positions(order)?;
        let flags = if flags.is_empty() || flags == "-" {
            vec![ReadingKind::Normal; order.len()]
        } else {
            parse_flags(flags)?
        };
        Self::new(order, flags)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn flags(&self) -> &[ReadingKind] {
        &self.flags
    }

    /// Number of source positions (sentence length).
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    /// Number of reading slots.
    pub fn slots(&self) -> usize {
        self.order.len()
    }

    pub fn flag(&self, position: usize) -> ReadingKind {
        self.flags[position - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.order.windows(2).all(|w| w[0] < w[1])
    }

    pub fn unpronounced(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == ReadingKind::Unpronounced)
            .map(|(i, _)| i + 1)
    }

    /// Drops positions that `flags` marks unpronounced and adopts `flags`.
    ///
    /// Used to compare a prediction over every character against a gold
    /// order that skips okiji.
    pub fn restricted_to(&self, flags: &[ReadingKind]) -> Result<Self, OrderError> {
        if flags.len() != self.len() {
            return Err(OrderError::LengthMismatch {
                order: self.len(),
                flags: flags.len(),
            });
        }
        let order = self
            .order
            .iter()
            .copied()
            .filter(|&p| flags[p - 1].is_read())
            .collect();
        Self::new(order, flags.to_vec())
    }

    /// Compact digits for sentences of up to nine characters, commas otherwise.
    pub fn order_string(&self) -> String {
        if self.len() <= 9 {
            self.order.iter().map(|p| p.to_string()).collect()
        } else {
            self.order
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }

    pub fn flags_string(&self) -> String {
        self.flags.iter().map(|k| k.code()).collect()
    }

    /// 1-based reading slot of every read position (`None` for unpronounced).
    pub fn slot_of(&self) -> Vec<Option<usize>> {
        let mut slots = vec![None; self.len()];
        for (slot, &p) in self.order.iter().enumerate() {
            slots[p - 1] = Some(slot + 1);
        }
        slots
    }
}

impl fmt::Display for ReadingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.order_string())
    }
}

impl FromStr for ReadingOrder {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, "")
    }
}

/// Parses the position list of an order string.
pub fn parse_positions(s: &str) -> Result<Vec<usize>, OrderError> {
    let malformed = || OrderError::MalformedOrder(s.to_string());
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(',') {
        s.split(',')
            .map(|f| f.trim().parse::<usize>().map_err(|_| malformed()))
            .collect()
    } else {
        s.chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d > 0 => Ok(d as usize),
                _ => Err(malformed()),
            })
            .collect()
    }
}

pub fn parse_flags(s: &str) -> Result<Vec<ReadingKind>, OrderError> {
    s.chars()
        .map(|c| ReadingKind::from_code(c).ok_or_else(|| OrderError::MalformedFlags(s.into())))
        .collect()
}
