//! Character-level text handling shared by every other module.
//!
//! Classical Chinese lines are processed one ideograph per slot, so the
//! entry point is [`segment_chars`], which rejects anything that is not a
//! CJK ideograph. Old character forms (kyūjitai) are folded to new forms
//! (shinjitai) with a [`CharFormTable`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// The shipped kyūjitai → shinjitai table, one `<old>\t<new>` pair per line.
pub const DEFAULT_CHAR_FORMS: &str = include_str!("../data/charforms.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-CJK character {ch:?} (U+{code:04X}) at offset {offset}", code = *.ch as u32)]
    NonCjkCharacter { ch: char, offset: usize },
}

#[derive(Debug, Error)]
pub enum CharFormError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {old:?} is mapped twice")]
    DuplicateKey { line: usize, old: char },
    #[error("line {line}: {old:?} and {other:?} both map to {new:?}")]
    NotInjective {
        line: usize,
        old: char,
        other: char,
        new: char,
    },
    #[error("{new:?} is a target form but is itself mapped to {next:?}")]
    Chained { new: char, next: char },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Returns true for CJK ideographs, including the iteration mark 々 and 〇.
pub fn is_cjk_ideograph(c: char) -> bool {
    matches!(c as u32,
        0x3005 | 0x3007
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x2F800..=0x2FA1F
        | 0x30000..=0x323AF)
}

pub fn is_hiragana(c: char) -> bool {
    matches!(c as u32, 0x3041..=0x309F)
}

pub fn is_katakana(c: char) -> bool {
    matches!(c as u32, 0x30A0..=0x30FF | 0x31F0..=0x31FF)
}

pub fn is_kana(c: char) -> bool {
    is_hiragana(c) || is_katakana(c)
}

/// A line of Classical Chinese in source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSentence {
    pub id: String,
    pub poem_id: String,
    chars: Vec<char>,
}

impl SourceSentence {
    /// Segments `raw` and attaches the caller's identifiers.
    pub fn new(
        id: impl Into<String>,
        poem_id: impl Into<String>,
        raw: &str,
    ) -> Result<Self, TextError> {
        Ok(Self {
            id: id.into(),
            poem_id: poem_id.into(),
            chars: segment_chars(raw)?,
        })
    }

    /// Sentence without identifiers, handy for one-off processing.
    pub fn anonymous(raw: &str) -> Result<Self, TextError> {
        Self::new("", "", raw)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Character at a 1-based position.
    pub fn char_at(&self, position: usize) -> Option<char> {
        position
            .checked_sub(1)
            .and_then(|i| self.chars.get(i).copied())
    }

    pub fn text(&self) -> String {
        self.chars.iter().collect()
    }

    /// Applies `table` to the characters; identifiers are kept.
    pub fn normalized(&self, table: &CharFormTable) -> Self {
        Self {
            id: self.id.clone(),
            poem_id: self.poem_id.clone(),
            chars: normalize_forms(&self.chars, table),
        }
    }
}

impl fmt::Display for SourceSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.chars {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Splits `raw` into one element per Unicode scalar value.
///
/// Whitespace, punctuation and kana are rejected; the reported offset is the
/// character index, not the byte index.
pub fn segment_chars(raw: &str) -> Result<Vec<char>, TextError> {
    if raw.is_empty() {
        return Err(TextError::EmptyInput);
    }
    raw.chars()
        .enumerate()
        .map(|(offset, ch)| {
            if is_cjk_ideograph(ch) {
                Ok(ch)
            } else {
                Err(TextError::NonCjkCharacter { ch, offset })
            }
        })
        .collect()
}

/// Injective old-form → new-form character mapping.
///
/// Construction rejects tables where a target form is itself remapped, so
/// applying the table is idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CharFormTable {
    mapping: BTreeMap<char, char>,
}

impl CharFormTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The table bundled with the crate.
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_CHAR_FORMS).expect("bundled character-form table is valid")
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, CharFormError>
    where
        I: IntoIterator<Item = (char, char)>,
    {
        Self::build(
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, (o, n))| (i + 1, o, n)),
        )
    }

    /// Parses the tab-separated table format. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, CharFormError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut fields = content.split('\t').map(str::trim);
            let (old, new) = match (fields.next(), fields.next(), fields.next()) {
                (Some(o), Some(n), None) => (single_char(o, line)?, single_char(n, line)?),
                _ => {
                    return Err(CharFormError::Parse {
                        line,
                        message: "expected `<old>\\t<new>`".into(),
                    })
                }
            };
            entries.push((line, old, new));
        }
        Self::build(entries)
    }

    pub fn load(path: &Path) -> Result<Self, CharFormError> {
        let text = std::fs::read_to_string(path).map_err(|source| CharFormError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn build<I>(entries: I) -> Result<Self, CharFormError>
    where
        I: IntoIterator<Item = (usize, char, char)>,
    {
        let mut mapping = BTreeMap::new();
        let mut inverse: BTreeMap<char, char> = BTreeMap::new();
        for (line, old, new) in entries {
            if old == new {
                continue;
            }
            if mapping.insert(old, new).is_some() {
                return Err(CharFormError::DuplicateKey { line, old });
            }
            if let Some(other) = inverse.insert(new, old) {
                return Err(CharFormError::NotInjective {
                    line,
                    old,
                    other,
                    new,
                });
            }
        }
        for &new in inverse.keys() {
            if let Some(&next) = mapping.get(&new) {
                return Err(CharFormError::Chained { new, next });
            }
        }
        Ok(Self { mapping })
    }

    pub fn get(&self, c: char) -> Option<char> {
        self.mapping.get(&c).copied()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.mapping.iter().map(|(&o, &n)| (o, n))
    }

    pub fn normalize_str(&self, s: &str) -> String {
        s.chars().map(|c| self.get(c).unwrap_or(c)).collect()
    }
}

fn single_char(field: &str, line: usize) -> Result<char, CharFormError> {
    let mut it = field.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(CharFormError::Parse {
            line,
            message: format!("{field:?} is not a single character"),
        }),
    }
}

/// Replaces every character found in `table`; unknown characters pass through.
pub fn normalize_forms(s: &[char], table: &CharFormTable) -> Vec<char> {
    s.iter().map(|&c| table.get(c).unwrap_or(c)).collect()
}
