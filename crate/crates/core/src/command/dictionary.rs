use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::levenshtein::levenshtein;

/// Tokens at most this far from a permitted word are auto-corrected.
pub const MAX_CORRECTION_DISTANCE: usize = 2;

const DEFAULT_WORDS: &[&str] = &[
    "hey", "dashcam", "pay", "for", "at", "number", "parking", "space", "gas", "fuel", "pump",
    "toll", "order",
];

/// Permitted words, kept in lowercase canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    words: BTreeSet<String>,
}

impl Default for Dictionary {
    fn default() -> Self {
        Self::from_words(DEFAULT_WORDS.iter().copied()).expect("non-empty")
    }
}

impl Dictionary {
    /// Returns `None` when no usable word is given.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Option<Self> {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        (!words.is_empty()).then_some(Self { words })
    }

    /// Line-delimited source: one word or phrase per line, `#` starts a
    /// comment. Phrases are stored with their spaces removed, since
    /// correction operates on joined tokens.
    pub fn parse(source: &str) -> Option<Self> {
        let lines: Vec<String> = source
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.split_whitespace().collect::<String>())
            .collect();
        Self::from_words(lines.iter().map(String::as_str))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sub-dictionary of the given candidates that this dictionary permits.
    pub fn restrict(&self, candidates: &[&str]) -> Option<Self> {
        Self::from_words(candidates.iter().copied().filter(|c| self.contains(c)))
    }

    /// Closest word and its distance; ties go to the lexicographically
    /// smallest word.
    pub fn nearest(&self, token: &str) -> (&str, usize) {
        let mut best: Option<(&str, usize)> = None;
        for w in &self.words {
            let d = levenshtein(token, w);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((w, d));
            }
        }
        best.expect("dictionary is non-empty")
    }
}

/// Replaces `token` by its nearest dictionary word when that word is within
/// [`MAX_CORRECTION_DISTANCE`]. Digit strings are returned unchanged.
pub fn correct_token(token: &str, dict: &Dictionary) -> String {
    if token.chars().all(|c| c.is_ascii_digit()) && !token.is_empty() {
        return token.to_string();
    }
    let (word, d) = dict.nearest(token);
    if d <= MAX_CORRECTION_DISTANCE {
        word.to_string()
    } else {
        token.to_string()
    }
}
