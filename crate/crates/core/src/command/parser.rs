use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dictionary::{Dictionary, MAX_CORRECTION_DISTANCE};
use super::levenshtein::levenshtein;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseCase {
    Fuel,
    Toll,
    Parking,
    FastFood,
}

impl UseCase {
    pub fn code(self) -> u8 {
        match self {
            UseCase::Fuel => 1,
            UseCase::Toll => 2,
            UseCase::Parking => 3,
            UseCase::FastFood => 4,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(UseCase::Fuel),
            2 => Some(UseCase::Toll),
            3 => Some(UseCase::Parking),
            4 => Some(UseCase::FastFood),
            _ => None,
        }
    }

    /// Whether the use case carries a numeric slot.
    pub fn has_slot(self) -> bool {
        !matches!(self, UseCase::Toll)
    }

    fn slot_name(self) -> &'static str {
        match self {
            UseCase::Fuel => "pump number",
            UseCase::Parking => "space number",
            UseCase::FastFood => "order number",
            UseCase::Toll => "",
        }
    }
}

impl fmt::Display for UseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UseCase::Fuel => "fuel",
            UseCase::Toll => "toll",
            UseCase::Parking => "parking",
            UseCase::FastFood => "fast_food",
        })
    }
}

/// Structured payment request extracted from a spoken command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentCommand {
    pub use_case: UseCase,
    /// Pump, space or order number. Always `None` for tolls.
    pub slot: Option<u64>,
    pub transcript: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("empty command")]
    Empty,
    #[error("unexpected token {token:?} at position {position}, expected {expected:?}")]
    Unexpected {
        position: usize,
        token: String,
        expected: &'static str,
    },
    #[error("unknown use case {token:?} at position {position}")]
    UnknownUseCase { position: usize, token: String },
    #[error("incomplete {use_case} command: missing {missing}")]
    Incomplete {
        use_case: UseCase,
        missing: &'static str,
    },
    #[error("invalid number {token:?} at position {position}")]
    InvalidNumber { position: usize, token: String },
    #[error("unexpected trailing token {token:?} at position {position}")]
    TrailingTokens { position: usize, token: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    Triggered { remainder: String },
    NotTriggered,
}

/// Lowercases and replaces everything except letters and digits by spaces.
pub fn normalize(transcript: &str) -> Vec<String> {
    let cleaned: String = transcript
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    cleaned.split_whitespace().map(ToString::to_string).collect()
}

/// Number of leading tokens forming the trigger phrase, if present.
fn trigger_len(tokens: &[String]) -> Option<usize> {
    let first = tokens.first()?;
    if levenshtein(first, "hey") > MAX_CORRECTION_DISTANCE {
        return None;
    }
    let single = tokens.get(1).map(|t| (levenshtein(t, "dashcam"), 2));
    let joined = tokens
        .get(1)
        .zip(tokens.get(2))
        .map(|(a, b)| (levenshtein(&format!("{a}{b}"), "dashcam"), 3));
    [single, joined]
        .into_iter()
        .flatten()
        .filter(|(d, _)| *d <= MAX_CORRECTION_DISTANCE)
        .min()
        .map(|(_, len)| len)
}

/// Detects a leading "hey dashcam", tolerating recognition errors and the
/// split form "dash cam".
pub fn detect_trigger(transcript: &str) -> Trigger {
    let tokens = normalize(transcript);
    match trigger_len(&tokens) {
        Some(n) => Trigger::Triggered {
            remainder: tokens[n..].join(" "),
        },
        None => Trigger::NotTriggered,
    }
}

const UNITS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];
const TEENS: [&str; 10] = [
    "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
    "eighteen", "nineteen",
];
const TENS: [&str; 8] = [
    "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

enum NumberWord {
    Unit(u64),
    Teen(u64),
    Tens(u64),
}

fn number_word(token: &str) -> Option<NumberWord> {
    let find = |table: &[&str]| table.iter().position(|w| *w == token).map(|i| i as u64);
    find(&UNITS)
        .map(NumberWord::Unit)
        .or_else(|| find(&TEENS).map(|i| NumberWord::Teen(10 + i)))
        .or_else(|| find(&TENS).map(|i| NumberWord::Tens(20 + 10 * i)))
}

struct Cursor<'a> {
    tokens: &'a [String],
    /// Offset of `tokens[0]` in the normalized transcript.
    base: usize,
    pos: usize,
    dict: &'a Dictionary,
}

impl Cursor<'_> {
    fn position(&self) -> usize {
        self.base + self.pos
    }

    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    /// Corrects the current token against `candidates` restricted to the
    /// dictionary.
    fn corrected(&self, candidates: &[&str]) -> Option<String> {
        let token = self.peek()?;
        let sub = self.dict.restrict(candidates)?;
        let (word, d) = sub.nearest(token);
        (d <= MAX_CORRECTION_DISTANCE).then(|| word.to_string())
    }

    /// Consumes `optional` fillers (each at most once, in any order) and
    /// then `required`.
    fn expect(&mut self, required: &'static str, optional: &[&'static str], use_case: Option<UseCase>) -> Result<(), CommandError> {
        let mut pending: Vec<&'static str> = optional.to_vec();
        loop {
            let Some(token) = self.peek() else {
                return Err(match use_case {
                    Some(use_case) => CommandError::Incomplete {
                        use_case,
                        missing: use_case.slot_name(),
                    },
                    None => CommandError::Empty,
                });
            };
            let mut candidates = pending.clone();
            candidates.push(required);
            match self.corrected(&candidates) {
                Some(w) if w == required => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(w) => {
                    pending.retain(|p| *p != w);
                    self.pos += 1;
                }
                None => {
                    return Err(CommandError::Unexpected {
                        position: self.position(),
                        token: token.to_string(),
                        expected: required,
                    })
                }
            }
        }
    }

    fn use_case(&mut self) -> Result<UseCase, CommandError> {
        let Some(token) = self.peek() else {
            return Err(CommandError::Empty);
        };
        let word = self
            .corrected(&["parking", "toll", "gas", "fuel", "order"])
            .ok_or_else(|| CommandError::UnknownUseCase {
                position: self.position(),
                token: token.to_string(),
            })?;
        self.pos += 1;
        Ok(match word.as_str() {
            "parking" => UseCase::Parking,
            "toll" => UseCase::Toll,
            "gas" | "fuel" => UseCase::Fuel,
            _ => UseCase::FastFood,
        })
    }

    /// `[number] <digits | number words>`.
    fn slot(&mut self, use_case: UseCase) -> Result<u64, CommandError> {
        let incomplete = CommandError::Incomplete {
            use_case,
            missing: use_case.slot_name(),
        };
        let mut seen_number_word = false;
        loop {
            let token = self.peek().ok_or_else(|| incomplete.clone())?;
            if token.chars().all(|c| c.is_ascii_digit()) {
                let v = token.parse::<u64>().map_err(|_| CommandError::InvalidNumber {
                    position: self.position(),
                    token: token.to_string(),
                })?;
                self.pos += 1;
                return Ok(v);
            }
            if number_word(token).is_some() {
                return self.spelled_number();
            }
            if !seen_number_word && self.corrected(&["number"]).is_some() {
                seen_number_word = true;
                self.pos += 1;
                continue;
            }
            return Err(CommandError::InvalidNumber {
                position: self.position(),
                token: token.to_string(),
            });
        }
    }

    fn spelled_number(&mut self) -> Result<u64, CommandError> {
        let start = self.pos;
        let mut words = Vec::new();
        while let Some(w) = self.peek().and_then(number_word) {
            words.push(w);
            self.pos += 1;
        }
        let invalid = || CommandError::InvalidNumber {
            position: self.base + start,
            token: self.tokens[start..self.pos].join(" "),
        };
        match words.as_slice() {
            [NumberWord::Unit(v)] | [NumberWord::Teen(v)] | [NumberWord::Tens(v)] => Ok(*v),
            [NumberWord::Tens(t), NumberWord::Unit(u)] if *u > 0 => Ok(t + u),
            digits if digits.iter().all(|w| matches!(w, NumberWord::Unit(_))) => {
                Ok(digits.iter().fold(0u64, |acc, w| match w {
                    NumberWord::Unit(u) => acc * 10 + u,
                    _ => acc,
                }))
            }
            _ => Err(invalid()),
        }
    }

    fn finish(&self) -> Result<(), CommandError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(CommandError::TrailingTokens {
                position: self.position(),
                token: t.to_string(),
            }),
        }
    }
}

/// Parses `[hey dashcam] pay for <use case> [slot]`.
///
/// Accepted forms:
///
/// ```text
/// pay for parking [at] space [number] N
/// pay for (gas | fuel) [at] pump [number] N
/// pay for order [number] N
/// pay for toll
/// ```
///
/// `N` is a digit string, a number from "zero" to "ninety nine", or a run of
/// single-digit words ("five two zero eight").
pub fn parse_command(transcript: &str, dict: &Dictionary) -> Result<PaymentCommand, CommandError> {
    let tokens = normalize(transcript);
    let skip = trigger_len(&tokens).unwrap_or(0);
    let body = &tokens[skip..];
    if body.is_empty() {
        return Err(CommandError::Empty);
    }
    let mut cur = Cursor {
        tokens: body,
        base: skip,
        pos: 0,
        dict,
    };
    cur.expect("pay", &[], None)?;
    cur.expect("for", &[], None)?;
    let use_case = cur.use_case()?;
    let slot = match use_case {
        UseCase::Toll => None,
        UseCase::Parking => {
            cur.expect("space", &["at"], Some(use_case))?;
            Some(cur.slot(use_case)?)
        }
        UseCase::Fuel => {
            cur.expect("pump", &["at"], Some(use_case))?;
            Some(cur.slot(use_case)?)
        }
        UseCase::FastFood => Some(cur.slot(use_case)?),
    };
    cur.finish()?;
    Ok(PaymentCommand {
        use_case,
        slot,
        transcript: transcript.to_string(),
    })
}

/// Canonical sentence for a command, including the trigger phrase.
pub fn render_command(use_case: UseCase, slot: Option<u64>) -> String {
    let n = slot.unwrap_or(0);
    match use_case {
        UseCase::Toll => "hey dashcam pay for toll".to_string(),
        UseCase::Parking => format!("hey dashcam pay for parking at space number {n}"),
        UseCase::Fuel => format!("hey dashcam pay for gas at pump number {n}"),
        UseCase::FastFood => format!("hey dashcam pay for order number {n}"),
    }
}
