//! Transcript-level trigger detection and payment-command parsing with
//! dictionary-based correction of recognition errors.
//!
//! Speech recognition is outside this crate: inputs are (possibly noisy)
//! transcripts. A token within edit distance 2 of a permitted word is
//! replaced by the closest permitted word before parsing; number slots are
//! never corrected.

mod dictionary;
mod levenshtein;
mod parser;

pub use dictionary::{correct_token, Dictionary, MAX_CORRECTION_DISTANCE};
pub use levenshtein::levenshtein;
pub use parser::{
    detect_trigger, normalize, parse_command, render_command, CommandError, PaymentCommand, Trigger,
    UseCase,
};
