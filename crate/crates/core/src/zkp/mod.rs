//! Zero-knowledge evidence that a device decrypted its encrypted score
//! correctly and that the score lies strictly above (match) or at-or-below
//! (non-match) its threshold, without revealing the score.

mod commitment;
mod match_proof;
mod transcript;

pub use commitment::{commit, commit_with_randomness, Commitment, Opening};
pub use match_proof::{
    prove_match, range_bits, verify_match, verify_match_bytes, MatchBit, MatchProof, ProofContext,
    ProofError, Threshold, Verdict, NONCE_LEN,
};
pub use transcript::{derive_challenge, Transcript};
