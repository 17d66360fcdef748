//! Non-interactive proof `Z` attached to a device's match decision.
//!
//! Statement: given public key `pk`, ciphertext `(c1, c2)`, threshold `t`
//! and context, the prover knows `(x, S, r)` such that
//!
//! ```text
//! pk = g^x,   c2 = c1^x * g^S,   C_S = g^S * h^r
//! ```
//!
//! and `Δ >= 0`, where `Δ = S - t - 1` for a match and `Δ = t - S` for a
//! non-match. Non-negativity is shown by committing to the `k` bits of `Δ`,
//! proving each commitment opens to 0 or 1 (Cramer-Damgård-Schoenmakers OR
//! proof), and proving that the bit commitments recombine to the commitment
//! of `Δ` derived from `C_S`. All sub-proofs share one Fiat-Shamir challenge
//! computed over the full statement and every announcement.

use alloc::vec::Vec;

use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use crate::codec::{self, DecodeError, Reader};
use crate::dlog::DlogTable;
use crate::embedding::Modality;
use crate::group::{GroupScalar, PrimeGroup};
use crate::he::{self, Ciphertext, PublicKey, SecretKey};

use super::commitment::{commit, Commitment};
use super::transcript::Transcript;

const LABEL: &[u8] = b"dcp/match-proof/v1";

/// Round nonce length in bytes.
pub const NONCE_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("cannot prove: ciphertext does not decrypt within the score bound")]
    CannotProve,
    #[error("threshold {threshold} outside (-{bound}, {bound})")]
    BadThreshold { threshold: i64, bound: i64 },
}

/// Integer score threshold: a match requires `S > t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold(i64);

impl Threshold {
    pub fn new(t: i64, bound: i64) -> Result<Self, ProofError> {
        if t.unsigned_abs() >= bound.unsigned_abs() {
            return Err(ProofError::BadThreshold { threshold: t, bound });
        }
        Ok(Self(t))
    }

    /// `floor(cos * scale^2)`.
    pub fn from_cosine(cos: f64, scale: i64, bound: i64) -> Result<Self, ProofError> {
        Self::new(libm::floor(cos * (scale * scale) as f64) as i64, bound)
    }

    pub fn value(&self) -> i64 {
        self.0
    }

    pub fn is_match(&self, score: i64) -> bool {
        score > self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchBit {
    Match,
    NonMatch,
}

impl MatchBit {
    fn code(self) -> u8 {
        match self {
            MatchBit::NonMatch => 0,
            MatchBit::Match => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(MatchBit::NonMatch),
            1 => Some(MatchBit::Match),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            MatchBit::Match => MatchBit::NonMatch,
            MatchBit::NonMatch => MatchBit::Match,
        }
    }
}

/// Verifier outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Match,
    NonMatch,
    Invalid,
}

/// Binds a proof to one challenge of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProofContext {
    pub device_id: u64,
    pub modality: Modality,
    pub round_nonce: [u8; NONCE_LEN],
}

impl ProofContext {
    fn write_bytes(&self, out: &mut Vec<u8>) {
        codec::put_u64(out, self.device_id);
        codec::put_u8(out, self.modality.code());
        out.extend_from_slice(&self.round_nonce);
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            device_id: r.u64()?,
            modality: Modality::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("modality"))?,
            round_nonce: r.array()?,
        })
    }
}

/// One bit commitment with its OR-proof responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitProof<G: PrimeGroup> {
    pub commitment: G,
    pub challenge0: G::Scalar,
    pub response0: G::Scalar,
    pub response1: G::Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchProof<G: PrimeGroup> {
    pub bit: MatchBit,
    pub threshold: i64,
    pub context: ProofContext,
    /// `C_S`.
    pub score_commitment: Commitment<G>,
    pub challenge: G::Scalar,
    pub z_key: G::Scalar,
    pub z_score: G::Scalar,
    pub z_blind: G::Scalar,
    pub bits: Vec<BitProof<G>>,
    pub z_aggregate: G::Scalar,
}

/// Range width `k = ceil(log2(2 * bound + 1)) + 1`.
pub fn range_bits(bound: i64) -> usize {
    let span = 2 * bound.unsigned_abs() + 1;
    let ceil_log2 = (u64::BITS - (span - 1).leading_zeros()) as usize;
    ceil_log2 + 1
}

struct Statement<'a, G: PrimeGroup> {
    pk: &'a PublicKey<G>,
    ct: &'a Ciphertext<G>,
    threshold: i64,
    bit: MatchBit,
    context: &'a ProofContext,
    k: usize,
}

impl<G: PrimeGroup> Statement<'_, G> {
    fn open_transcript(&self, score_commitment: &G) -> Transcript {
        let mut t = Transcript::new();
        t.append_bytes(G::PARAMS.name.as_bytes());
        t.append_element(self.pk.element());
        t.append_element(&self.ct.c1);
        t.append_element(&self.ct.c2);
        t.append_u64(self.threshold as u64);
        t.append_bytes(&[self.bit.code()]);
        let mut ctx = Vec::new();
        self.context.write_bytes(&mut ctx);
        t.append_bytes(&ctx);
        t.append_u64(self.k as u64);
        t.append_element(score_commitment);
        t
    }

    /// Commitment to `Δ`, derived from `C_S` by the verifier.
    fn delta_commitment(&self, score_commitment: &G) -> G {
        match self.bit {
            MatchBit::Match => score_commitment.op(&G::gen_pow_int(-(self.threshold + 1))),
            MatchBit::NonMatch => G::gen_pow_int(self.threshold).div(score_commitment),
        }
    }
}

fn powers_of_two<G: PrimeGroup>(k: usize) -> Vec<G::Scalar> {
    let two = G::Scalar::from_u64(2);
    let mut acc = G::Scalar::one();
    (0..k)
        .map(|_| {
            let cur = acc;
            acc = acc * two;
            cur
        })
        .collect()
}

/// Decrypts `ct`, decides `S > t`, and proves the decision.
#[allow(clippy::too_many_arguments)]
pub fn prove_match<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    sk: &SecretKey<G>,
    pk: &PublicKey<G>,
    ct: &Ciphertext<G>,
    threshold: Threshold,
    context: ProofContext,
    table: &DlogTable<G>,
    rng: &mut R,
) -> Result<MatchProof<G>, ProofError> {
    let bound = table.bound();
    let score = he::decrypt(sk, ct, table).map_err(|_| ProofError::CannotProve)?;
    let t = Threshold::new(threshold.value(), bound)?.value();
    let bit = if score > t { MatchBit::Match } else { MatchBit::NonMatch };
    let k = range_bits(bound);
    let statement = Statement {
        pk,
        ct,
        threshold: t,
        bit,
        context: &context,
        k,
    };
    let g = G::generator();
    let h = G::commitment_base();

    let (c_s, opening) = commit::<G, _>(score, rng);
    let (delta, rho) = match bit {
        MatchBit::Match => (score - t - 1, opening.randomness),
        MatchBit::NonMatch => (t - score, -opening.randomness),
    };
    debug_assert!(delta >= 0 && (delta as u64) < (1u64 << k));

    let mut transcript = statement.open_transcript(&c_s.0);

    // Decryption consistency announcements.
    let a_x = G::Scalar::random(rng);
    let a_s = G::Scalar::random(rng);
    let a_r = G::Scalar::random(rng);
    transcript.append_element(&G::gen_pow(&a_x));
    transcript.append_element(&ct.c1.pow(&a_x).op(&G::gen_pow(&a_s)));
    transcript.append_element(&G::gen_pow(&a_s).op(&h.pow(&a_r)));

    // Bit commitments and OR-proof announcements.
    struct BitWitness<S> {
        bit: u8,
        blind: S,
        nonce: S,
        sim_challenge: S,
        sim_response: S,
    }
    let mut commitments = Vec::with_capacity(k);
    let mut witnesses = Vec::with_capacity(k);
    let mut blind_sum = G::Scalar::zero();
    for (j, weight) in powers_of_two::<G>(k).into_iter().enumerate() {
        let b = ((delta as u64 >> j) & 1) as u8;
        let blind = G::Scalar::random(rng);
        let c_j = G::gen_pow_int(b as i64).op(&h.pow(&blind));
        let nonce = G::Scalar::random(rng);
        let sim_challenge = G::Scalar::random(rng);
        let sim_response = G::Scalar::random(rng);
        // Y_0 = C_j, Y_1 = C_j / g; the branch 1 - b is simulated.
        let y_sim = if b == 0 { c_j.div(&g) } else { c_j };
        let a_real = h.pow(&nonce);
        let a_sim = h.pow(&sim_response).op(&y_sim.pow(&-sim_challenge));
        let (a0, a1) = if b == 0 { (a_real, a_sim) } else { (a_sim, a_real) };
        transcript.append_element(&c_j);
        transcript.append_element(&a0);
        transcript.append_element(&a1);
        blind_sum = blind_sum + weight * blind;
        commitments.push(c_j);
        witnesses.push(BitWitness {
            bit: b,
            blind,
            nonce,
            sim_challenge,
            sim_response,
        });
    }

    // Recombination: C_Δ / prod C_j^(2^j) = h^(rho - sum 2^j r_j).
    let a_agg = G::Scalar::random(rng);
    transcript.append_element(&h.pow(&a_agg));

    let e = transcript.challenge::<G>(LABEL);
    let x = *sk_scalar(sk);
    let s = G::Scalar::from_i64(score);

    let bits = commitments
        .into_iter()
        .zip(witnesses)
        .map(|(commitment, w)| {
            let real_challenge = e - w.sim_challenge;
            let real_response = w.nonce + real_challenge * w.blind;
            if w.bit == 0 {
                BitProof {
                    commitment,
                    challenge0: real_challenge,
                    response0: real_response,
                    response1: w.sim_response,
                }
            } else {
                BitProof {
                    commitment,
                    challenge0: w.sim_challenge,
                    response0: w.sim_response,
                    response1: real_response,
                }
            }
        })
        .collect();

    Ok(MatchProof {
        bit,
        threshold: t,
        context,
        score_commitment: c_s,
        challenge: e,
        z_key: a_x + e * x,
        z_score: a_s + e * s,
        z_blind: a_r + e * opening.randomness,
        bits,
        z_aggregate: a_agg + e * (rho - blind_sum),
    })
}

fn sk_scalar<G: PrimeGroup>(sk: &SecretKey<G>) -> &G::Scalar {
    sk.scalar()
}

/// Checks `proof` against the verifier's own view of the statement. Never
/// panics; any inconsistency yields [`Verdict::Invalid`].
pub fn verify_match<G: PrimeGroup>(
    pk: &PublicKey<G>,
    ct: &Ciphertext<G>,
    threshold: Threshold,
    proof: &MatchProof<G>,
    context: &ProofContext,
    bound: i64,
) -> Verdict {
    let k = range_bits(bound);
    if proof.threshold != threshold.value()
        || threshold.value().unsigned_abs() >= bound.unsigned_abs()
        || proof.context != *context
        || proof.bits.len() != k
    {
        return Verdict::Invalid;
    }
    let statement = Statement {
        pk,
        ct,
        threshold: proof.threshold,
        bit: proof.bit,
        context,
        k,
    };
    let g = G::generator();
    let h = G::commitment_base();
    let e = proof.challenge;
    let neg_e = -e;
    let c_s = proof.score_commitment.0;

    let mut transcript = statement.open_transcript(&c_s);
    transcript.append_element(&G::multi_pow_public(
        &[g, *pk.element()],
        &[proof.z_key, neg_e],
    ));
    transcript.append_element(&G::multi_pow_public(
        &[ct.c1, g, ct.c2],
        &[proof.z_key, proof.z_score, neg_e],
    ));
    transcript.append_element(&G::multi_pow_public(
        &[g, h, c_s],
        &[proof.z_score, proof.z_blind, neg_e],
    ));

    let weights = powers_of_two::<G>(k);
    let g_inv = g.invert();
    for bp in &proof.bits {
        let challenge1 = e - bp.challenge0;
        let a0 = G::multi_pow_public(&[h, bp.commitment], &[bp.response0, -bp.challenge0]);
        let a1 = G::multi_pow_public(&[h, bp.commitment.op(&g_inv)], &[bp.response1, -challenge1]);
        transcript.append_element(&bp.commitment);
        transcript.append_element(&a0);
        transcript.append_element(&a1);
    }

    let recombined = G::multi_pow_public(
        &proof.bits.iter().map(|b| b.commitment).collect::<Vec<_>>(),
        &weights,
    );
    let residual = statement.delta_commitment(&c_s).div(&recombined);
    transcript.append_element(&G::multi_pow_public(&[h, residual], &[proof.z_aggregate, neg_e]));

    if transcript.challenge::<G>(LABEL) != e {
        return Verdict::Invalid;
    }
    match proof.bit {
        MatchBit::Match => Verdict::Match,
        MatchBit::NonMatch => Verdict::NonMatch,
    }
}

/// [`verify_match`] over serialized proof bytes.
pub fn verify_match_bytes<G: PrimeGroup>(
    pk: &PublicKey<G>,
    ct: &Ciphertext<G>,
    threshold: Threshold,
    proof: &[u8],
    context: &ProofContext,
    bound: i64,
) -> Verdict {
    match MatchProof::<G>::from_bytes(proof) {
        Ok(p) => verify_match(pk, ct, threshold, &p, context, bound),
        Err(_) => Verdict::Invalid,
    }
}

impl<G: PrimeGroup> MatchProof<G> {
    /// Encoded size for a given range width.
    pub fn encoded_len(k: usize) -> usize {
        let s = G::Scalar::LEN;
        1 + 8 + 8 + 1 + NONCE_LEN + G::ELEMENT_LEN + 4 * s + 2 + k * (G::ELEMENT_LEN + 3 * s) + s
    }

    /// `bit ‖ threshold ‖ context ‖ C_S ‖ e ‖ z_x ‖ z_S ‖ z_r ‖ k (u16) ‖
    /// k × (C_j ‖ e_j0 ‖ z_j0 ‖ z_j1) ‖ z_agg`.
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        codec::put_u8(out, self.bit.code());
        codec::put_i64(out, self.threshold);
        self.context.write_bytes(out);
        self.score_commitment.0.write_bytes(out);
        for s in [&self.challenge, &self.z_key, &self.z_score, &self.z_blind] {
            s.write_bytes(out);
        }
        codec::put_u16(out, self.bits.len() as u16);
        for b in &self.bits {
            b.commitment.write_bytes(out);
            b.challenge0.write_bytes(out);
            b.response0.write_bytes(out);
            b.response1.write_bytes(out);
        }
        self.z_aggregate.write_bytes(out);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(self.bits.len()));
        self.write_bytes(&mut out);
        out
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let bit = MatchBit::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("match bit"))?;
        let threshold = r.i64()?;
        let context = ProofContext::read(r)?;
        let score_commitment = Commitment(r.element::<G>()?);
        let challenge = r.scalar::<G>()?;
        let z_key = r.scalar::<G>()?;
        let z_score = r.scalar::<G>()?;
        let z_blind = r.scalar::<G>()?;
        let k = r.u16()? as usize;
        let per_bit = G::ELEMENT_LEN + 3 * G::Scalar::LEN;
        if r.remaining() < k * per_bit {
            return Err(DecodeError::Truncated {
                needed: k * per_bit - r.remaining(),
            });
        }
        let bits = (0..k)
            .map(|_| {
                Ok(BitProof {
                    commitment: r.element::<G>()?,
                    challenge0: r.scalar::<G>()?,
                    response0: r.scalar::<G>()?,
                    response1: r.scalar::<G>()?,
                })
            })
            .collect::<Result<Vec<_>, DecodeError>>()?;
        let z_aggregate = r.scalar::<G>()?;
        Ok(Self {
            bit,
            threshold,
            context,
            score_commitment,
            challenge,
            z_key,
            z_score,
            z_blind,
            bits,
            z_aggregate,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let p = Self::read(&mut r)?;
        r.finish()?;
        Ok(p)
    }
}
