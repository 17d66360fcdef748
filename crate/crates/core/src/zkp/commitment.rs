use rand_core::{CryptoRng, RngCore};

use crate::group::{GroupScalar, PrimeGroup};

/// Pedersen commitment `C = g^v * h^r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commitment<G: PrimeGroup>(pub G);

/// Prover-side opening of a [`Commitment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Opening<G: PrimeGroup> {
    pub value: i64,
    pub randomness: G::Scalar,
}

pub fn commit_with_randomness<G: PrimeGroup>(v: i64, r: G::Scalar) -> (Commitment<G>, Opening<G>) {
    let c = G::gen_pow_int(v).op(&G::commitment_base().pow(&r));
    (Commitment(c), Opening { value: v, randomness: r })
}

pub fn commit<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    v: i64,
    rng: &mut R,
) -> (Commitment<G>, Opening<G>) {
    commit_with_randomness(v, G::Scalar::random(rng))
}

impl<G: PrimeGroup> Commitment<G> {
    pub fn verify_opening(&self, opening: &Opening<G>) -> bool {
        commit_with_randomness::<G>(opening.value, opening.randomness).0 == *self
    }
}
