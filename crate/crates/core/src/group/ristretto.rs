use alloc::vec::Vec;

use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use rand_core::{CryptoRng, RngCore};
use sha2::Sha512;

use super::{GroupParams, GroupScalar, PrimeGroup, SecurityLevel};

const H_SEED: &[u8] = b"dcp/ristretto255/commitment-base";

impl GroupScalar for Scalar {
    const LEN: usize = 32;

    fn zero() -> Self {
        Scalar::ZERO
    }

    fn one() -> Self {
        Scalar::ONE
    }

    fn from_u64(v: u64) -> Self {
        Scalar::from(v)
    }

    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_mod_order_wide(&wide)
    }

    fn from_wide(bytes: &[u8; 64]) -> Self {
        Scalar::from_bytes_mod_order_wide(bytes)
    }

    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.as_bytes());
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let raw: [u8; 32] = bytes.try_into().ok()?;
        Option::from(Scalar::from_canonical_bytes(raw))
    }
}

/// Ristretto255 group element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ristretto(pub RistrettoPoint);

impl PrimeGroup for Ristretto {
    type Scalar = Scalar;

    const PARAMS: GroupParams = GroupParams {
        name: "ristretto255",
        level: SecurityLevel::Secure,
        order_bits: 253,
        element_len: 32,
        scalar_len: 32,
    };
    const ELEMENT_LEN: usize = 32;

    fn identity() -> Self {
        Self(RistrettoPoint::identity())
    }

    fn generator() -> Self {
        Self(RISTRETTO_BASEPOINT_POINT)
    }

    fn commitment_base() -> Self {
        Self(RistrettoPoint::hash_from_bytes::<Sha512>(H_SEED))
    }

    fn op(&self, other: &Self) -> Self {
        Self(self.0 + other.0)
    }

    fn invert(&self) -> Self {
        Self(-self.0)
    }

    fn pow(&self, e: &Scalar) -> Self {
        Self(self.0 * e)
    }

    fn gen_pow(e: &Scalar) -> Self {
        Self(RISTRETTO_BASEPOINT_TABLE * e)
    }

    fn multi_pow_small(bases: &[Self], exps: &[i64]) -> Self {
        let scalars = exps.iter().map(|e| Scalar::from_i64(*e));
        let points = bases.iter().map(|b| b.0);
        Self(RistrettoPoint::vartime_multiscalar_mul(scalars, points))
    }

    fn multi_pow_public(bases: &[Self], exps: &[Scalar]) -> Self {
        Self(RistrettoPoint::vartime_multiscalar_mul(
            exps.iter(),
            bases.iter().map(|b| b.0),
        ))
    }

    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.0.compress().as_bytes());
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        CompressedRistretto::from_slice(bytes)
            .ok()?
            .decompress()
            .map(Self)
    }

    fn table_key(&self) -> u64 {
        let c = self.0.compress();
        u64::from_be_bytes(c.as_bytes()[..8].try_into().expect("8 bytes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commitment_base_is_distinct() {
        assert_ne!(Ristretto::commitment_base(), Ristretto::generator());
        assert_ne!(Ristretto::commitment_base(), Ristretto::identity());
    }

    #[test]
    fn multi_pow_matches_loop() {
        let g = Ristretto::generator();
        let h = Ristretto::commitment_base();
        let fast = Ristretto::multi_pow_small(&[g, h], &[-3, 11]);
        let slow = g.pow(&Scalar::from_i64(-3)).op(&h.pow(&Scalar::from(11u64)));
        assert_eq!(fast, slow);
    }

    #[test]
    fn encoding_roundtrip() {
        let p = Ristretto::gen_pow(&Scalar::from(99u64));
        assert_eq!(Ristretto::from_bytes(&p.to_bytes()), Some(p));
        assert!(Ristretto::from_bytes(&[0xffu8; 32]).is_none());
    }
}
