//! Prime-order cyclic groups used by the encryption and proof layers.
//!
//! Groups are written multiplicatively: [`PrimeGroup::op`] is the group law
//! and [`PrimeGroup::pow`] is exponentiation by a scalar modulo the group
//! order. Two instantiations exist:
//!
//! * [`ModpGroup`]: the order-`q` subgroup of quadratic residues modulo a
//!   62-bit safe prime `p = 2q + 1`. Fast and insecure, for tests.
//! * [`Ristretto`]: the Ristretto255 prime-order group (~128-bit security).

use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

mod modp;
mod ristretto;

pub use modp::{ModpGroup, ModpScalar};
pub use ristretto::Ristretto;

/// Parameter profile tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecurityLevel {
    /// Small group, discrete log is feasible. Never use outside tests.
    Test,
    /// Discrete log infeasible (group order ~2^252).
    Secure,
}

/// Description of a group instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupParams {
    pub name: &'static str,
    pub level: SecurityLevel,
    pub order_bits: u32,
    pub element_len: usize,
    pub scalar_len: usize,
}

/// Scalars modulo the group order.
pub trait GroupScalar:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Encoded length in bytes.
    const LEN: usize;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn from_i64(v: i64) -> Self {
        if v < 0 {
            -Self::from_u64(v.unsigned_abs())
        } else {
            Self::from_u64(v as u64)
        }
    }
    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self;
    /// Reduces 64 uniformly distributed bytes to a scalar.
    fn from_wide(bytes: &[u8; 64]) -> Self;
    fn write_bytes(&self, out: &mut Vec<u8>);
    /// Accepts only canonical encodings of exactly `LEN` bytes.
    fn from_bytes(bytes: &[u8]) -> Option<Self>;
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

/// A cyclic group of prime order with two independent generators.
pub trait PrimeGroup: Copy + Eq + Debug + Send + Sync + 'static {
    type Scalar: GroupScalar;

    const PARAMS: GroupParams;
    const ELEMENT_LEN: usize;

    fn identity() -> Self;
    /// Encryption generator `g`.
    fn generator() -> Self;
    /// Commitment generator `h`, with unknown discrete log relative to `g`.
    fn commitment_base() -> Self;

    fn op(&self, other: &Self) -> Self;
    fn invert(&self) -> Self;
    fn pow(&self, e: &Self::Scalar) -> Self;

    fn div(&self, other: &Self) -> Self {
        self.op(&other.invert())
    }

    /// `g^e`; groups with precomputed tables override this.
    fn gen_pow(e: &Self::Scalar) -> Self {
        Self::generator().pow(e)
    }

    /// `g^v` for a small signed integer.
    fn gen_pow_int(v: i64) -> Self {
        Self::gen_pow(&Self::Scalar::from_i64(v))
    }

    /// `prod bases[i]^exps[i]` for small signed exponents.
    fn multi_pow_small(bases: &[Self], exps: &[i64]) -> Self {
        bases
            .iter()
            .zip(exps)
            .fold(Self::identity(), |acc, (b, e)| {
                acc.op(&b.pow(&Self::Scalar::from_i64(*e)))
            })
    }

    /// `prod bases[i]^exps[i]`; may run in variable time, so only call it
    /// on public inputs.
    fn multi_pow_public(bases: &[Self], exps: &[Self::Scalar]) -> Self {
        bases
            .iter()
            .zip(exps)
            .fold(Self::identity(), |acc, (b, e)| acc.op(&b.pow(e)))
    }

    fn write_bytes(&self, out: &mut Vec<u8>);
    /// Accepts only canonical encodings of group members.
    fn from_bytes(bytes: &[u8]) -> Option<Self>;

    /// 64-bit digest of the canonical encoding, used as a lookup key.
    fn table_key(&self) -> u64;

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::ELEMENT_LEN);
        self.write_bytes(&mut out);
        out
    }
}
