use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

use super::{GroupParams, GroupScalar, PrimeGroup, SecurityLevel};

/// Safe prime `p = 2q + 1`.
pub const MODP_P: u64 = 4_611_686_018_427_377_339;
/// Prime order of the quadratic-residue subgroup.
pub const MODP_Q: u64 = 2_305_843_009_213_688_669;

const H_SEED: &[u8] = b"dcp/modp/commitment-base";

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

fn reduce_wide(bytes: &[u8], m: u64) -> u64 {
    bytes
        .iter()
        .fold(0u128, |acc, b| ((acc << 8) | *b as u128) % m as u128) as u64
}

/// Scalar modulo [`MODP_Q`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModpScalar(u64);

impl ModpScalar {
    pub fn value(&self) -> u64 {
        self.0
    }
}

impl Add for ModpScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(((self.0 as u128 + rhs.0 as u128) % MODP_Q as u128) as u64)
    }
}

impl Sub for ModpScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for ModpScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(mul_mod(self.0, rhs.0, MODP_Q))
    }
}

impl Neg for ModpScalar {
    type Output = Self;
    fn neg(self) -> Self {
        if self.0 == 0 {
            self
        } else {
            Self(MODP_Q - self.0)
        }
    }
}

impl GroupScalar for ModpScalar {
    const LEN: usize = 8;

    fn zero() -> Self {
        Self(0)
    }

    fn one() -> Self {
        Self(1)
    }

    fn from_u64(v: u64) -> Self {
        Self(v % MODP_Q)
    }

    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Self::from_wide(&wide)
    }

    fn from_wide(bytes: &[u8; 64]) -> Self {
        Self(reduce_wide(bytes, MODP_Q))
    }

    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0.to_be_bytes());
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let raw = u64::from_be_bytes(bytes.try_into().ok()?);
        (raw < MODP_Q).then_some(Self(raw))
    }
}

/// Element of the quadratic-residue subgroup of `Z_p^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModpGroup(u64);

impl ModpGroup {
    pub fn value(&self) -> u64 {
        self.0
    }

    fn is_member(v: u64) -> bool {
        v != 0 && v < MODP_P && pow_mod(v, MODP_Q, MODP_P) == 1
    }
}

impl PrimeGroup for ModpGroup {
    type Scalar = ModpScalar;

    const PARAMS: GroupParams = GroupParams {
        name: "modp-62",
        level: SecurityLevel::Test,
        order_bits: 61,
        element_len: 8,
        scalar_len: 8,
    };
    const ELEMENT_LEN: usize = 8;

    fn identity() -> Self {
        Self(1)
    }

    fn generator() -> Self {
        // 4 = 2^2 is a residue != 1, hence generates the prime-order subgroup.
        Self(4)
    }

    fn commitment_base() -> Self {
        let digest = Sha512::digest(H_SEED);
        let root = reduce_wide(&digest, MODP_P);
        Self(mul_mod(root, root, MODP_P))
    }

    fn op(&self, other: &Self) -> Self {
        Self(mul_mod(self.0, other.0, MODP_P))
    }

    fn invert(&self) -> Self {
        // x^(q-1) = x^-1 inside the order-q subgroup.
        Self(pow_mod(self.0, MODP_Q - 1, MODP_P))
    }

    fn pow(&self, e: &ModpScalar) -> Self {
        Self(pow_mod(self.0, e.0, MODP_P))
    }

    fn multi_pow_small(bases: &[Self], exps: &[i64]) -> Self {
        let mut pos = 1u64;
        let mut neg = 1u64;
        for (b, &e) in bases.iter().zip(exps) {
            let term = pow_mod(b.0, e.unsigned_abs(), MODP_P);
            if e >= 0 {
                pos = mul_mod(pos, term, MODP_P);
            } else {
                neg = mul_mod(neg, term, MODP_P);
            }
        }
        Self(pos).div(&Self(neg))
    }

    fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0.to_be_bytes());
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let raw = u64::from_be_bytes(bytes.try_into().ok()?);
        Self::is_member(raw).then_some(Self(raw))
    }

    fn table_key(&self) -> u64 {
        self.0
    }
}
