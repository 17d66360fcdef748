//! Exponent-encoded ElGamal: additively homomorphic encryption of small
//! signed integers with plaintext-scalar multiplication.
//!
//! `Enc(v) = (g^r, pk^r * g^v)`. Decryption recovers `g^v` and solves the
//! bounded discrete log with a [`DlogTable`].

use alloc::vec::Vec;
use core::fmt;

use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use crate::codec::{self, DecodeError, Reader};
use crate::dlog::DlogTable;
use crate::embedding::{Modality, QuantizedTemplate};
use crate::group::{GroupScalar, PrimeGroup};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("plaintext {value} outside bound {bound}")]
    PlaintextOutOfRange { value: i64, bound: i64 },
    #[error("decrypted value outside [-{bound}, {bound}]")]
    DecryptionOutOfRange { bound: i64 },
    #[error("dimension mismatch: encrypted {encrypted} vs probe {probe}")]
    DimensionMismatch { encrypted: usize, probe: usize },
    #[error("modality mismatch: encrypted {encrypted} vs probe {probe}")]
    ModalityMismatch { encrypted: Modality, probe: Modality },
    #[error("scalar multiplier {0} exceeds template scale")]
    ScalarOutOfRange(i64),
}

/// Public encryption key `pk = g^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublicKey<G: PrimeGroup>(G);

impl<G: PrimeGroup> PublicKey<G> {
    pub fn element(&self) -> &G {
        &self.0
    }

    pub fn from_element(e: G) -> Self {
        Self(e)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }
}

/// Secret scalar `x` in `[1, q - 1]`.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey<G: PrimeGroup>(G::Scalar);

impl<G: PrimeGroup> fmt::Debug for SecretKey<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl<G: PrimeGroup> SecretKey<G> {
    pub(crate) fn scalar(&self) -> &G::Scalar {
        &self.0
    }

    /// Canonical scalar bytes. Only used by leak scanners in tests and tools.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.0.write_bytes(&mut out);
        out
    }
}

#[derive(Debug, Clone)]
pub struct KeyPair<G: PrimeGroup> {
    secret: SecretKey<G>,
    public: PublicKey<G>,
}

impl<G: PrimeGroup> KeyPair<G> {
    pub fn from_secret(x: G::Scalar) -> Option<Self> {
        if x.is_zero() {
            return None;
        }
        Some(Self {
            public: PublicKey(G::gen_pow(&x)),
            secret: SecretKey(x),
        })
    }

    pub fn public(&self) -> &PublicKey<G> {
        &self.public
    }

    pub fn secret(&self) -> &SecretKey<G> {
        &self.secret
    }
}

pub fn keygen<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> KeyPair<G> {
    loop {
        if let Some(kp) = KeyPair::from_secret(G::Scalar::random(rng)) {
            return kp;
        }
    }
}

/// ElGamal ciphertext `(c1, c2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ciphertext<G: PrimeGroup> {
    pub c1: G,
    pub c2: G,
}

impl<G: PrimeGroup> Ciphertext<G> {
    pub const LEN: usize = 2 * G::ELEMENT_LEN;

    /// Encryption with caller-chosen randomness.
    pub fn with_randomness(pk: &PublicKey<G>, v: i64, r: &G::Scalar) -> Self {
        Self {
            c1: G::gen_pow(r),
            c2: pk.0.pow(r).op(&G::gen_pow_int(v)),
        }
    }

    /// Homomorphic addition.
    pub fn add(&self, other: &Self) -> Self {
        Self {
            c1: self.c1.op(&other.c1),
            c2: self.c2.op(&other.c2),
        }
    }

    /// Homomorphic multiplication by a plaintext integer.
    pub fn scalar_mul(&self, k: i64) -> Self {
        let k = G::Scalar::from_i64(k);
        Self {
            c1: self.c1.pow(&k),
            c2: self.c2.pow(&k),
        }
    }

    /// Fresh-looking ciphertext of the same plaintext.
    pub fn rerandomize<R: RngCore + CryptoRng + ?Sized>(&self, pk: &PublicKey<G>, rng: &mut R) -> Self {
        self.add(&Self::with_randomness(pk, 0, &G::Scalar::random(rng)))
    }

    /// `c1 ‖ c2`.
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        self.c1.write_bytes(out);
        self.c2.write_bytes(out);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::LEN);
        self.write_bytes(&mut out);
        out
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            c1: r.element()?,
            c2: r.element()?,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let ct = Self::read(&mut r)?;
        r.finish()?;
        Ok(ct)
    }
}

pub fn encrypt<G: PrimeGroup, R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicKey<G>,
    v: i64,
    bound: i64,
    rng: &mut R,
) -> Result<Ciphertext<G>, CryptoError> {
    if v.unsigned_abs() > bound.unsigned_abs() {
        return Err(CryptoError::PlaintextOutOfRange { value: v, bound });
    }
    Ok(Ciphertext::with_randomness(pk, v, &G::Scalar::random(rng)))
}

/// `c2 / c1^x = g^v`.
pub(crate) fn decrypt_to_element<G: PrimeGroup>(sk: &SecretKey<G>, ct: &Ciphertext<G>) -> G {
    ct.c2.div(&ct.c1.pow(sk.scalar()))
}

pub fn decrypt<G: PrimeGroup>(
    sk: &SecretKey<G>,
    ct: &Ciphertext<G>,
    table: &DlogTable<G>,
) -> Result<i64, CryptoError> {
    table
        .solve(&decrypt_to_element(sk, ct))
        .ok_or(CryptoError::DecryptionOutOfRange { bound: table.bound() })
}

/// Element-wise encryption of a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedTemplate<G: PrimeGroup> {
    pub owner: u64,
    pub modality: Modality,
    pub cts: Vec<Ciphertext<G>>,
}

impl<G: PrimeGroup> EncryptedTemplate<G> {
    pub fn encrypt<R: RngCore + CryptoRng + ?Sized>(
        pk: &PublicKey<G>,
        owner: u64,
        template: &QuantizedTemplate,
        rng: &mut R,
    ) -> Self {
        let cts = template
            .values()
            .iter()
            .map(|v| Ciphertext::with_randomness(pk, *v, &G::Scalar::random(rng)))
            .collect();
        Self {
            owner,
            modality: template.modality(),
            cts,
        }
    }

    pub fn dimension(&self) -> usize {
        self.cts.len()
    }

    /// `d (u32) ‖ modality (u8) ‖ ciphertexts`. The owner travels separately.
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        codec::put_u32(out, self.cts.len() as u32);
        codec::put_u8(out, self.modality.code());
        for ct in &self.cts {
            ct.write_bytes(out);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.cts.len() * Ciphertext::<G>::LEN);
        self.write_bytes(&mut out);
        out
    }

    pub(crate) fn read(r: &mut Reader<'_>, owner: u64) -> Result<Self, DecodeError> {
        let d = r.u32()? as usize;
        let modality = Modality::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("modality"))?;
        let needed = d
            .checked_mul(Ciphertext::<G>::LEN)
            .ok_or(DecodeError::InvalidValue("dimension"))?;
        if r.remaining() < needed {
            return Err(DecodeError::Truncated {
                needed: needed - r.remaining(),
            });
        }
        let cts = (0..d)
            .map(|_| Ciphertext::read(r))
            .collect::<Result<_, _>>()?;
        Ok(Self { owner, modality, cts })
    }

    pub fn from_bytes(bytes: &[u8], owner: u64) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let t = Self::read(&mut r, owner)?;
        r.finish()?;
        Ok(t)
    }
}

/// `Enc(<ET, AT>)` from `Enc(ET)` and plaintext probe `AT`.
pub fn encrypted_inner_product<G: PrimeGroup>(
    et: &EncryptedTemplate<G>,
    at: &QuantizedTemplate,
) -> Result<Ciphertext<G>, CryptoError> {
    if et.dimension() != at.dimension() {
        return Err(CryptoError::DimensionMismatch {
            encrypted: et.dimension(),
            probe: at.dimension(),
        });
    }
    if et.modality != at.modality() {
        return Err(CryptoError::ModalityMismatch {
            encrypted: et.modality,
            probe: at.modality(),
        });
    }
    let c1s: Vec<G> = et.cts.iter().map(|c| c.c1).collect();
    let c2s: Vec<G> = et.cts.iter().map(|c| c.c2).collect();
    Ok(Ciphertext {
        c1: G::multi_pow_small(&c1s, at.values()),
        c2: G::multi_pow_small(&c2s, at.values()),
    })
}

/// Serialized encrypted template size over serialized plaintext template size.
pub fn ciphertext_expansion<G: PrimeGroup>(et: &EncryptedTemplate<G>, scale: i64) -> f64 {
    let d = et.dimension();
    let plain = 9 + d * QuantizedTemplate::element_width(scale);
    et.to_bytes().len() as f64 / plain as f64
}

/// Per-coordinate expansion, ignoring headers: `2 * element_len / element_width`.
pub fn coordinate_expansion<G: PrimeGroup>(scale: i64) -> f64 {
    (2 * G::ELEMENT_LEN) as f64 / QuantizedTemplate::element_width(scale) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ModpGroup, Ristretto};
    use alloc::vec;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const BOUND: i64 = 128 * 127 * 127;

    fn setup() -> (KeyPair<ModpGroup>, DlogTable<ModpGroup>, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        (keygen(&mut rng), DlogTable::new(BOUND), rng)
    }

    #[test]
    fn keygen_is_seed_deterministic() {
        let a = keygen::<ModpGroup, _>(&mut ChaCha20Rng::seed_from_u64(1));
        let b = keygen::<ModpGroup, _>(&mut ChaCha20Rng::seed_from_u64(1));
        let c = keygen::<ModpGroup, _>(&mut ChaCha20Rng::seed_from_u64(2));
        assert_eq!(a.secret(), b.secret());
        assert_ne!(a.secret(), c.secret());
        assert_eq!(*a.public().element(), ModpGroup::generator().pow(a.secret().scalar()));
    }

    #[test]
    fn encrypt_decrypt_examples() {
        let (kp, table, mut rng) = setup();
        for v in [0, -5, 16129, 42, -BOUND, BOUND] {
            let ct = encrypt(kp.public(), v, BOUND, &mut rng).unwrap();
            assert_eq!(decrypt(kp.secret(), &ct, &table), Ok(v));
        }
        assert_eq!(
            encrypt(kp.public(), BOUND + 1, BOUND, &mut rng),
            Err(CryptoError::PlaintextOutOfRange { value: BOUND + 1, bound: BOUND })
        );
    }

    #[test]
    fn small_bound_table() {
        let (kp, _, mut rng) = setup();
        let table = DlogTable::new(100);
        let ct = encrypt(kp.public(), 42, 100, &mut rng).unwrap();
        assert_eq!(decrypt(kp.secret(), &ct, &table), Ok(42));
        let far = encrypt(kp.public(), 1000, BOUND, &mut rng).unwrap();
        assert_eq!(
            decrypt(kp.secret(), &far, &table),
            Err(CryptoError::DecryptionOutOfRange { bound: 100 })
        );
    }

    #[test]
    fn fresh_randomness() {
        let (kp, _, mut rng) = setup();
        let a = encrypt(kp.public(), 7, BOUND, &mut rng).unwrap();
        let b = encrypt(kp.public(), 7, BOUND, &mut rng).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn homomorphic_ops() {
        let (kp, table, mut rng) = setup();
        let pk = kp.public();
        let three = encrypt(pk, 3, BOUND, &mut rng).unwrap();
        let four = encrypt(pk, 4, BOUND, &mut rng).unwrap();
        assert_eq!(decrypt(kp.secret(), &three.add(&four), &table), Ok(7));
        let six = encrypt(pk, 6, BOUND, &mut rng).unwrap();
        assert_eq!(decrypt(kp.secret(), &six.scalar_mul(-2), &table), Ok(-12));
    }

    #[test]
    fn tampering_shifts_plaintext() {
        let (kp, table, mut rng) = setup();
        let mut ct = encrypt(kp.public(), 10, BOUND, &mut rng).unwrap();
        ct.c2 = ct.c2.op(&ModpGroup::generator());
        assert_eq!(decrypt(kp.secret(), &ct, &table), Ok(11));
        let mut edge = encrypt(kp.public(), BOUND, BOUND, &mut rng).unwrap();
        edge.c2 = edge.c2.op(&ModpGroup::generator());
        assert!(decrypt(kp.secret(), &edge, &table).is_err());
    }

    #[test]
    fn inner_product_basis_and_zero() {
        let (kp, table, mut rng) = setup();
        let mut basis = vec![0; 128];
        basis[0] = 127;
        let et_plain = QuantizedTemplate::from_values(Modality::Face, 127, basis.clone()).unwrap();
        let et = EncryptedTemplate::encrypt(kp.public(), 1, &et_plain, &mut rng);
        let zero = QuantizedTemplate::zeros(Modality::Face, 127, 128).unwrap();
        let ct = encrypted_inner_product(&et, &zero).unwrap();
        assert_eq!(decrypt(kp.secret(), &ct, &table), Ok(0));
        let ct = encrypted_inner_product(&et, &et_plain).unwrap();
        assert_eq!(decrypt(kp.secret(), &ct, &table), Ok(16129));
    }

    #[test]
    fn inner_product_shape_checks() {
        let (kp, _, mut rng) = setup();
        let t = QuantizedTemplate::from_values(Modality::Face, 127, vec![1, 2, 3]).unwrap();
        let et = EncryptedTemplate::encrypt(kp.public(), 1, &t, &mut rng);
        let short = QuantizedTemplate::from_values(Modality::Face, 127, vec![1, 2]).unwrap();
        assert!(matches!(
            encrypted_inner_product(&et, &short),
            Err(CryptoError::DimensionMismatch { .. })
        ));
        let voice = QuantizedTemplate::from_values(Modality::Voice, 127, vec![1, 2, 3]).unwrap();
        assert!(matches!(
            encrypted_inner_product(&et, &voice),
            Err(CryptoError::ModalityMismatch { .. })
        ));
    }

    #[test]
    fn encrypted_template_bytes() {
        let (kp, _, mut rng) = setup();
        let t = QuantizedTemplate::from_values(Modality::Voice, 127, vec![1, -2, 3]).unwrap();
        let et = EncryptedTemplate::encrypt(kp.public(), 9, &t, &mut rng);
        let bytes = et.to_bytes();
        assert_eq!(bytes.len(), 5 + 3 * 16);
        assert_eq!(EncryptedTemplate::from_bytes(&bytes, 9).unwrap(), et);
        assert!(EncryptedTemplate::<ModpGroup>::from_bytes(&bytes[..bytes.len() - 1], 9).is_err());
    }

    #[test]
    fn expansion_factors() {
        assert_eq!(coordinate_expansion::<Ristretto>(127), 64.0);
        assert_eq!(coordinate_expansion::<ModpGroup>(127), 16.0);
        let (kp, _, mut rng) = setup();
        let t = QuantizedTemplate::zeros(Modality::Face, 127, 128).unwrap();
        let et = EncryptedTemplate::encrypt(kp.public(), 1, &t, &mut rng);
        let f = ciphertext_expansion(&et, 127);
        assert!((1.0..16.0).contains(&f));
    }
}
