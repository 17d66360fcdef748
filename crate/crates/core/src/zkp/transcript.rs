use alloc::vec::Vec;

use sha2::{Digest, Sha512};

use crate::group::{GroupScalar, PrimeGroup};

/// Hash-to-scalar: `SHA-512(len(label) as u32 ‖ label ‖ transcript)` reduced
/// modulo the group order.
pub fn derive_challenge<G: PrimeGroup>(label: &[u8], transcript: &[u8]) -> G::Scalar {
    let mut hasher = Sha512::new();
    hasher.update((label.len() as u32).to_be_bytes());
    hasher.update(label);
    hasher.update(transcript);
    let wide: [u8; 64] = hasher.finalize().into();
    G::Scalar::from_wide(&wide)
}

/// Append-only canonical byte log fed to [`derive_challenge`].
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    bytes: Vec<u8>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append_element<G: PrimeGroup>(&mut self, e: &G) {
        e.write_bytes(&mut self.bytes);
    }

    pub fn append_bytes(&mut self, b: &[u8]) {
        self.bytes.extend_from_slice(b);
    }

    pub fn append_u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_be_bytes());
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn challenge<G: PrimeGroup>(&self, label: &[u8]) -> G::Scalar {
        derive_challenge::<G>(label, &self.bytes)
    }
}
