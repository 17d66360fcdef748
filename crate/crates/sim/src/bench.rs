//! Wall-clock cost of one device pair: key generation plus one complete
//! encrypted comparison.

use std::time::Instant;

use dashcam_pay_core::dlog::DlogTable;
use dashcam_pay_core::embedding::{quantize, score_bound, Embedding, Modality};
use dashcam_pay_core::group::{ModpGroup, PrimeGroup, Ristretto, SecurityLevel};
use dashcam_pay_core::he::{decrypt, encrypted_inner_product, keygen, EncryptedTemplate};
use dashcam_pay_core::zkp::{prove_match, verify_match, ProofContext, Threshold, Verdict};
use serde::{Deserialize, Serialize};

use crate::scenario::stream_rng;

/// Real-time budget for keygen plus one comparison.
pub const BUDGET_MS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub profile: SecurityLevel,
    pub group: String,
    pub dimension: usize,
    pub scale: i64,
    /// One-time decryption table build; reused across sessions, so outside
    /// the per-comparison budget.
    pub table_build_ms: f64,
    pub keygen_ms: f64,
    pub encrypt_template_ms: f64,
    pub inner_product_ms: f64,
    pub decrypt_ms: f64,
    pub prove_ms: f64,
    pub verify_ms: f64,
    pub total_ms: f64,
    pub budget_ms: f64,
    pub within_budget: bool,
    pub proof_bytes: usize,
    pub score: i64,
    pub matched: bool,
}

pub fn bench(profile: SecurityLevel, dimension: usize, scale: i64, seed: u64) -> BenchReport {
    match profile {
        SecurityLevel::Test => bench_group::<ModpGroup>(profile, dimension, scale, seed),
        SecurityLevel::Secure => bench_group::<Ristretto>(profile, dimension, scale, seed),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn bench_group<G: PrimeGroup>(profile: SecurityLevel, dimension: usize, scale: i64, seed: u64) -> BenchReport {
    let mut rng = stream_rng(seed, 9);
    let bound = score_bound(dimension, scale);
    let enrolled = quantize(&Embedding::random(Modality::Face, dimension, &mut rng), scale).expect("valid scale");
    let probe = enrolled.clone();
    let threshold = Threshold::from_cosine(0.5, scale, bound).expect("valid threshold");
    let context = ProofContext {
        device_id: 1,
        modality: Modality::Face,
        round_nonce: [7; 16],
    };

    let t = Instant::now();
    let table = DlogTable::<G>::new(bound);
    let table_build_ms = ms(t);

    let t = Instant::now();
    let keys = keygen::<G, _>(&mut rng);
    let keygen_ms = ms(t);

    let t = Instant::now();
    let et = EncryptedTemplate::encrypt(keys.public(), 1, &enrolled, &mut rng);
    let encrypt_template_ms = ms(t);

    let t = Instant::now();
    let ct = encrypted_inner_product(&et, &probe)
        .expect("same shape")
        .rerandomize(keys.public(), &mut rng);
    let inner_product_ms = ms(t);

    let t = Instant::now();
    let score = decrypt(keys.secret(), &ct, &table).expect("within bound");
    let decrypt_ms = ms(t);

    let t = Instant::now();
    let proof = prove_match(keys.secret(), keys.public(), &ct, threshold, context, &table, &mut rng).expect("provable");
    let prove_ms = ms(t);

    let t = Instant::now();
    let verdict = verify_match(keys.public(), &ct, threshold, &proof, &context, bound);
    let verify_ms = ms(t);

    let total_ms = keygen_ms + encrypt_template_ms + inner_product_ms + decrypt_ms + prove_ms + verify_ms;
    BenchReport {
        profile,
        group: G::PARAMS.name.to_string(),
        dimension,
        scale,
        table_build_ms,
        keygen_ms,
        encrypt_template_ms,
        inner_product_ms,
        decrypt_ms,
        prove_ms,
        verify_ms,
        total_ms,
        budget_ms: BUDGET_MS,
        within_budget: total_ms <= BUDGET_MS,
        proof_bytes: proof.to_bytes().len(),
        score,
        matched: verdict == Verdict::Match,
    }
}
