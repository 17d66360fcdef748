use dashcam_pay_core::command::UseCase;
use dashcam_pay_core::dlog::DlogTable;
use dashcam_pay_core::embedding::{inner_product_int, score_bound, Modality, QuantizedTemplate};
use dashcam_pay_core::group::ModpGroup;
use dashcam_pay_core::he::{decrypt, encrypt, encrypted_inner_product, keygen, EncryptedTemplate};
use dashcam_pay_core::protocol::{decode, encode, DeviceId, PaymentDetails, ProtocolMessage, RecourseReason};
use dashcam_pay_core::zkp::{prove_match, verify_match, MatchBit, ProofContext, Threshold, Verdict};
use proptest::prelude::*;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

type G = ModpGroup;

const D: usize = 8;
const Q: i64 = 7;

fn template(modality: Modality) -> impl Strategy<Value = QuantizedTemplate> {
    prop::collection::vec(-Q..=Q, D).prop_map(move |v| QuantizedTemplate::from_values(modality, Q, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ciphertext_addition_is_plaintext_addition(seed in any::<u64>(), a in -500i64..500, b in -500i64..500) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let table = DlogTable::<G>::new(1000);
        let keys = keygen::<G, _>(&mut rng);
        let ca = encrypt(keys.public(), a, 1000, &mut rng).unwrap();
        let cb = encrypt(keys.public(), b, 1000, &mut rng).unwrap();
        prop_assert_eq!(decrypt(keys.secret(), &ca.add(&cb), &table), Ok(a + b));
        prop_assert_eq!(decrypt(keys.secret(), &ca.scalar_mul(-1), &table), Ok(-a));
        prop_assert_eq!(decrypt(keys.secret(), &ca.rerandomize(keys.public(), &mut rng), &table), Ok(a));
    }

    #[test]
    fn encrypted_inner_product_matches_plaintext(seed in any::<u64>(), et in template(Modality::Face), at in template(Modality::Face)) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bound = score_bound(D, Q);
        let table = DlogTable::<G>::new(bound);
        let keys = keygen::<G, _>(&mut rng);
        let enc = EncryptedTemplate::encrypt(keys.public(), 1, &et, &mut rng);
        let ct = encrypted_inner_product(&enc, &at).unwrap();
        prop_assert_eq!(decrypt(keys.secret(), &ct, &table).unwrap(), inner_product_int(&et, &at).unwrap());
    }

    #[test]
    fn honest_proofs_verify_with_the_true_decision(seed in any::<u64>(), score in -392i64..=392, t in -391i64..=391) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bound = score_bound(D, Q);
        let table = DlogTable::<G>::new(bound);
        let keys = keygen::<G, _>(&mut rng);
        let threshold = Threshold::new(t, bound).unwrap();
        let ct = encrypt(keys.public(), score, bound, &mut rng).unwrap();
        let ctx = ProofContext { device_id: seed, modality: Modality::Voice, round_nonce: [seed as u8; 16] };
        let proof = prove_match(keys.secret(), keys.public(), &ct, threshold, ctx, &table, &mut rng).unwrap();
        let (bit, verdict) = if score > t { (MatchBit::Match, Verdict::Match) } else { (MatchBit::NonMatch, Verdict::NonMatch) };
        prop_assert_eq!(proof.bit, bit);
        prop_assert_eq!(verify_match(keys.public(), &ct, threshold, &proof, &ctx, bound), verdict);
        let mut forged = proof.clone();
        forged.bit = forged.bit.flipped();
        prop_assert_eq!(verify_match(keys.public(), &ct, threshold, &forged, &ctx, bound), Verdict::Invalid);
    }

    #[test]
    fn frames_roundtrip(
        id in any::<u64>(),
        nonce in any::<[u8; 16]>(),
        receipt in any::<[u8; 32]>(),
        slot in prop::option::of(any::<u64>()),
        merchant in "[ -~]{0,40}",
        reason in 0usize..6,
    ) {
        let reasons = [
            RecourseReason::NoMatch,
            RecourseReason::MultipleMatches,
            RecourseReason::DecryptionFailure,
            RecourseReason::InvalidProof,
            RecourseReason::Timeout,
            RecourseReason::ProtocolViolation,
        ];
        let use_case = if slot.is_some() { UseCase::Parking } else { UseCase::Toll };
        let messages: [ProtocolMessage<G>; 5] = [
            ProtocolMessage::ConnectRequest,
            ProtocolMessage::ConnectAccept { device_id: DeviceId(id), session_nonce: nonce },
            ProtocolMessage::PaymentRequest { device_id: DeviceId(id), details: PaymentDetails { use_case, slot, merchant } },
            ProtocolMessage::PaymentAck { device_id: DeviceId(id), receipt },
            ProtocolMessage::RecourseNotice { reason: reasons[reason] },
        ];
        for m in messages {
            let frame = encode(&m);
            prop_assert_eq!(u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize, frame.len() - 4);
            prop_assert_eq!(decode::<G>(&frame), Ok(m));
        }
    }

    #[test]
    fn decoding_arbitrary_bytes_never_panics_and_is_canonical(bytes in prop::collection::vec(any::<u8>(), 0..96)) {
        if let Ok(m) = decode::<G>(&bytes) {
            prop_assert_eq!(encode(&m), bytes);
        }
    }
}
