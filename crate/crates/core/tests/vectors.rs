//! Frozen byte encodings for the test profile. Group values were recomputed
//! independently with Python big integers: `pow(4, 42, p)` for the public key
//! and `pow(pk, 7, p) * pow(4, q - 5, p) % p` for `c2`.

use dashcam_pay_core::command::UseCase;
use dashcam_pay_core::embedding::{Modality, QuantizedTemplate};
use dashcam_pay_core::group::{GroupScalar, ModpGroup, ModpScalar, PrimeGroup};
use dashcam_pay_core::he::{Ciphertext, EncryptedTemplate, KeyPair};
use dashcam_pay_core::protocol::{decode, encode, DeviceId, PaymentDetails, ProtocolMessage};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

type G = ModpGroup;

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

fn keys() -> KeyPair<G> {
    KeyPair::from_secret(ModpScalar::from_u64(42)).unwrap()
}

fn ciphertext() -> Ciphertext<G> {
    Ciphertext::with_randomness(keys().public(), -5, &ModpScalar::from_u64(7))
}

#[test]
fn group_elements() {
    assert_eq!(hex(&G::generator().to_bytes()), "0000000000000004");
    assert_eq!(hex(&G::commitment_base().to_bytes()), "2cad3a3d819aa4ad");
    assert_eq!(hex(&keys().public().to_bytes()), "0000000a51400000");
}

#[test]
fn ciphertext_is_c1_then_c2() {
    let ct = ciphertext();
    assert_eq!(hex(&ct.to_bytes()), "00000000000040002ac46256428c9ac9");
    assert_eq!(Ciphertext::<G>::from_bytes(&ct.to_bytes()).unwrap(), ct);
}

#[test]
fn plaintext_template() {
    let t = QuantizedTemplate::from_values(Modality::Face, 127, vec![127, -1, 0]).unwrap();
    assert_eq!(hex(&t.to_bytes()), "00000003010000007f7fff00");
    assert_eq!(QuantizedTemplate::from_bytes(&t.to_bytes()).unwrap(), t);
}

#[test]
fn encrypted_template() {
    let t = QuantizedTemplate::from_values(Modality::Voice, 127, vec![1, -1]).unwrap();
    let et = EncryptedTemplate::encrypt(keys().public(), 1, &t, &mut ChaCha20Rng::seed_from_u64(0));
    assert_eq!(
        hex(&et.to_bytes()),
        "0000000202145670513ea1834918e33ddcd20e09192efe9fa03ba2e171219689eefccf0752"
    );
}

#[test]
fn frames() {
    let pay = ProtocolMessage::<G>::PaymentRequest {
        device_id: DeviceId(1),
        details: PaymentDetails {
            use_case: UseCase::FastFood,
            slot: Some(120),
            merchant: "Cafe".into(),
        },
    };
    assert_eq!(
        hex(&encode(&pay)),
        "0000001b060000000000000001040100000000000000780000000443616665"
    );
    let challenge = ProtocolMessage::<G>::ScoreChallenge {
        modality: Modality::Face,
        round_nonce: [0xab; 16],
        ciphertext: ciphertext(),
    };
    assert_eq!(
        hex(&encode(&challenge)),
        "000000220401abababababababababababababababab00000000000040002ac46256428c9ac9"
    );
    assert_eq!(hex(&encode(&ProtocolMessage::<G>::ConnectRequest)), "0000000101");
    for m in [pay, challenge] {
        assert_eq!(decode::<G>(&encode(&m)).unwrap(), m);
    }
}

#[test]
fn proof_sizes() {
    use dashcam_pay_core::group::Ristretto;
    use dashcam_pay_core::zkp::MatchProof;
    assert_eq!(MatchProof::<G>::encoded_len(23), 820);
    assert_eq!(MatchProof::<Ristretto>::encoded_len(23), 3172);
}
