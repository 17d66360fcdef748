//! Passenger device role: owns the ElGamal key pair and the plaintext
//! templates, decrypts score challenges, and answers with match proofs.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dlog::DlogTable;
use crate::embedding::{Modality, QuantizedTemplate};
use crate::group::PrimeGroup;
use crate::he::{keygen, EncryptedTemplate, KeyPair, PublicKey};
use crate::zkp::{prove_match, ProofContext, Threshold};

use super::wire::{decode, encode, PaymentDetails, ProtocolMessage, RecourseReason};
use super::{receipt_digest, AuditRecord, DeviceId, Nonce, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceConfig {
    pub face_threshold: Threshold,
    pub voice_threshold: Threshold,
}

impl DeviceConfig {
    pub fn threshold(&self, modality: Modality) -> Threshold {
        match modality {
            Modality::Face => self.face_threshold,
            Modality::Voice => self.voice_threshold,
        }
    }
}

#[derive(Debug, Clone)]
pub enum DeviceEvent {
    /// Link came up; ask the dashcam to admit this device.
    Connect,
    /// A frame arrived from the dashcam.
    Frame(Vec<u8>),
}

#[derive(Debug, Clone)]
pub struct DeviceState<G: PrimeGroup> {
    name: String,
    config: DeviceConfig,
    keys: KeyPair<G>,
    face: QuantizedTemplate,
    voice: QuantizedTemplate,
    table: Arc<DlogTable<G>>,
    rng: ChaCha20Rng,
    device_id: Option<DeviceId>,
    session: Option<Nonce>,
    seen: BTreeSet<Nonce>,
    payments: Vec<(PaymentDetails, [u8; 32])>,
    last_recourse: Option<RecourseReason>,
    audit: Vec<AuditRecord>,
}

impl<G: PrimeGroup> DeviceState<G> {
    /// Generates a fresh key pair and stores the enrolled templates.
    pub fn enroll(
        name: impl Into<String>,
        config: DeviceConfig,
        face: QuantizedTemplate,
        voice: QuantizedTemplate,
        table: Arc<DlogTable<G>>,
        seed: [u8; 32],
    ) -> Self {
        let mut rng = ChaCha20Rng::from_seed(seed);
        let keys = keygen(&mut rng);
        Self {
            name: name.into(),
            config,
            keys,
            face,
            voice,
            table,
            rng,
            device_id: None,
            session: None,
            seen: BTreeSet::new(),
            payments: Vec::new(),
            last_recourse: None,
            audit: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn public_key(&self) -> &PublicKey<G> {
        self.keys.public()
    }

    /// Exposed only so tests can scan other parties' state for it.
    pub fn secret_key_bytes(&self) -> Vec<u8> {
        self.keys.secret().to_bytes()
    }

    pub fn device_id(&self) -> Option<DeviceId> {
        self.device_id
    }

    pub fn payments(&self) -> &[(PaymentDetails, [u8; 32])] {
        &self.payments
    }

    pub fn last_recourse(&self) -> Option<RecourseReason> {
        self.last_recourse
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }

    /// Replaces the templates and key pair. If connected, returns the new
    /// enrollment frame; the dashcam overwrites the old record.
    pub fn reenroll(&mut self, face: QuantizedTemplate, voice: QuantizedTemplate) -> Vec<Vec<u8>> {
        self.keys = keygen(&mut self.rng);
        self.face = face;
        self.voice = voice;
        match self.device_id {
            Some(id) => alloc::vec![self.enrollment_frame(id)],
            None => Vec::new(),
        }
    }

    pub fn handle(&mut self, now: SimTime, event: DeviceEvent) -> Vec<Vec<u8>> {
        match event {
            DeviceEvent::Connect => alloc::vec![encode::<G>(&ProtocolMessage::ConnectRequest)],
            DeviceEvent::Frame(bytes) => self.on_frame(now, &bytes),
        }
    }

    fn log(&mut self, now: SimTime, event: &str, detail: String) {
        self.audit.push(AuditRecord {
            time: now,
            actor: self.name.clone(),
            event: event.to_string(),
            detail,
        });
    }

    fn enrollment_frame(&mut self, id: DeviceId) -> Vec<u8> {
        let pk = *self.keys.public();
        let face = EncryptedTemplate::encrypt(&pk, id.0, &self.face, &mut self.rng);
        let voice = EncryptedTemplate::encrypt(&pk, id.0, &self.voice, &mut self.rng);
        encode(&ProtocolMessage::EnrollmentTransfer {
            device_id: id,
            public_key: pk,
            face,
            voice,
        })
    }

    fn on_frame(&mut self, now: SimTime, bytes: &[u8]) -> Vec<Vec<u8>> {
        let msg = match decode::<G>(bytes) {
            Ok(m) => m,
            Err(e) => {
                self.log(now, "decode_error", e.to_string());
                return Vec::new();
            }
        };
        match msg {
            ProtocolMessage::ConnectAccept {
                device_id,
                session_nonce,
            } => {
                if self.device_id.is_some_and(|id| id != device_id) {
                    self.log(now, "conflicting_accept", device_id.to_string());
                    return Vec::new();
                }
                self.device_id = Some(device_id);
                self.session = Some(session_nonce);
                self.log(now, "connected", device_id.to_string());
                alloc::vec![self.enrollment_frame(device_id)]
            }
            ProtocolMessage::ScoreChallenge {
                modality,
                round_nonce,
                ciphertext,
            } => {
                let Some(id) = self.device_id else {
                    self.log(now, "challenge_before_connect", String::new());
                    return Vec::new();
                };
                if !self.seen.insert(round_nonce) {
                    self.log(now, "replayed_challenge", modality.to_string());
                    return Vec::new();
                }
                let context = ProofContext {
                    device_id: id.0,
                    modality,
                    round_nonce,
                };
                let threshold = self.config.threshold(modality);
                match prove_match(
                    self.keys.secret(),
                    self.keys.public(),
                    &ciphertext,
                    threshold,
                    context,
                    &self.table,
                    &mut self.rng,
                ) {
                    Ok(proof) => {
                        self.log(now, "proved", format!("{modality} {:?}", proof.bit));
                        alloc::vec![encode(&ProtocolMessage::ScoreProof {
                            device_id: id,
                            proof,
                        })]
                    }
                    Err(e) => {
                        self.log(now, "prove_failed", format!("{modality}: {e}"));
                        alloc::vec![encode::<G>(&ProtocolMessage::RecourseNotice {
                            reason: RecourseReason::DecryptionFailure,
                        })]
                    }
                }
            }
            ProtocolMessage::PaymentRequest { device_id, details } => {
                let (Some(id), Some(session)) = (self.device_id, self.session) else {
                    self.log(now, "payment_before_connect", String::new());
                    return Vec::new();
                };
                if id != device_id {
                    self.log(now, "misaddressed_payment", device_id.to_string());
                    return Vec::new();
                }
                let receipt = receipt_digest(&session, id, &details);
                self.log(now, "paid", format!("{:?} slot={:?}", details.use_case, details.slot));
                self.payments.push((details, receipt));
                alloc::vec![encode::<G>(&ProtocolMessage::PaymentAck {
                    device_id: id,
                    receipt,
                })]
            }
            ProtocolMessage::RecourseNotice { reason } => {
                self.last_recourse = Some(reason);
                self.log(now, "recourse", format!("{reason:?}"));
                Vec::new()
            }
            other => {
                self.log(now, "unexpected_message", other.message_type().name().to_string());
                Vec::new()
            }
        }
    }
}
