//! Frame layout: `length (u32 BE) ‖ type (u8) ‖ payload`, where `length`
//! counts the type byte and the payload.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::codec::{self, DecodeError, Reader};
use crate::command::UseCase;
use crate::embedding::Modality;
use crate::group::PrimeGroup;
use crate::he::{Ciphertext, EncryptedTemplate, PublicKey};
use crate::zkp::MatchProof;

use super::{DeviceId, Nonce};

/// Upper bound on `length`; larger prefixes are rejected before allocation.
pub const MAX_FRAME_LEN: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum MessageType {
    ConnectRequest = 1,
    ConnectAccept = 2,
    EnrollmentTransfer = 3,
    ScoreChallenge = 4,
    ScoreProof = 5,
    PaymentRequest = 6,
    PaymentAck = 7,
    RecourseNotice = 8,
}

impl MessageType {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        use MessageType::*;
        Some(match c {
            1 => ConnectRequest,
            2 => ConnectAccept,
            3 => EnrollmentTransfer,
            4 => ScoreChallenge,
            5 => ScoreProof,
            6 => PaymentRequest,
            7 => PaymentAck,
            8 => RecourseNotice,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        use MessageType::*;
        match self {
            ConnectRequest => "connect_request",
            ConnectAccept => "connect_accept",
            EnrollmentTransfer => "enrollment_transfer",
            ScoreChallenge => "score_challenge",
            ScoreProof => "score_proof",
            PaymentRequest => "payment_request",
            PaymentAck => "payment_ack",
            RecourseNotice => "recourse_notice",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecourseReason {
    NoMatch,
    MultipleMatches,
    DecryptionFailure,
    InvalidProof,
    Timeout,
    ProtocolViolation,
}

impl RecourseReason {
    fn code(self) -> u8 {
        match self {
            RecourseReason::NoMatch => 1,
            RecourseReason::MultipleMatches => 2,
            RecourseReason::DecryptionFailure => 3,
            RecourseReason::InvalidProof => 4,
            RecourseReason::Timeout => 5,
            RecourseReason::ProtocolViolation => 6,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => RecourseReason::NoMatch,
            2 => RecourseReason::MultipleMatches,
            3 => RecourseReason::DecryptionFailure,
            4 => RecourseReason::InvalidProof,
            5 => RecourseReason::Timeout,
            6 => RecourseReason::ProtocolViolation,
            _ => return None,
        })
    }
}

/// Order details forwarded to the payer's device.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PaymentDetails {
    pub use_case: UseCase,
    pub slot: Option<u64>,
    pub merchant: String,
}

impl PaymentDetails {
    /// `use case (u8) ‖ has slot (u8) ‖ slot (u64) ‖ merchant (u32 len ‖ UTF-8)`.
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        codec::put_u8(out, self.use_case.code());
        codec::put_u8(out, u8::from(self.slot.is_some()));
        codec::put_u64(out, self.slot.unwrap_or(0));
        codec::put_bytes(out, self.merchant.as_bytes());
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let use_case = UseCase::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("use case"))?;
        let has_slot = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(DecodeError::InvalidValue("slot flag")),
        };
        let slot = r.u64()?;
        if !has_slot && slot != 0 {
            return Err(DecodeError::InvalidValue("slot"));
        }
        let merchant = core::str::from_utf8(r.bytes()?)
            .map_err(|_| DecodeError::InvalidValue("merchant"))?
            .into();
        Ok(Self {
            use_case,
            slot: has_slot.then_some(slot),
            merchant,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage<G: PrimeGroup> {
    ConnectRequest,
    ConnectAccept {
        device_id: DeviceId,
        session_nonce: Nonce,
    },
    EnrollmentTransfer {
        device_id: DeviceId,
        public_key: PublicKey<G>,
        face: EncryptedTemplate<G>,
        voice: EncryptedTemplate<G>,
    },
    ScoreChallenge {
        modality: Modality,
        round_nonce: Nonce,
        ciphertext: Ciphertext<G>,
    },
    ScoreProof {
        device_id: DeviceId,
        proof: MatchProof<G>,
    },
    PaymentRequest {
        device_id: DeviceId,
        details: PaymentDetails,
    },
    PaymentAck {
        device_id: DeviceId,
        receipt: [u8; 32],
    },
    RecourseNotice {
        reason: RecourseReason,
    },
}

impl<G: PrimeGroup> ProtocolMessage<G> {
    pub fn message_type(&self) -> MessageType {
        match self {
            ProtocolMessage::ConnectRequest => MessageType::ConnectRequest,
            ProtocolMessage::ConnectAccept { .. } => MessageType::ConnectAccept,
            ProtocolMessage::EnrollmentTransfer { .. } => MessageType::EnrollmentTransfer,
            ProtocolMessage::ScoreChallenge { .. } => MessageType::ScoreChallenge,
            ProtocolMessage::ScoreProof { .. } => MessageType::ScoreProof,
            ProtocolMessage::PaymentRequest { .. } => MessageType::PaymentRequest,
            ProtocolMessage::PaymentAck { .. } => MessageType::PaymentAck,
            ProtocolMessage::RecourseNotice { .. } => MessageType::RecourseNotice,
        }
    }

    fn write_payload(&self, out: &mut Vec<u8>) {
        match self {
            ProtocolMessage::ConnectRequest => {}
            ProtocolMessage::ConnectAccept {
                device_id,
                session_nonce,
            } => {
                codec::put_u64(out, device_id.0);
                out.extend_from_slice(session_nonce);
            }
            ProtocolMessage::EnrollmentTransfer {
                device_id,
                public_key,
                face,
                voice,
            } => {
                codec::put_u64(out, device_id.0);
                public_key.element().write_bytes(out);
                face.write_bytes(out);
                voice.write_bytes(out);
            }
            ProtocolMessage::ScoreChallenge {
                modality,
                round_nonce,
                ciphertext,
            } => {
                codec::put_u8(out, modality.code());
                out.extend_from_slice(round_nonce);
                ciphertext.write_bytes(out);
            }
            ProtocolMessage::ScoreProof { device_id, proof } => {
                codec::put_u64(out, device_id.0);
                proof.write_bytes(out);
            }
            ProtocolMessage::PaymentRequest { device_id, details } => {
                codec::put_u64(out, device_id.0);
                details.write_bytes(out);
            }
            ProtocolMessage::PaymentAck { device_id, receipt } => {
                codec::put_u64(out, device_id.0);
                out.extend_from_slice(receipt);
            }
            ProtocolMessage::RecourseNotice { reason } => codec::put_u8(out, reason.code()),
        }
    }

    fn read_payload(kind: MessageType, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match kind {
            MessageType::ConnectRequest => ProtocolMessage::ConnectRequest,
            MessageType::ConnectAccept => ProtocolMessage::ConnectAccept {
                device_id: DeviceId(r.u64()?),
                session_nonce: r.array()?,
            },
            MessageType::EnrollmentTransfer => {
                let device_id = DeviceId(r.u64()?);
                let public_key = PublicKey::from_element(r.element()?);
                let face = EncryptedTemplate::read(r, device_id.0)?;
                let voice = EncryptedTemplate::read(r, device_id.0)?;
                ProtocolMessage::EnrollmentTransfer {
                    device_id,
                    public_key,
                    face,
                    voice,
                }
            }
            MessageType::ScoreChallenge => ProtocolMessage::ScoreChallenge {
                modality: Modality::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("modality"))?,
                round_nonce: r.array()?,
                ciphertext: Ciphertext::read(r)?,
            },
            MessageType::ScoreProof => ProtocolMessage::ScoreProof {
                device_id: DeviceId(r.u64()?),
                proof: MatchProof::read(r)?,
            },
            MessageType::PaymentRequest => ProtocolMessage::PaymentRequest {
                device_id: DeviceId(r.u64()?),
                details: PaymentDetails::read(r)?,
            },
            MessageType::PaymentAck => ProtocolMessage::PaymentAck {
                device_id: DeviceId(r.u64()?),
                receipt: r.array()?,
            },
            MessageType::RecourseNotice => ProtocolMessage::RecourseNotice {
                reason: RecourseReason::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("recourse reason"))?,
            },
        })
    }
}

pub fn encode<G: PrimeGroup>(m: &ProtocolMessage<G>) -> Vec<u8> {
    let mut out = alloc::vec![0u8; 4];
    codec::put_u8(&mut out, m.message_type() as u8);
    m.write_payload(&mut out);
    let len = (out.len() - 4) as u32;
    out[..4].copy_from_slice(&len.to_be_bytes());
    out
}

pub fn decode<G: PrimeGroup>(frame: &[u8]) -> Result<ProtocolMessage<G>, DecodeError> {
    let mut r = Reader::new(frame);
    let declared = r.u32()? as usize;
    if declared == 0 || declared > MAX_FRAME_LEN {
        return Err(DecodeError::BadLength {
            declared,
            actual: r.remaining(),
        });
    }
    if declared > r.remaining() {
        return Err(DecodeError::Truncated {
            needed: declared - r.remaining(),
        });
    }
    if declared < r.remaining() {
        return Err(DecodeError::BadLength {
            declared,
            actual: r.remaining(),
        });
    }
    let code = r.u8()?;
    let kind = MessageType::from_code(code).ok_or(DecodeError::UnknownTag(code))?;
    let m = ProtocolMessage::read_payload(kind, &mut r)?;
    r.finish()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ModpGroup;

    type Msg = ProtocolMessage<ModpGroup>;

    #[test]
    fn connect_request_frame() {
        assert_eq!(encode(&Msg::ConnectRequest), [0, 0, 0, 1, 1]);
        assert_eq!(decode::<ModpGroup>(&[0, 0, 0, 1, 1]), Ok(Msg::ConnectRequest));
    }

    #[test]
    fn framing_errors() {
        assert!(matches!(decode::<ModpGroup>(&[0, 0, 0]), Err(DecodeError::Truncated { .. })));
        assert!(matches!(decode::<ModpGroup>(&[0, 0, 0, 2, 1]), Err(DecodeError::Truncated { .. })));
        assert!(matches!(decode::<ModpGroup>(&[0, 0, 0, 1, 1, 0]), Err(DecodeError::BadLength { .. })));
        assert!(matches!(decode::<ModpGroup>(&[0, 0, 0, 0]), Err(DecodeError::BadLength { .. })));
        assert_eq!(decode::<ModpGroup>(&[0, 0, 0, 1, 0x42]), Err(DecodeError::UnknownTag(0x42)));
        assert!(matches!(
            decode::<ModpGroup>(&[0xff, 0xff, 0xff, 0xff, 1]),
            Err(DecodeError::BadLength { .. })
        ));
        // Trailing payload bytes inside a consistent length prefix.
        assert_eq!(decode::<ModpGroup>(&[0, 0, 0, 2, 1, 9]), Err(DecodeError::TrailingBytes(1)));
    }

    #[test]
    fn payment_details_roundtrip() {
        let m = Msg::PaymentRequest {
            device_id: DeviceId(3),
            details: PaymentDetails {
                use_case: UseCase::Parking,
                slot: Some(5208),
                merchant: "Lot 7".into(),
            },
        };
        assert_eq!(decode::<ModpGroup>(&encode(&m)), Ok(m));
        let m = Msg::RecourseNotice {
            reason: RecourseReason::MultipleMatches,
        };
        assert_eq!(encode(&m), [0, 0, 0, 2, 8, 2]);
    }
}
