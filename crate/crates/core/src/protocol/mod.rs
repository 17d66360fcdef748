//! Sans-io state machines for the dashcam (verifier) and the passenger
//! devices (provers), the framed wire format between them, and the
//! transport timing model.
//!
//! Neither machine performs IO or reads a clock: the caller delivers events
//! stamped with a [`SimTime`] and forwards the returned frames.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::Modality;

mod dashcam;
mod device;
mod transport;
mod wire;

pub use dashcam::{DashcamConfig, DashcamEvent, DashcamState, Outbound, PaymentReceipt};
pub use device::{DeviceConfig, DeviceEvent, DeviceState};
pub use transport::{LinkKind, TransportProfile};
pub use wire::{decode, encode, MessageType, PaymentDetails, ProtocolMessage, RecourseReason, MAX_FRAME_LEN};

pub use crate::zkp::NONCE_LEN;

/// Random 128-bit value scoping a session or a challenge.
pub type Nonce = [u8; NONCE_LEN];

/// Session-scoped device identifier assigned by the dashcam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u64);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{:016x}", self.0)
    }
}

/// Dashcam-side handle for a point-to-point transport link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

/// Simulated time in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs_f64(secs: f64) -> Self {
        SimTime(libm::round(secs.max(0.0) * 1e6) as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_add(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(other.0))
    }
}

/// One structured audit line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub time: SimTime,
    pub actor: String,
    pub event: String,
    pub detail: String,
}

/// Result of one challenge as seen by the dashcam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeOutcome {
    Match,
    NonMatch,
    Invalid,
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    Prescreen,
    Identify,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeRecord {
    pub device: DeviceId,
    pub modality: Modality,
    /// Index of the probe within the round's capture.
    pub probe: u32,
    pub outcome: ChallengeOutcome,
}

/// Outcomes of every challenge in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundAudit {
    pub round: u64,
    pub kind: RoundKind,
    pub started: SimTime,
    pub finished: SimTime,
    pub challenges: Vec<ChallengeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionOutcome {
    UniquePayer(DeviceId),
    NoMatch,
    MultipleMatches,
}

/// The dashcam's payer decision for one payment trigger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayerDecision {
    pub outcome: DecisionOutcome,
    /// Devices whose voice proof validated as a match.
    pub matched: Vec<DeviceId>,
    /// Candidate set the voice round ran over.
    pub candidates: Vec<DeviceId>,
    /// Rounds since the previous decision, oldest first.
    pub rounds: Vec<RoundAudit>,
}

/// Stub receipt: `SHA-256("dcp/receipt/v1" ‖ session nonce ‖ device id ‖
/// encoded details)`. Nobody signs it; payment rails are simulated.
pub fn receipt_digest(session: &Nonce, device: DeviceId, details: &PaymentDetails) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"dcp/receipt/v1");
    h.update(session);
    h.update(device.0.to_be_bytes());
    let mut body = Vec::new();
    details.write_bytes(&mut body);
    h.update(&body);
    h.finalize().into()
}
