//! Ride report: everything a run produces, serialized as stable JSON.

use std::collections::BTreeMap;

use dashcam_pay_core::command::{PaymentCommand, UseCase};
use dashcam_pay_core::embedding::Modality;
use dashcam_pay_core::group::SecurityLevel;
use dashcam_pay_core::protocol::{LinkKind, RoundKind};
use serde::{Deserialize, Serialize};

use crate::oracle::DecisionView;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideReport {
    pub seed: u64,
    pub profile: SecurityLevel,
    pub group: String,
    pub dimension: usize,
    pub scale: i64,
    pub thresholds: ThresholdView,
    pub passengers: Vec<PassengerView>,
    pub command: Option<CommandView>,
    /// Decision of the encrypted protocol for the spoken command.
    pub decision: Option<DecisionView>,
    /// Decision of the plaintext pipeline on the same inputs.
    pub oracle_decision: Option<DecisionView>,
    pub oracle_agrees: bool,
    /// The speaker, if they carry an enrolled device.
    pub expected_payer: Option<usize>,
    pub receipt: Option<ReceiptView>,
    pub rounds: Vec<RoundView>,
    pub comparisons: ComparisonCounts,
    pub oracle_comparisons: ComparisonCounts,
    pub timings: SimTimings,
    /// Frames and bytes per message type, both directions.
    pub traffic: BTreeMap<String, TrafficView>,
    pub total_bytes: u64,
    pub expansion: ExpansionView,
    pub audit_records: usize,
    /// SHA-256 over the ordered message trace.
    pub trace_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<WallClock>,
}

impl RideReport {
    /// True when the decision names the speaker's device, or is a no-match
    /// for a speaker without one.
    pub fn decision_correct(&self) -> Option<bool> {
        let decision = self.decision.as_ref()?;
        Some(match self.expected_payer {
            Some(p) => decision.outcome.payer() == Some(p),
            None => decision.outcome.payer().is_none() && decision.matched.is_empty(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdView {
    pub face_cosine: f64,
    pub voice_cosine: f64,
    pub face: i64,
    pub voice: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassengerView {
    pub subject: String,
    pub has_device: bool,
    pub enrolled: bool,
    pub device_id: Option<String>,
    pub transport: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandView {
    pub transcript: String,
    pub speaker: usize,
    pub triggered: bool,
    pub parsed: Option<PaymentCommand>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptView {
    pub passenger: usize,
    pub use_case: UseCase,
    pub slot: Option<u64>,
    pub merchant: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundView {
    pub kind: RoundKind,
    pub started_s: f64,
    pub finished_s: f64,
    pub probes: usize,
    pub challenges: usize,
    pub matches: usize,
    pub non_matches: usize,
    pub invalid: usize,
    pub timed_out: usize,
}

/// Genuine/impostor comparison counts for one modality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub genuine: u64,
    pub genuine_matches: u64,
    pub impostor: u64,
    pub impostor_matches: u64,
}

impl Counts {
    pub fn add(&mut self, genuine: bool, matched: bool) {
        if genuine {
            self.genuine += 1;
            self.genuine_matches += u64::from(matched);
        } else {
            self.impostor += 1;
            self.impostor_matches += u64::from(matched);
        }
    }

    pub fn merge(&mut self, other: &Counts) {
        self.genuine += other.genuine;
        self.genuine_matches += other.genuine_matches;
        self.impostor += other.impostor;
        self.impostor_matches += other.impostor_matches;
    }

    /// True positive identification rate, if any genuine comparison ran.
    pub fn tpir(&self) -> Option<f64> {
        (self.genuine > 0).then(|| self.genuine_matches as f64 / self.genuine as f64)
    }

    /// False positive identification rate, if any impostor comparison ran.
    pub fn fpir(&self) -> Option<f64> {
        (self.impostor > 0).then(|| self.impostor_matches as f64 / self.impostor as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonCounts {
    pub face: Counts,
    pub voice: Counts,
}

impl ComparisonCounts {
    pub fn get_mut(&mut self, modality: Modality) -> &mut Counts {
        match modality {
            Modality::Face => &mut self.face,
            Modality::Voice => &mut self.voice,
        }
    }

    pub fn merge(&mut self, other: &ComparisonCounts) {
        self.face.merge(&other.face);
        self.voice.merge(&other.voice);
    }
}

/// Simulated times in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTimings {
    /// Time from connect to stored enrollment, per passenger with a device.
    pub enrollment_s: BTreeMap<usize, f64>,
    /// Transfer time of the enrollment frame alone over the passenger's link.
    pub enrollment_transfer_s: BTreeMap<usize, f64>,
    pub enrollment_frame_bytes: Option<usize>,
    pub prescreen_s: f64,
    pub identification_s: Option<f64>,
    pub payment_s: Option<f64>,
    pub total_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficView {
    pub frames: u64,
    pub bytes: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionView {
    /// Ciphertext bytes per plaintext coordinate byte.
    pub per_coordinate: f64,
    /// Encrypted template bytes over plaintext template bytes.
    pub template: f64,
}

/// Host timings; excluded from reports unless requested because they vary
/// between runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub setup_ms: f64,
    pub dashcam_ms: f64,
    pub devices_ms: f64,
    pub total_ms: f64,
}
