//! Ride scenarios: JSON schema, validation and profile materialization.

use std::fmt;
use std::path::Path;

use dashcam_pay_core::embedding::{score_bound, Embedding, IdentityProfile, Modality};
use dashcam_pay_core::group::SecurityLevel;
use dashcam_pay_core::protocol::{LinkKind, TransportProfile};
use dashcam_pay_core::zkp::Threshold;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported `d * Q^2`; keeps the decryption table small.
pub const MAX_SCORE_BOUND: i64 = 1 << 40;

/// RNG stream assignments under one scenario seed.
pub(crate) mod stream {
    pub const PROFILES: u64 = 1;
    pub const CAPTURES: u64 = 2;
    pub const KEYS: u64 = 3;
    pub const LINKS: u64 = 4;
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_profile")]
    pub profile: SecurityLevel,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_scale")]
    pub scale: i64,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// How mean embeddings without explicit values are drawn.
    #[serde(default)]
    pub generator: Generator,
    pub passengers: Vec<Passenger>,
    /// Explicit capture events, in addition to the automatic ones.
    #[serde(default)]
    pub captures: Vec<Capture>,
    /// Capture every passenger's face whenever a device finishes enrolling.
    #[serde(default = "yes")]
    pub prescreen_on_enroll: bool,
    /// Capture every passenger's face again when a payment is triggered,
    /// before the voice round.
    #[serde(default = "yes")]
    pub refresh_prescreen_on_pay: bool,
    #[serde(default)]
    pub command: Option<SpokenCommand>,
    #[serde(default)]
    pub merchant: String,
    #[serde(default = "default_timeout")]
    pub challenge_timeout_s: f64,
    #[serde(default)]
    pub transports: TransportOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Cosine cutoffs; converted to integer thresholds `floor(cos * Q^2)`.
    pub face: f64,
    pub voice: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            face: 0.5,
            voice: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Means are mutually orthogonal per modality (inter-class cosine 0).
    #[default]
    Separable,
    /// Independent uniform directions.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Passenger {
    pub subject: String,
    #[serde(default = "yes")]
    pub has_device: bool,
    #[serde(default = "yes")]
    pub enrolled: bool,
    /// Expected noise norm of each capture of this passenger.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voice: Option<Vec<f64>>,
    /// Reuse another passenger's voice mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voice_twin_of: Option<usize>,
    #[serde(default = "default_link")]
    pub transport: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capture {
    pub at_s: f64,
    /// Passenger indices whose faces appear in the frame.
    pub present: Vec<usize>,
    /// Overrides each passenger's own sigma.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpokenCommand {
    pub transcript: String,
    pub speaker: usize,
    /// When absent the command is spoken once the ride is quiescent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ble: Option<TransportProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wifi: Option<TransportProfile>,
}

impl TransportOverrides {
    pub fn profile(&self, kind: LinkKind) -> TransportProfile {
        let custom = match kind {
            LinkKind::Ble => self.ble,
            LinkKind::Wifi => self.wifi,
        };
        custom.unwrap_or_else(|| TransportProfile::for_kind(kind))
    }
}

fn yes() -> bool {
    true
}
fn default_profile() -> SecurityLevel {
    SecurityLevel::Test
}
fn default_dimension() -> usize {
    dashcam_pay_core::embedding::DEFAULT_DIMENSION
}
fn default_scale() -> i64 {
    dashcam_pay_core::embedding::DEFAULT_SCALE
}
fn default_sigma() -> f64 {
    0.3
}
fn default_timeout() -> f64 {
    5.0
}
fn default_link() -> LinkKind {
    LinkKind::Ble
}

/// One validation failure, located by a JSON-style field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n  {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<FieldError>),
}

impl ScenarioError {
    pub fn fields(&self) -> &[FieldError] {
        match self {
            ScenarioError::Invalid(f) => f,
            _ => &[],
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn bound(&self) -> i64 {
        score_bound(self.dimension, self.scale)
    }

    pub fn face_threshold(&self) -> Threshold {
        Threshold::from_cosine(self.thresholds.face, self.scale, self.bound())
            .expect("validated scenario")
    }

    pub fn voice_threshold(&self) -> Threshold {
        Threshold::from_cosine(self.thresholds.voice, self.scale, self.bound())
            .expect("validated scenario")
    }

    /// Checks every invariant, reporting all failures at once.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errors = Vec::new();
        let mut fail = |path: String, message: &str| {
            errors.push(FieldError {
                path,
                message: message.to_string(),
            })
        };
        let n = self.passengers.len();
        if self.dimension < 2 {
            fail("dimension".into(), "must be at least 2");
        }
        if self.scale < 1 {
            fail("scale".into(), "must be at least 1");
        }
        let bound_ok = self.dimension >= 2
            && self.scale >= 1
            && (self.scale as i128).pow(2) * self.dimension as i128 <= MAX_SCORE_BOUND as i128;
        if self.dimension >= 2 && self.scale >= 1 && !bound_ok {
            fail("scale".into(), "dimension * scale^2 exceeds the supported score bound");
        }
        for (name, cos) in [("face", self.thresholds.face), ("voice", self.thresholds.voice)] {
            if !(cos > -1.0 && cos < 1.0) {
                fail(format!("thresholds.{name}"), "must lie strictly between -1 and 1");
            }
        }
        if n == 0 {
            fail("passengers".into(), "must not be empty");
        }
        if self.generator == Generator::Separable && n > self.dimension {
            fail("passengers".into(), "separable generation needs at most `dimension` passengers");
        }
        for (i, p) in self.passengers.iter().enumerate() {
            if p.subject.is_empty() {
                fail(format!("passengers[{i}].subject"), "must not be empty");
            }
            if !(p.sigma.is_finite() && p.sigma >= 0.0) {
                fail(format!("passengers[{i}].sigma"), "must be a finite non-negative number");
            }
            if p.enrolled && !p.has_device {
                fail(format!("passengers[{i}].enrolled"), "enrollment requires a device");
            }
            for (name, values) in [("face", &p.face), ("voice", &p.voice)] {
                if let Some(values) = values {
                    if values.len() != self.dimension {
                        fail(format!("passengers[{i}].{name}"), "length must equal dimension");
                    } else if Embedding::normalized(Modality::Face, values.clone()).is_err() {
                        fail(format!("passengers[{i}].{name}"), "must be finite and non-zero");
                    }
                }
            }
            if let Some(j) = p.voice_twin_of {
                if j >= n {
                    fail(format!("passengers[{i}].voice_twin_of"), "index out of range");
                } else if j == i {
                    fail(format!("passengers[{i}].voice_twin_of"), "cannot refer to itself");
                } else if self.passengers[j].voice_twin_of.is_some() {
                    fail(format!("passengers[{i}].voice_twin_of"), "must refer to a passenger without a twin");
                }
                if p.voice.is_some() {
                    fail(format!("passengers[{i}].voice"), "conflicts with voice_twin_of");
                }
            }
        }
        for (c, capture) in self.captures.iter().enumerate() {
            if !(capture.at_s.is_finite() && capture.at_s >= 0.0) {
                fail(format!("captures[{c}].at_s"), "must be a finite non-negative time");
            }
            for (k, idx) in capture.present.iter().enumerate() {
                if *idx >= n {
                    fail(format!("captures[{c}].present[{k}]"), "index out of range");
                }
            }
            if let Some(s) = capture.sigma {
                if !(s.is_finite() && s >= 0.0) {
                    fail(format!("captures[{c}].sigma"), "must be a finite non-negative number");
                }
            }
        }
        if let Some(cmd) = &self.command {
            if cmd.speaker >= n {
                fail("command.speaker".into(), "index out of range");
            }
            if let Some(at) = cmd.at_s {
                if !(at.is_finite() && at >= 0.0) {
                    fail("command.at_s".into(), "must be a finite non-negative time");
                }
            }
            if let Some(s) = cmd.sigma {
                if !(s.is_finite() && s >= 0.0) {
                    fail("command.sigma".into(), "must be a finite non-negative number");
                }
            }
        }
        if !(self.challenge_timeout_s.is_finite() && self.challenge_timeout_s > 0.0) {
            fail("challenge_timeout_s".into(), "must be positive");
        }
        for (name, profile) in [("ble", self.transports.ble), ("wifi", self.transports.wifi)] {
            if let Some(p) = profile {
                if !p.is_valid() {
                    fail(format!("transports.{name}"), "bandwidth must be positive, latency non-negative, drop probability in [0, 1]");
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errors))
        }
    }

    /// Mean embeddings for every passenger, drawn from the profile stream of
    /// `seed` where not given explicitly.
    pub fn profiles(&self, seed: u64) -> Vec<IdentityProfile> {
        let mut rng = stream_rng(seed, stream::PROFILES);
        let faces = self.means(Modality::Face, &mut rng);
        let voices = self.means(Modality::Voice, &mut rng);
        self.passengers
            .iter()
            .zip(faces.into_iter().zip(voices))
            .map(|(p, (face, voice))| IdentityProfile {
                subject: p.subject.clone(),
                face,
                voice,
                sigma: p.sigma,
            })
            .collect()
    }

    fn means(&self, modality: Modality, rng: &mut ChaCha20Rng) -> Vec<Embedding> {
        let d = self.dimension;
        let explicit = |p: &Passenger| match modality {
            Modality::Face => p.face.clone(),
            Modality::Voice => p.voice.clone(),
        };
        let mut out: Vec<Option<Embedding>> = self
            .passengers
            .iter()
            // Unit vectors are kept bit-exact so materialized scenarios replay.
            .map(|p| {
                explicit(p).map(|v| {
                    Embedding::new(modality, v.clone())
                        .or_else(|_| Embedding::normalized(modality, v))
                        .expect("validated")
                })
            })
            .collect();
        for i in 0..out.len() {
            if out[i].is_some() || (modality == Modality::Voice && self.passengers[i].voice_twin_of.is_some()) {
                continue;
            }
            let drawn = loop {
                let candidate = Embedding::random(modality, d, rng);
                if self.generator == Generator::Random {
                    break candidate;
                }
                let mut v = candidate.values().to_vec();
                for other in out.iter().flatten() {
                    let dot: f64 = v.iter().zip(other.values()).map(|(a, b)| a * b).sum();
                    for (x, o) in v.iter_mut().zip(other.values()) {
                        *x -= dot * o;
                    }
                }
                if let Ok(e) = Embedding::normalized(modality, v) {
                    break e;
                }
            };
            out[i] = Some(drawn);
        }
        if modality == Modality::Voice {
            for (i, p) in self.passengers.iter().enumerate() {
                if let Some(j) = p.voice_twin_of {
                    out[i] = out[j].clone();
                }
            }
        }
        out.into_iter().map(|e| e.expect("every mean assigned")).collect()
    }

    /// Copy with every mean embedding written out explicitly.
    pub fn materialize(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        for (p, profile) in s.passengers.iter_mut().zip(self.profiles(seed)) {
            p.face = Some(profile.face.values().to_vec());
            if p.voice_twin_of.is_none() {
                p.voice = Some(profile.voice.values().to_vec());
            }
        }
        s.seed = seed;
        s
    }
}
