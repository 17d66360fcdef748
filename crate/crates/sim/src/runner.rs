//! Discrete-event ride simulation: wires one dashcam and the passengers'
//! devices over simulated point-to-point links.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use dashcam_pay_core::command::{detect_trigger, parse_command, Dictionary, Trigger};
use dashcam_pay_core::dlog::DlogTable;
use dashcam_pay_core::embedding::{quantize, sample_observation, IdentityProfile, Modality, QuantizedTemplate};
use dashcam_pay_core::group::{ModpGroup, PrimeGroup, Ristretto, SecurityLevel};
use dashcam_pay_core::he::{ciphertext_expansion, coordinate_expansion, keygen, EncryptedTemplate};
use dashcam_pay_core::protocol::{
    AuditRecord, ChallengeOutcome, DashcamConfig, DashcamEvent, DashcamState, DeviceConfig, DeviceEvent,
    DeviceId, DeviceState, LinkId, MessageType, Outbound, PaymentDetails, RoundAudit, RoundKind, SimTime,
    TransportProfile,
};
use rand_chacha::ChaCha20Rng;
use rand_core::RngCore;
use sha2::{Digest, Sha256};

use crate::oracle::{Decision, DecisionView, OracleRound, PlaintextOracle};
use crate::report::*;
use crate::scenario::{stream, stream_rng, Scenario, ScenarioError};
use crate::SimError;

/// Hard cap on processed events; a well-formed ride needs far fewer.
const MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Include host wall-clock timings in the report.
    pub wall_clock: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToDashcam,
    ToDevice,
}

/// One frame put on a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub sent: SimTime,
    pub direction: Direction,
    pub passenger: usize,
    pub frame: Vec<u8>,
    pub delivered: bool,
}

/// Raw material for invariant checks that does not belong in the report.
#[derive(Debug, Clone, Default)]
pub struct RideArtifacts {
    pub audit: Vec<AuditRecord>,
    pub trace: Vec<TraceEntry>,
    /// Concatenation of every frame delivered to the dashcam.
    pub dashcam_received: Vec<u8>,
    pub dashcam_snapshot: Vec<u8>,
    pub device_secrets: Vec<Vec<u8>>,
    /// Plaintext template encodings held by devices (full and values only).
    pub device_templates: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct RideRun {
    pub report: RideReport,
    pub artifacts: RideArtifacts,
}

pub fn run_scenario(scenario: &Scenario) -> Result<RideRun, SimError> {
    run_scenario_with(scenario, RunOptions::default())
}

pub fn run_scenario_with(scenario: &Scenario, options: RunOptions) -> Result<RideRun, SimError> {
    scenario.validate()?;
    match scenario.profile {
        SecurityLevel::Test => Sim::<ModpGroup>::new(scenario, options).run(),
        SecurityLevel::Secure => Sim::<Ristretto>::new(scenario, options).run(),
    }
}

#[derive(Debug, Clone)]
enum Event {
    ToDashcam { passenger: usize, frame: Vec<u8> },
    ToDevice { passenger: usize, frame: Vec<u8> },
    Capture { present: Vec<usize>, sigma: Option<f64> },
    Command,
    Tick,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    profile: TransportProfile,
    uplink_free: SimTime,
    downlink_free: SimTime,
}

/// Inputs of one dashcam round, in submission order.
#[derive(Debug, Clone)]
struct RoundInput {
    kind: RoundKind,
    probes: Vec<QuantizedTemplate>,
    subjects: Vec<usize>,
}

struct Sim<'a, G: PrimeGroup> {
    scenario: &'a Scenario,
    options: RunOptions,
    now: SimTime,
    seq: u64,
    queue: BTreeMap<(SimTime, u64), Event>,
    ticks: BTreeSet<SimTime>,
    profiles: Vec<IdentityProfile>,
    enrolled_templates: BTreeMap<usize, (QuantizedTemplate, QuantizedTemplate)>,
    dash: DashcamState<G>,
    devices: BTreeMap<usize, DeviceState<G>>,
    links: BTreeMap<usize, Link>,
    capture_rng: ChaCha20Rng,
    link_rng: ChaCha20Rng,
    inputs: Vec<RoundInput>,
    command_scheduled: bool,
    command: Option<CommandView>,
    enrolled_at: BTreeMap<usize, SimTime>,
    enrollment_transfer: BTreeMap<usize, f64>,
    enrollment_frame_bytes: Option<usize>,
    payment_requested: Option<SimTime>,
    payment_done: Option<SimTime>,
    traffic: BTreeMap<String, TrafficView>,
    trace: Vec<TraceEntry>,
    digest: Sha256,
    dashcam_received: Vec<u8>,
    wall: WallClock,
}

fn seed32(rng: &mut ChaCha20Rng) -> [u8; 32] {
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    s
}

fn secs(t: SimTime) -> f64 {
    t.as_secs_f64()
}

impl<'a, G: PrimeGroup> Sim<'a, G> {
    fn new(scenario: &'a Scenario, options: RunOptions) -> Self {
        let started = Instant::now();
        let seed = scenario.seed;
        let profiles = scenario.profiles(seed);
        let mut key_rng = stream_rng(seed, stream::KEYS);
        let config = DashcamConfig {
            dimension: scenario.dimension,
            scale: scenario.scale,
            challenge_timeout: SimTime::from_secs_f64(scenario.challenge_timeout_s),
        };
        let dash = DashcamState::new(config, seed32(&mut key_rng));
        let table = Arc::new(DlogTable::<G>::new(scenario.bound()));
        let device_config = DeviceConfig {
            face_threshold: scenario.face_threshold(),
            voice_threshold: scenario.voice_threshold(),
        };
        let mut devices = BTreeMap::new();
        let mut links = BTreeMap::new();
        let mut enrolled_templates = BTreeMap::new();
        for (i, (p, profile)) in scenario.passengers.iter().zip(&profiles).enumerate() {
            let device_seed = seed32(&mut key_rng);
            if !p.has_device {
                continue;
            }
            links.insert(
                i,
                Link {
                    profile: scenario.transports.profile(p.transport),
                    uplink_free: SimTime::ZERO,
                    downlink_free: SimTime::ZERO,
                },
            );
            if !p.enrolled {
                continue;
            }
            let face = quantize(&profile.face, scenario.scale).expect("validated scale");
            let voice = quantize(&profile.voice, scenario.scale).expect("validated scale");
            enrolled_templates.insert(i, (face.clone(), voice.clone()));
            let device = DeviceState::enroll(p.subject.clone(), device_config, face, voice, table.clone(), device_seed);
            devices.insert(i, device);
        }
        let wall = WallClock {
            setup_ms: started.elapsed().as_secs_f64() * 1e3,
            ..WallClock::default()
        };
        Self {
            scenario,
            options,
            now: SimTime::ZERO,
            seq: 0,
            queue: BTreeMap::new(),
            ticks: BTreeSet::new(),
            profiles,
            enrolled_templates,
            dash,
            devices,
            links,
            capture_rng: stream_rng(seed, stream::CAPTURES),
            link_rng: stream_rng(seed, stream::LINKS),
            inputs: Vec::new(),
            command_scheduled: false,
            command: None,
            enrolled_at: BTreeMap::new(),
            enrollment_transfer: BTreeMap::new(),
            enrollment_frame_bytes: None,
            payment_requested: None,
            payment_done: None,
            traffic: BTreeMap::new(),
            trace: Vec::new(),
            digest: Sha256::new(),
            dashcam_received: Vec::new(),
            wall,
        }
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        self.queue.insert((at, self.seq), event);
        self.seq += 1;
    }

    fn run(mut self) -> Result<RideRun, SimError> {
        let started = Instant::now();
        for p in self.devices.keys().copied().collect::<Vec<_>>() {
            let frames = self.devices.get_mut(&p).expect("present").handle(SimTime::ZERO, DeviceEvent::Connect);
            for f in frames {
                self.send(p, Direction::ToDashcam, f);
            }
        }
        for c in &self.scenario.captures {
            let at = SimTime::from_secs_f64(c.at_s);
            self.schedule(
                at,
                Event::Capture {
                    present: c.present.clone(),
                    sigma: c.sigma,
                },
            );
        }
        if let Some(at) = self.scenario.command.as_ref().and_then(|c| c.at_s) {
            self.command_scheduled = true;
            self.schedule(SimTime::from_secs_f64(at), Event::Command);
        }

        let mut processed = 0usize;
        loop {
            let Some(((at, _), event)) = self.queue.pop_first() else {
                if self.scenario.command.is_some() && !self.command_scheduled {
                    self.command_scheduled = true;
                    self.schedule(self.now, Event::Command);
                    continue;
                }
                break;
            };
            processed += 1;
            if processed > MAX_EVENTS {
                return Err(SimError::Runaway(MAX_EVENTS));
            }
            if matches!(event, Event::Tick) {
                self.ticks.remove(&at);
                // Stale timer: its challenges were answered in time.
                if self.dash.next_deadline().is_none_or(|d| d > at) {
                    continue;
                }
            }
            self.now = at;
            self.dispatch(event);
        }
        self.wall.total_ms = started.elapsed().as_secs_f64() * 1e3 + self.wall.setup_ms;
        Ok(self.finish())
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::ToDashcam { passenger, frame } => {
                self.dashcam_received.extend_from_slice(&frame);
                let event = DashcamEvent::Frame {
                    link: LinkId(passenger as u32),
                    bytes: frame,
                };
                self.dashcam(event);
                self.note_enrollment(passenger);
            }
            Event::ToDevice { passenger, frame } => {
                let t = Instant::now();
                let Some(device) = self.devices.get_mut(&passenger) else {
                    return;
                };
                let replies = device.handle(self.now, DeviceEvent::Frame(frame));
                self.wall.devices_ms += t.elapsed().as_secs_f64() * 1e3;
                for f in replies {
                    self.send(passenger, Direction::ToDashcam, f);
                }
            }
            Event::Capture { present, sigma } => self.capture(&present, sigma),
            Event::Command => self.spoken_command(),
            Event::Tick => self.dashcam(DashcamEvent::Tick),
        }
    }

    fn dashcam(&mut self, event: DashcamEvent) {
        let t = Instant::now();
        let receipts = self.dash.receipts().len();
        let out = self.dash.handle(self.now, event);
        self.wall.dashcam_ms += t.elapsed().as_secs_f64() * 1e3;
        if self.dash.receipts().len() > receipts {
            self.payment_done = Some(self.now);
        }
        self.route(out);
    }

    fn route(&mut self, out: Vec<Outbound>) {
        for o in out {
            if o.frame.get(4) == Some(&MessageType::PaymentRequest.code()) {
                self.payment_requested = Some(self.now);
            }
            self.send(o.link.0 as usize, Direction::ToDevice, o.frame);
        }
        if let Some(deadline) = self.dash.next_deadline() {
            let at = deadline.max(self.now);
            if self.ticks.insert(at) {
                self.schedule(at, Event::Tick);
            }
        }
    }

    fn note_enrollment(&mut self, passenger: usize) {
        if self.enrolled_at.contains_key(&passenger) {
            return;
        }
        let Some(id) = self.devices.get(&passenger).and_then(|d| d.device_id()) else {
            return;
        };
        if !self.dash.is_enrolled(id) {
            return;
        }
        self.enrolled_at.insert(passenger, self.now);
        if self.scenario.prescreen_on_enroll {
            let everyone = (0..self.scenario.passengers.len()).collect();
            self.schedule(
                self.now,
                Event::Capture {
                    present: everyone,
                    sigma: None,
                },
            );
        }
    }

    fn send(&mut self, passenger: usize, direction: Direction, frame: Vec<u8>) {
        let link = self.links.get_mut(&passenger).expect("devices have links");
        let profile = link.profile;
        let free = match direction {
            Direction::ToDashcam => &mut link.uplink_free,
            Direction::ToDevice => &mut link.downlink_free,
        };
        let start = (*free).max(self.now);
        let done = start.saturating_add(SimTime::from_secs_f64(frame.len() as f64 / profile.bandwidth));
        *free = done;
        let arrival = done.saturating_add(SimTime::from_secs_f64(profile.latency));
        let dropped = profile.drop_probability > 0.0
            && (self.link_rng.next_u64() as f64 / u64::MAX as f64) < profile.drop_probability;

        let kind = frame
            .get(4)
            .and_then(|c| MessageType::from_code(*c))
            .map_or("unknown", MessageType::name);
        if kind == MessageType::EnrollmentTransfer.name() && direction == Direction::ToDashcam {
            self.enrollment_transfer.insert(passenger, profile.simulate_transfer(frame.len()));
            self.enrollment_frame_bytes.get_or_insert(frame.len());
        }
        let stats = self.traffic.entry(kind.to_string()).or_default();
        stats.frames += 1;
        stats.bytes += frame.len() as u64;
        stats.dropped += u64::from(dropped);

        self.digest.update(self.now.0.to_be_bytes());
        self.digest.update([direction as u8, u8::from(dropped)]);
        self.digest.update((passenger as u32).to_be_bytes());
        self.digest.update((frame.len() as u32).to_be_bytes());
        self.digest.update(&frame);
        self.trace.push(TraceEntry {
            sent: self.now,
            direction,
            passenger,
            frame: frame.clone(),
            delivered: !dropped,
        });
        if !dropped {
            let event = match direction {
                Direction::ToDashcam => Event::ToDashcam { passenger, frame },
                Direction::ToDevice => Event::ToDevice { passenger, frame },
            };
            self.schedule(arrival, event);
        }
    }

    fn observe(&mut self, passenger: usize, modality: Modality, sigma: Option<f64>) -> QuantizedTemplate {
        let mut profile = self.profiles[passenger].clone();
        if let Some(s) = sigma {
            profile.sigma = s;
        }
        let e = sample_observation(&profile, modality, &mut self.capture_rng);
        quantize(&e, self.scenario.scale).expect("validated scale")
    }

    fn capture(&mut self, present: &[usize], sigma: Option<f64>) {
        let probes: Vec<QuantizedTemplate> = present
            .iter()
            .map(|p| self.observe(*p, Modality::Face, sigma))
            .collect();
        self.inputs.push(RoundInput {
            kind: RoundKind::Prescreen,
            probes: probes.clone(),
            subjects: present.to_vec(),
        });
        self.dashcam(DashcamEvent::FaceCapture(probes));
    }

    fn spoken_command(&mut self) {
        let spoken = self.scenario.command.clone().expect("scheduled only with a command");
        let mut view = CommandView {
            transcript: spoken.transcript.clone(),
            speaker: spoken.speaker,
            triggered: false,
            parsed: None,
            error: None,
        };
        if detect_trigger(&spoken.transcript) == Trigger::NotTriggered {
            self.command = Some(view);
            return;
        }
        view.triggered = true;
        match parse_command(&spoken.transcript, &Dictionary::default()) {
            Ok(cmd) => {
                let details = PaymentDetails {
                    use_case: cmd.use_case,
                    slot: cmd.slot,
                    merchant: self.scenario.merchant.clone(),
                };
                view.parsed = Some(cmd);
                self.command = Some(view);
                if self.scenario.refresh_prescreen_on_pay {
                    let everyone: Vec<usize> = (0..self.scenario.passengers.len()).collect();
                    self.capture(&everyone, None);
                }
                let voice = self.observe(spoken.speaker, Modality::Voice, spoken.sigma);
                self.inputs.push(RoundInput {
                    kind: RoundKind::Identify,
                    probes: vec![voice.clone()],
                    subjects: vec![spoken.speaker],
                });
                self.dashcam(DashcamEvent::PaymentTrigger { voice, details });
            }
            Err(e) => {
                view.error = Some(e.to_string());
                self.command = Some(view);
            }
        }
    }

    fn passenger_of(&self) -> BTreeMap<DeviceId, usize> {
        self.devices
            .iter()
            .filter_map(|(p, d)| d.device_id().map(|id| (id, *p)))
            .collect()
    }

    fn finish(self) -> RideRun {
        let scenario = self.scenario;
        let owners = self.passenger_of();
        let audits: Vec<RoundAudit> = self
            .dash
            .decisions()
            .iter()
            .flat_map(|d| d.rounds.iter().cloned())
            .chain(self.dash.open_rounds().iter().cloned())
            .collect();

        let mut rounds = Vec::new();
        let mut comparisons = ComparisonCounts::default();
        let mut oracle_comparisons = ComparisonCounts::default();
        let mut oracle_rounds = Vec::new();
        let face_t = scenario.face_threshold().value();
        let voice_t = scenario.voice_threshold().value();
        for (audit, input) in audits.iter().zip(&self.inputs) {
            debug_assert_eq!(audit.kind, input.kind);
            let mut view = RoundView {
                kind: audit.kind,
                started_s: secs(audit.started),
                finished_s: secs(audit.finished),
                probes: input.probes.len(),
                challenges: audit.challenges.len(),
                matches: 0,
                non_matches: 0,
                invalid: 0,
                timed_out: 0,
            };
            let mut answered = BTreeSet::new();
            let mut targets = BTreeSet::new();
            for r in &audit.challenges {
                let passenger = owners[&r.device];
                targets.insert(passenger);
                match r.outcome {
                    ChallengeOutcome::Match => view.matches += 1,
                    ChallengeOutcome::NonMatch => view.non_matches += 1,
                    ChallengeOutcome::Invalid => view.invalid += 1,
                    ChallengeOutcome::TimedOut => view.timed_out += 1,
                }
                if !matches!(r.outcome, ChallengeOutcome::Match | ChallengeOutcome::NonMatch) {
                    continue;
                }
                answered.insert((passenger, r.probe));
                let probe = &input.probes[r.probe as usize];
                let genuine = input.subjects[r.probe as usize] == passenger;
                comparisons
                    .get_mut(r.modality)
                    .add(genuine, r.outcome == ChallengeOutcome::Match);
                let (face, voice) = &self.enrolled_templates[&passenger];
                let (enrolled, t) = match r.modality {
                    Modality::Face => (face, face_t),
                    Modality::Voice => (voice, voice_t),
                };
                let score = dashcam_pay_core::embedding::inner_product_int(enrolled, probe).expect("same shape");
                oracle_comparisons.get_mut(r.modality).add(genuine, score > t);
            }
            rounds.push(view);
            oracle_rounds.push(match audit.kind {
                RoundKind::Prescreen => OracleRound::Prescreen {
                    targets: targets.into_iter().collect(),
                    probes: input.probes.clone(),
                    answered,
                },
                RoundKind::Identify => OracleRound::Identify {
                    probe: input.probes[0].clone(),
                    answered: answered.into_iter().map(|(p, _)| p).collect(),
                },
            });
        }

        let oracle = PlaintextOracle {
            faces: self.enrolled_templates.iter().map(|(p, (f, _))| (*p, f.clone())).collect(),
            voices: self.enrolled_templates.iter().map(|(p, (_, v))| (*p, v.clone())).collect(),
            face_threshold: face_t,
            voice_threshold: voice_t,
        };
        let oracle_decision = oracle.run(&oracle_rounds).pop();
        let decision = self.dash.decisions().last().map(|d| {
            let mut matched: Vec<usize> = d.matched.iter().map(|id| owners[id]).collect();
            matched.sort_unstable();
            let mut candidates: Vec<usize> = d.candidates.iter().map(|id| owners[id]).collect();
            candidates.sort_unstable();
            DecisionView {
                outcome: Decision::from_matches(&matched),
                matched,
                candidates,
            }
        });
        let oracle_agrees = decision == oracle_decision;

        let expected_payer = scenario
            .command
            .as_ref()
            .map(|c| c.speaker)
            .filter(|s| self.enrolled_templates.contains_key(s));

        let receipt = self.dash.receipts().last().map(|r| ReceiptView {
            passenger: owners[&r.device],
            use_case: r.details.use_case,
            slot: r.details.slot,
            merchant: r.details.merchant.clone(),
            digest: hex::encode(r.receipt),
        });

        let prescreen_s = rounds
            .iter()
            .filter(|r| r.kind == RoundKind::Prescreen)
            .map(|r| r.finished_s - r.started_s)
            .sum();
        let identification_s = rounds
            .iter()
            .rev()
            .find(|r| r.kind == RoundKind::Identify)
            .map(|r| r.finished_s - r.started_s);
        let timings = SimTimings {
            enrollment_s: self.enrolled_at.iter().map(|(p, t)| (*p, secs(*t))).collect(),
            enrollment_transfer_s: self.enrollment_transfer.clone(),
            enrollment_frame_bytes: self.enrollment_frame_bytes,
            prescreen_s,
            identification_s,
            payment_s: self
                .payment_requested
                .zip(self.payment_done)
                .map(|(a, b)| secs(b) - secs(a)),
            total_s: secs(self.now),
        };

        let expansion = expansion::<G>(scenario.dimension, scenario.scale);
        let mut audit: Vec<AuditRecord> = self.dash.audit().to_vec();
        for d in self.devices.values() {
            audit.extend_from_slice(d.audit());
        }
        audit.sort_by_key(|r| r.time);

        let passengers = scenario
            .passengers
            .iter()
            .enumerate()
            .map(|(i, p)| PassengerView {
                subject: p.subject.clone(),
                has_device: p.has_device,
                enrolled: p.enrolled,
                device_id: self.devices.get(&i).and_then(|d| d.device_id()).map(|id| id.to_string()),
                transport: p.transport,
            })
            .collect();

        let report = RideReport {
            seed: scenario.seed,
            profile: scenario.profile,
            group: G::PARAMS.name.to_string(),
            dimension: scenario.dimension,
            scale: scenario.scale,
            thresholds: ThresholdView {
                face_cosine: scenario.thresholds.face,
                voice_cosine: scenario.thresholds.voice,
                face: face_t,
                voice: voice_t,
            },
            passengers,
            command: self.command,
            decision,
            oracle_decision,
            oracle_agrees,
            expected_payer,
            receipt,
            rounds,
            comparisons,
            oracle_comparisons,
            timings,
            total_bytes: self.traffic.values().map(|t| t.bytes).sum(),
            traffic: self.traffic,
            expansion,
            audit_records: audit.len(),
            trace_digest: hex::encode(self.digest.finalize()),
            wall_clock_ms: self.options.wall_clock.then_some(self.wall),
        };
        let mut device_secrets = Vec::new();
        let mut device_templates = Vec::new();
        for d in self.devices.values() {
            device_secrets.push(d.secret_key_bytes());
        }
        for (face, voice) in self.enrolled_templates.values() {
            for t in [face, voice] {
                device_templates.push(t.to_bytes());
                device_templates.push(t.value_bytes());
            }
        }
        RideRun {
            report,
            artifacts: RideArtifacts {
                audit,
                trace: self.trace,
                dashcam_received: self.dashcam_received,
                dashcam_snapshot: self.dash.snapshot_bytes(),
                device_secrets,
                device_templates,
            },
        }
    }
}

/// Expansion of one encrypted template under a throwaway key.
fn expansion<G: PrimeGroup>(dimension: usize, scale: i64) -> ExpansionView {
    let mut rng = stream_rng(0, 0);
    let keys = keygen::<G, _>(&mut rng);
    let zeros = QuantizedTemplate::zeros(Modality::Face, scale, dimension).expect("validated shape");
    let et = EncryptedTemplate::encrypt(keys.public(), 0, &zeros, &mut rng);
    ExpansionView {
        per_coordinate: coordinate_expansion::<G>(scale),
        template: ciphertext_expansion(&et, scale),
    }
}

impl From<ScenarioError> for SimError {
    fn from(e: ScenarioError) -> Self {
        SimError::Scenario(e)
    }
}
