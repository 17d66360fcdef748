//! Dashcam role: holds public keys and encrypted enrollment templates,
//! computes encrypted scores against captured probes, and validates the
//! devices' match proofs. It holds no key material capable of decryption.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::codec;
use crate::embedding::{score_bound, Modality, QuantizedTemplate};
use crate::group::PrimeGroup;
use crate::he::{encrypted_inner_product, Ciphertext, EncryptedTemplate, PublicKey};
use crate::zkp::{verify_match, ProofContext, Threshold, Verdict};

use super::wire::{decode, encode, PaymentDetails, ProtocolMessage, RecourseReason};
use super::{
    receipt_digest, AuditRecord, ChallengeOutcome, ChallengeRecord, DecisionOutcome, DeviceId,
    LinkId, Nonce, PayerDecision, RoundAudit, RoundKind, SimTime,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DashcamConfig {
    pub dimension: usize,
    pub scale: i64,
    /// Answer window per challenge. The n-th challenge queued to one device
    /// within a round gets `n` windows, since answers share one FIFO link.
    pub challenge_timeout: SimTime,
}

impl DashcamConfig {
    pub fn bound(&self) -> i64 {
        score_bound(self.dimension, self.scale)
    }
}

impl Default for DashcamConfig {
    fn default() -> Self {
        Self {
            dimension: crate::embedding::DEFAULT_DIMENSION,
            scale: crate::embedding::DEFAULT_SCALE,
            challenge_timeout: SimTime(5_000_000),
        }
    }
}

#[derive(Debug, Clone)]
pub enum DashcamEvent {
    /// A frame arrived on a link.
    Frame { link: LinkId, bytes: Vec<u8> },
    /// Face templates extracted from one in-cabin capture.
    FaceCapture(Vec<QuantizedTemplate>),
    /// A parsed payment command and the speaker's voice probe.
    PaymentTrigger {
        voice: QuantizedTemplate,
        details: PaymentDetails,
    },
    /// Clock advanced; expire overdue challenges.
    Tick,
}

/// Frame to send on a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbound {
    pub link: LinkId,
    pub frame: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentReceipt {
    pub device: DeviceId,
    pub details: PaymentDetails,
    pub receipt: [u8; 32],
}

#[derive(Debug, Clone)]
struct Enrollment<G: PrimeGroup> {
    public_key: PublicKey<G>,
    face: EncryptedTemplate<G>,
    voice: EncryptedTemplate<G>,
}

#[derive(Debug, Clone)]
struct RosterEntry<G: PrimeGroup> {
    link: LinkId,
    enrollment: Option<Enrollment<G>>,
}

#[derive(Debug, Clone)]
struct PendingChallenge<G: PrimeGroup> {
    device: DeviceId,
    modality: Modality,
    probe: u32,
    ciphertext: Ciphertext<G>,
    deadline: SimTime,
}

#[derive(Debug, Clone)]
enum RoundRequest {
    Prescreen(Vec<QuantizedTemplate>),
    Identify {
        voice: QuantizedTemplate,
        details: PaymentDetails,
    },
}

#[derive(Debug, Clone)]
struct ActiveRound {
    id: u64,
    kind: RoundKind,
    details: Option<PaymentDetails>,
    started: SimTime,
    targets: Vec<DeviceId>,
    outstanding: BTreeSet<Nonce>,
    records: Vec<ChallengeRecord>,
}

#[derive(Debug, Clone)]
pub struct DashcamState<G: PrimeGroup> {
    config: DashcamConfig,
    session_nonce: Nonce,
    rng: ChaCha20Rng,
    roster: BTreeMap<DeviceId, RosterEntry<G>>,
    links: BTreeMap<LinkId, DeviceId>,
    candidates: BTreeSet<DeviceId>,
    pending: BTreeMap<Nonce, PendingChallenge<G>>,
    closed: BTreeSet<Nonce>,
    active: Option<ActiveRound>,
    queue: VecDeque<RoundRequest>,
    next_round: u64,
    finished_rounds: Vec<RoundAudit>,
    decisions: Vec<PayerDecision>,
    awaiting_payment: Option<(DeviceId, PaymentDetails)>,
    receipts: Vec<PaymentReceipt>,
    audit: Vec<AuditRecord>,
}

impl<G: PrimeGroup> DashcamState<G> {
    pub fn new(config: DashcamConfig, seed: [u8; 32]) -> Self {
        let mut rng = ChaCha20Rng::from_seed(seed);
        let mut session_nonce = [0u8; 16];
        rng.fill_bytes(&mut session_nonce);
        Self {
            config,
            session_nonce,
            rng,
            roster: BTreeMap::new(),
            links: BTreeMap::new(),
            candidates: BTreeSet::new(),
            pending: BTreeMap::new(),
            closed: BTreeSet::new(),
            active: None,
            queue: VecDeque::new(),
            next_round: 1,
            finished_rounds: Vec::new(),
            decisions: Vec::new(),
            awaiting_payment: None,
            receipts: Vec::new(),
            audit: Vec::new(),
        }
    }

    pub fn config(&self) -> &DashcamConfig {
        &self.config
    }

    pub fn session_nonce(&self) -> &Nonce {
        &self.session_nonce
    }

    /// Devices that completed the handshake.
    pub fn roster(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.roster.keys().copied()
    }

    pub fn is_enrolled(&self, device: DeviceId) -> bool {
        self.roster
            .get(&device)
            .is_some_and(|e| e.enrollment.is_some())
    }

    pub fn device_for_link(&self, link: LinkId) -> Option<DeviceId> {
        self.links.get(&link).copied()
    }

    /// Candidate payer set.
    pub fn candidates(&self) -> &BTreeSet<DeviceId> {
        &self.candidates
    }

    pub fn decisions(&self) -> &[PayerDecision] {
        &self.decisions
    }

    pub fn receipts(&self) -> &[PaymentReceipt] {
        &self.receipts
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }

    /// Finished rounds not yet folded into a decision.
    pub fn open_rounds(&self) -> &[RoundAudit] {
        &self.finished_rounds
    }

    /// Rounds completed so far, including those folded into decisions.
    pub fn completed_rounds(&self) -> u64 {
        self.next_round - 1 - u64::from(self.active.is_some())
    }

    /// True when no round is running or queued.
    pub fn is_idle(&self) -> bool {
        self.active.is_none() && self.queue.is_empty()
    }

    /// Earliest challenge deadline, if any challenge is outstanding.
    pub fn next_deadline(&self) -> Option<SimTime> {
        self.pending.values().map(|p| p.deadline).min()
    }

    pub fn pending_challenges(&self) -> usize {
        self.pending.len()
    }

    /// Canonical dump of everything the dashcam stores.
    pub fn snapshot_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.session_nonce);
        codec::put_u32(&mut out, self.roster.len() as u32);
        for (id, entry) in &self.roster {
            codec::put_u64(&mut out, id.0);
            codec::put_u32(&mut out, entry.link.0);
            if let Some(e) = &entry.enrollment {
                e.public_key.element().write_bytes(&mut out);
                e.face.write_bytes(&mut out);
                e.voice.write_bytes(&mut out);
            }
        }
        for id in &self.candidates {
            codec::put_u64(&mut out, id.0);
        }
        for (nonce, p) in &self.pending {
            out.extend_from_slice(nonce);
            codec::put_u64(&mut out, p.device.0);
            codec::put_u8(&mut out, p.modality.code());
            p.ciphertext.write_bytes(&mut out);
        }
        for r in &self.receipts {
            out.extend_from_slice(&r.receipt);
        }
        out
    }

    /// Single transition entry point.
    pub fn handle(&mut self, now: SimTime, event: DashcamEvent) -> Vec<Outbound> {
        let mut out = Vec::new();
        match event {
            DashcamEvent::Frame { link, bytes } => self.on_frame(now, link, &bytes, &mut out),
            DashcamEvent::FaceCapture(faces) => {
                self.enqueue(now, RoundRequest::Prescreen(faces), &mut out)
            }
            DashcamEvent::PaymentTrigger { voice, details } => {
                self.enqueue(now, RoundRequest::Identify { voice, details }, &mut out)
            }
            DashcamEvent::Tick => self.expire(now, &mut out),
        }
        out
    }

    /// Starts (or queues) a face prescreen over every enrolled device.
    pub fn prescreen_faces(&mut self, now: SimTime, captured: Vec<QuantizedTemplate>) -> Vec<Outbound> {
        self.handle(now, DashcamEvent::FaceCapture(captured))
    }

    /// Starts (or queues) voice identification over the candidate set. The
    /// resulting [`PayerDecision`] appears in [`decisions`](Self::decisions)
    /// once every challenge is answered or expired.
    pub fn identify_payer(
        &mut self,
        now: SimTime,
        voice: QuantizedTemplate,
        details: PaymentDetails,
    ) -> Vec<Outbound> {
        self.handle(now, DashcamEvent::PaymentTrigger { voice, details })
    }

    fn log(&mut self, now: SimTime, event: &str, detail: String) {
        self.audit.push(AuditRecord {
            time: now,
            actor: "dashcam".to_string(),
            event: event.to_string(),
            detail,
        });
    }

    fn send(&self, link: LinkId, m: &ProtocolMessage<G>, out: &mut Vec<Outbound>) {
        out.push(Outbound {
            link,
            frame: encode(m),
        });
    }

    fn fresh_nonce(&mut self) -> Nonce {
        let mut n = [0u8; 16];
        loop {
            self.rng.fill_bytes(&mut n);
            if !self.pending.contains_key(&n) && !self.closed.contains(&n) {
                return n;
            }
        }
    }

    fn on_frame(&mut self, now: SimTime, link: LinkId, bytes: &[u8], out: &mut Vec<Outbound>) {
        let msg = match decode::<G>(bytes) {
            Ok(m) => m,
            Err(e) => {
                self.log(now, "decode_error", format!("link {}: {e}", link.0));
                return;
            }
        };
        match msg {
            ProtocolMessage::ConnectRequest => self.on_connect(now, link, out),
            ProtocolMessage::EnrollmentTransfer {
                device_id,
                public_key,
                face,
                voice,
            } => self.on_enrollment(now, link, device_id, public_key, face, voice, out),
            ProtocolMessage::ScoreProof { device_id, proof } => {
                self.on_proof(now, link, device_id, proof, out)
            }
            ProtocolMessage::PaymentAck { device_id, receipt } => {
                self.on_payment_ack(now, link, device_id, receipt)
            }
            ProtocolMessage::RecourseNotice { reason } => {
                let who = self.links.get(&link).map(|d| d.to_string());
                self.log(
                    now,
                    "device_recourse",
                    format!("link {} ({}): {reason:?}", link.0, who.as_deref().unwrap_or("unknown")),
                );
            }
            other => self.log(
                now,
                "unexpected_message",
                format!("link {}: {}", link.0, other.message_type().name()),
            ),
        }
    }

    fn on_connect(&mut self, now: SimTime, link: LinkId, out: &mut Vec<Outbound>) {
        let device_id = match self.links.get(&link).copied() {
            Some(id) => {
                self.log(now, "duplicate_connect", format!("{id} on link {}", link.0));
                id
            }
            None => {
                let id = loop {
                    let candidate = DeviceId(self.rng.next_u64());
                    if !self.roster.contains_key(&candidate) {
                        break candidate;
                    }
                };
                self.roster.insert(id, RosterEntry { link, enrollment: None });
                self.links.insert(link, id);
                self.log(now, "connect", format!("{id} on link {}", link.0));
                id
            }
        };
        let accept = ProtocolMessage::ConnectAccept {
            device_id,
            session_nonce: self.session_nonce,
        };
        self.send(link, &accept, out);
    }

    #[allow(clippy::too_many_arguments)]
    fn on_enrollment(
        &mut self,
        now: SimTime,
        link: LinkId,
        device_id: DeviceId,
        public_key: PublicKey<G>,
        face: EncryptedTemplate<G>,
        voice: EncryptedTemplate<G>,
        out: &mut Vec<Outbound>,
    ) {
        if self.links.get(&link) != Some(&device_id) {
            self.log(now, "enrollment_rejected", format!("{device_id} not bound to link {}", link.0));
            return;
        }
        let d = self.config.dimension;
        if face.modality != Modality::Face
            || voice.modality != Modality::Voice
            || face.dimension() != d
            || voice.dimension() != d
        {
            self.log(now, "enrollment_rejected", format!("{device_id}: template shape"));
            let notice = ProtocolMessage::RecourseNotice {
                reason: RecourseReason::ProtocolViolation,
            };
            self.send(link, &notice, out);
            return;
        }
        let entry = self.roster.get_mut(&device_id).expect("linked devices are on the roster");
        let event = if entry.enrollment.is_some() { "re_enrollment" } else { "enrollment" };
        entry.enrollment = Some(Enrollment { public_key, face, voice });
        self.log(now, event, device_id.to_string());
    }

    fn enqueue(&mut self, now: SimTime, req: RoundRequest, out: &mut Vec<Outbound>) {
        self.queue.push_back(req);
        self.advance(now, out);
    }

    /// Starts queued rounds until one is left waiting on devices.
    fn advance(&mut self, now: SimTime, out: &mut Vec<Outbound>) {
        while self.active.is_none() {
            let Some(req) = self.queue.pop_front() else {
                return;
            };
            self.start_round(now, req, out);
            if self
                .active
                .as_ref()
                .is_some_and(|r| r.outstanding.is_empty())
            {
                self.finish_round(now, out);
            }
        }
    }

    fn start_round(&mut self, now: SimTime, req: RoundRequest, out: &mut Vec<Outbound>) {
        let id = self.next_round;
        self.next_round += 1;
        let (kind, probes, details, targets): (_, Vec<QuantizedTemplate>, _, Vec<DeviceId>) = match req {
            RoundRequest::Prescreen(faces) => {
                let targets = self
                    .roster
                    .iter()
                    .filter(|(_, e)| e.enrollment.is_some())
                    .map(|(id, _)| *id)
                    .collect();
                (RoundKind::Prescreen, faces, None, targets)
            }
            RoundRequest::Identify { voice, details } => {
                let targets = self
                    .candidates
                    .iter()
                    .copied()
                    .filter(|d| self.is_enrolled(*d))
                    .collect();
                (RoundKind::Identify, alloc::vec![voice], Some(details), targets)
            }
        };
        let modality = match kind {
            RoundKind::Prescreen => Modality::Face,
            RoundKind::Identify => Modality::Voice,
        };
        self.log(
            now,
            "round_start",
            format!("round {id} {kind:?}: {} probes x {} devices", probes.len(), targets.len()),
        );
        let mut round = ActiveRound {
            id,
            kind,
            details,
            started: now,
            targets: targets.clone(),
            outstanding: BTreeSet::new(),
            records: Vec::new(),
        };
        for device in targets {
            for (n, probe) in probes.iter().enumerate() {
                if probe.modality() != modality {
                    self.log(now, "probe_rejected", format!("round {id}: {} probe", probe.modality()));
                    continue;
                }
                let (link, pk, encrypted) = {
                    let entry = &self.roster[&device];
                    let e = entry.enrollment.as_ref().expect("targets are enrolled");
                    let et = match modality {
                        Modality::Face => &e.face,
                        Modality::Voice => &e.voice,
                    };
                    (entry.link, e.public_key, encrypted_inner_product(et, probe))
                };
                let ciphertext = match encrypted {
                    Ok(ct) => ct.rerandomize(&pk, &mut self.rng),
                    Err(err) => {
                        self.log(now, "probe_rejected", format!("round {id} {device}: {err}"));
                        continue;
                    }
                };
                let nonce = self.fresh_nonce();
                let window = self.config.challenge_timeout.0.saturating_mul(n as u64 + 1);
                self.pending.insert(
                    nonce,
                    PendingChallenge {
                        device,
                        modality,
                        probe: n as u32,
                        ciphertext,
                        deadline: now.saturating_add(SimTime(window)),
                    },
                );
                round.outstanding.insert(nonce);
                let challenge = ProtocolMessage::ScoreChallenge {
                    modality,
                    round_nonce: nonce,
                    ciphertext,
                };
                self.send(link, &challenge, out);
            }
        }
        self.active = Some(round);
    }

    fn on_proof(
        &mut self,
        now: SimTime,
        link: LinkId,
        device_id: DeviceId,
        proof: crate::zkp::MatchProof<G>,
        out: &mut Vec<Outbound>,
    ) {
        let nonce = proof.context.round_nonce;
        let Some(pending) = self.pending.get(&nonce) else {
            let why = if self.closed.contains(&nonce) { "replayed_proof" } else { "unknown_proof" };
            self.log(now, why, format!("{device_id} on link {}", link.0));
            return;
        };
        if pending.device != device_id || self.links.get(&link) != Some(&device_id) {
            self.log(now, "misrouted_proof", format!("{device_id} on link {}", link.0));
            return;
        }
        let pending = self.pending.remove(&nonce).expect("present");
        self.closed.insert(nonce);
        let enrollment = self.roster[&device_id]
            .enrollment
            .as_ref()
            .expect("challenged devices are enrolled");
        let bound = self.config.bound();
        let context = ProofContext {
            device_id: device_id.0,
            modality: pending.modality,
            round_nonce: nonce,
        };
        // Thresholds are device policy; the proof is checked against the
        // threshold it declares.
        let verdict = match Threshold::new(proof.threshold, bound) {
            Ok(t) => verify_match(&enrollment.public_key, &pending.ciphertext, t, &proof, &context, bound),
            Err(_) => Verdict::Invalid,
        };
        let outcome = match verdict {
            Verdict::Match => ChallengeOutcome::Match,
            Verdict::NonMatch => ChallengeOutcome::NonMatch,
            Verdict::Invalid => ChallengeOutcome::Invalid,
        };
        self.log(now, "proof", format!("{device_id} {}: {outcome:?}", pending.modality));
        self.record(now, nonce, device_id, pending.modality, pending.probe, outcome, out);
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        now: SimTime,
        nonce: Nonce,
        device: DeviceId,
        modality: Modality,
        probe: u32,
        outcome: ChallengeOutcome,
        out: &mut Vec<Outbound>,
    ) {
        let Some(round) = self.active.as_mut() else {
            return;
        };
        if round.outstanding.remove(&nonce) {
            round.records.push(ChallengeRecord {
                device,
                modality,
                probe,
                outcome,
            });
        }
        if round.outstanding.is_empty() {
            self.finish_round(now, out);
            self.advance(now, out);
        }
    }

    fn expire(&mut self, now: SimTime, out: &mut Vec<Outbound>) {
        let overdue: Vec<Nonce> = self
            .pending
            .iter()
            .filter(|(_, p)| p.deadline <= now)
            .map(|(n, _)| *n)
            .collect();
        for nonce in overdue {
            let p = self.pending.remove(&nonce).expect("present");
            self.closed.insert(nonce);
            self.log(now, "challenge_timeout", format!("{} {}", p.device, p.modality));
            self.record(now, nonce, p.device, p.modality, p.probe, ChallengeOutcome::TimedOut, out);
        }
    }

    fn finish_round(&mut self, now: SimTime, out: &mut Vec<Outbound>) {
        let round = self.active.take().expect("active round");
        let audit = RoundAudit {
            round: round.id,
            kind: round.kind,
            started: round.started,
            finished: now,
            challenges: round.records.clone(),
        };
        self.finished_rounds.push(audit);
        match round.kind {
            RoundKind::Prescreen => self.update_candidates(now, &round),
            RoundKind::Identify => self.decide(now, round, out),
        }
    }

    /// Any validated face match admits a device; validated non-matches on
    /// every probe remove it. Invalid or missing answers leave membership
    /// unchanged.
    fn update_candidates(&mut self, now: SimTime, round: &ActiveRound) {
        for device in &round.targets {
            let outcomes: Vec<ChallengeOutcome> = round
                .records
                .iter()
                .filter(|r| r.device == *device)
                .map(|r| r.outcome)
                .collect();
            if outcomes.is_empty() {
                continue;
            }
            if outcomes.contains(&ChallengeOutcome::Match) {
                if self.candidates.insert(*device) {
                    self.log(now, "candidate_added", device.to_string());
                }
            } else if outcomes.iter().all(|o| *o == ChallengeOutcome::NonMatch) {
                if self.candidates.remove(device) {
                    self.log(now, "candidate_removed", device.to_string());
                }
            } else {
                self.log(now, "candidate_unchanged", format!("{device}: {outcomes:?}"));
            }
        }
    }

    fn decide(&mut self, now: SimTime, round: ActiveRound, out: &mut Vec<Outbound>) {
        let matched: Vec<DeviceId> = round
            .records
            .iter()
            .filter(|r| r.outcome == ChallengeOutcome::Match)
            .map(|r| r.device)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let outcome = match matched.as_slice() {
            [payer] => DecisionOutcome::UniquePayer(*payer),
            [] => DecisionOutcome::NoMatch,
            _ => DecisionOutcome::MultipleMatches,
        };
        let details = round.details.expect("identify rounds carry details");
        match outcome {
            DecisionOutcome::UniquePayer(payer) => {
                let link = self.roster[&payer].link;
                self.awaiting_payment = Some((payer, details.clone()));
                let req = ProtocolMessage::PaymentRequest {
                    device_id: payer,
                    details,
                };
                self.send(link, &req, out);
            }
            DecisionOutcome::NoMatch | DecisionOutcome::MultipleMatches => {
                let reason = if outcome == DecisionOutcome::NoMatch {
                    RecourseReason::NoMatch
                } else {
                    RecourseReason::MultipleMatches
                };
                // Notify every connected device so the passengers can retry.
                let links: Vec<LinkId> = self.roster.values().map(|e| e.link).collect();
                for link in links {
                    self.send(link, &ProtocolMessage::RecourseNotice { reason }, out);
                }
            }
        }
        self.log(now, "decision", format!("{outcome:?} matched={}", matched.len()));
        let decision = PayerDecision {
            outcome,
            matched,
            candidates: round.targets,
            rounds: core::mem::take(&mut self.finished_rounds),
        };
        self.decisions.push(decision);
    }

    fn on_payment_ack(&mut self, now: SimTime, link: LinkId, device_id: DeviceId, receipt: [u8; 32]) {
        let expected = match &self.awaiting_payment {
            Some((payer, details)) if *payer == device_id && self.links.get(&link) == Some(payer) => {
                receipt_digest(&self.session_nonce, device_id, details)
            }
            _ => {
                self.log(now, "unexpected_payment_ack", device_id.to_string());
                return;
            }
        };
        if expected != receipt {
            self.log(now, "bad_receipt", device_id.to_string());
            return;
        }
        let (device, details) = self.awaiting_payment.take().expect("checked");
        self.log(now, "payment_complete", device.to_string());
        self.receipts.push(PaymentReceipt {
            device,
            details,
            receipt,
        });
    }
}
