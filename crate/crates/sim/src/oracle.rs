//! Plaintext reference pipeline: the same templates, thresholds and fusion
//! policy as the protocol, with integer inner products in the clear.

use std::collections::{BTreeMap, BTreeSet};

use dashcam_pay_core::embedding::{inner_product_int, QuantizedTemplate};
use serde::{Deserialize, Serialize};

/// Payer decision in terms of passenger indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    UniquePayer { passenger: usize },
    NoMatch,
    MultipleMatches,
}

impl Decision {
    pub fn from_matches(matched: &[usize]) -> Self {
        match matched {
            [p] => Decision::UniquePayer { passenger: *p },
            [] => Decision::NoMatch,
            _ => Decision::MultipleMatches,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Decision::UniquePayer { .. } => "unique_payer",
            Decision::NoMatch => "no_match",
            Decision::MultipleMatches => "multiple_matches",
        }
    }

    pub fn payer(&self) -> Option<usize> {
        match self {
            Decision::UniquePayer { passenger } => Some(*passenger),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionView {
    pub outcome: Decision,
    pub matched: Vec<usize>,
    pub candidates: Vec<usize>,
}

/// One round as scheduled by the ride: what was captured, and which
/// (passenger, probe) challenges were answered before their deadline.
#[derive(Debug, Clone)]
pub enum OracleRound {
    Prescreen {
        targets: Vec<usize>,
        probes: Vec<QuantizedTemplate>,
        answered: BTreeSet<(usize, u32)>,
    },
    Identify {
        probe: QuantizedTemplate,
        answered: BTreeSet<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct PlaintextOracle {
    pub faces: BTreeMap<usize, QuantizedTemplate>,
    pub voices: BTreeMap<usize, QuantizedTemplate>,
    pub face_threshold: i64,
    pub voice_threshold: i64,
}

impl PlaintextOracle {
    fn matches(enrolled: &QuantizedTemplate, probe: &QuantizedTemplate, t: i64) -> bool {
        inner_product_int(enrolled, probe).is_ok_and(|s| s > t)
    }

    /// Replays the rounds, returning one decision per identify round.
    pub fn run(&self, rounds: &[OracleRound]) -> Vec<DecisionView> {
        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        let mut decisions = Vec::new();
        for round in rounds {
            match round {
                OracleRound::Prescreen {
                    targets,
                    probes,
                    answered,
                } => {
                    for p in targets {
                        let Some(enrolled) = self.faces.get(p) else {
                            continue;
                        };
                        let outcomes: Vec<Option<bool>> = (0..probes.len())
                            .map(|k| {
                                answered.contains(&(*p, k as u32)).then(|| {
                                    Self::matches(enrolled, &probes[k], self.face_threshold)
                                })
                            })
                            .collect();
                        if outcomes.is_empty() {
                            continue;
                        }
                        if outcomes.contains(&Some(true)) {
                            candidates.insert(*p);
                        } else if outcomes.iter().all(|o| *o == Some(false)) {
                            candidates.remove(p);
                        }
                    }
                }
                OracleRound::Identify { probe, answered } => {
                    let matched: Vec<usize> = candidates
                        .iter()
                        .copied()
                        .filter(|p| answered.contains(p))
                        .filter(|p| {
                            self.voices
                                .get(p)
                                .is_some_and(|v| Self::matches(v, probe, self.voice_threshold))
                        })
                        .collect();
                    decisions.push(DecisionView {
                        outcome: Decision::from_matches(&matched),
                        matched,
                        candidates: candidates.iter().copied().collect(),
                    });
                }
            }
        }
        decisions
    }
}
