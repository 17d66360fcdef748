//! Repeated randomized rides with identification metrics.

use std::io::Write;
use std::str::FromStr;

use rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::{ComparisonCounts, RideReport};
use crate::runner::run_scenario;
use crate::scenario::{stream_rng, Scenario};
use crate::SimError;

/// Per-trial seed: trial `i` draws from stream `i + 1` of the batch seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    stream_rng(seed, trial + 1).next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Noise norm of every passenger.
    Sigma,
    FaceThreshold,
    VoiceThreshold,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Sigma => "sigma",
            SweepParam::FaceThreshold => "face_threshold",
            SweepParam::VoiceThreshold => "voice_threshold",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepParam::Sigma => scenario.passengers.iter_mut().for_each(|p| p.sigma = value),
            SweepParam::FaceThreshold => scenario.thresholds.face = value,
            SweepParam::VoiceThreshold => scenario.thresholds.voice = value,
        }
    }
}

/// `param=v1,v2,...`
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| SimError::Sweep(format!("{s:?}: {m}"));
        let (name, list) = s.split_once('=').ok_or_else(|| bad("expected param=v1,v2,..."))?;
        let param = match name.trim() {
            "sigma" => SweepParam::Sigma,
            "face_threshold" => SweepParam::FaceThreshold,
            "voice_threshold" => SweepParam::VoiceThreshold,
            _ => return Err(bad("unknown parameter (sigma, face_threshold, voice_threshold)")),
        };
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("values must be numbers")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Sweep { param, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub trial: u64,
    pub seed: u64,
    pub decision: Option<String>,
    pub payer: Option<usize>,
    pub expected_payer: Option<usize>,
    pub correct: Option<bool>,
    pub oracle_agrees: bool,
    pub face_genuine: u64,
    pub face_genuine_matches: u64,
    pub face_impostor: u64,
    pub face_impostor_matches: u64,
    pub voice_genuine: u64,
    pub voice_genuine_matches: u64,
    pub voice_impostor: u64,
    pub voice_impostor_matches: u64,
    pub simulated_s: f64,
}

impl TrialRow {
    fn new(sweep: Option<(SweepParam, f64)>, trial: u64, seed: u64, r: &RideReport) -> Self {
        let c = &r.comparisons;
        Self {
            sweep_param: sweep.map(|(p, _)| p.name().to_string()),
            sweep_value: sweep.map(|(_, v)| v),
            trial,
            seed,
            decision: r.decision.as_ref().map(|d| d.outcome.label().to_string()),
            payer: r.decision.as_ref().and_then(|d| d.outcome.payer()),
            expected_payer: r.expected_payer,
            correct: r.decision_correct(),
            oracle_agrees: r.oracle_agrees && r.comparisons == r.oracle_comparisons,
            face_genuine: c.face.genuine,
            face_genuine_matches: c.face.genuine_matches,
            face_impostor: c.face.impostor,
            face_impostor_matches: c.face.impostor_matches,
            voice_genuine: c.voice.genuine,
            voice_genuine_matches: c.voice.genuine_matches,
            voice_impostor: c.voice.impostor,
            voice_impostor_matches: c.voice.impostor_matches,
            simulated_s: r.timings.total_s,
        }
    }
}

/// Aggregate over the trials of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sweep_param: Option<String>,
    pub sweep_value: Option<f64>,
    pub trials: u64,
    pub face_tpir: Option<f64>,
    pub face_fpir: Option<f64>,
    pub voice_tpir: Option<f64>,
    pub voice_fpir: Option<f64>,
    pub oracle_face_tpir: Option<f64>,
    pub oracle_face_fpir: Option<f64>,
    pub oracle_voice_tpir: Option<f64>,
    pub oracle_voice_fpir: Option<f64>,
    pub counts: ComparisonCounts,
    pub decisions_scored: u64,
    pub decisions_correct: u64,
    pub accuracy: Option<f64>,
    /// Trials whose encrypted decision and comparisons equal the plaintext ones.
    pub oracle_agreements: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub summaries: Vec<Summary>,
    pub rows: Vec<TrialRow>,
}

/// Runs `trials` rides per sweep point, in parallel, each with its own
/// seed derived from `(seed, trial)`.
pub fn run_batch(template: &Scenario, trials: u64, seed: u64, sweep: Option<&Sweep>) -> Result<BatchResult, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let points: Vec<Option<(SweepParam, f64)>> = match sweep {
        Some(s) if !s.values.is_empty() => s.values.iter().map(|v| Some((s.param, *v))).collect(),
        Some(_) => return Err(SimError::Sweep("no values".into())),
        None => vec![None],
    };
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for point in points {
        let mut scenario = template.clone();
        if let Some((param, value)) = point {
            param.apply(&mut scenario, value);
        }
        scenario.validate()?;
        let results: Vec<(TrialRow, RideReport)> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut s = scenario.clone();
                s.seed = trial_seed(seed, trial);
                let report = run_scenario(&s)?.report;
                Ok((TrialRow::new(point, trial, s.seed, &report), report))
            })
            .collect::<Result<_, SimError>>()?;
        summaries.push(summarize(point, &results));
        rows.extend(results.into_iter().map(|(row, _)| row));
    }
    Ok(BatchResult { summaries, rows })
}

fn summarize(point: Option<(SweepParam, f64)>, results: &[(TrialRow, RideReport)]) -> Summary {
    let mut counts = ComparisonCounts::default();
    let mut oracle = ComparisonCounts::default();
    let mut scored = 0;
    let mut correct = 0;
    let mut agreements = 0;
    for (row, report) in results {
        counts.merge(&report.comparisons);
        oracle.merge(&report.oracle_comparisons);
        if let Some(c) = row.correct {
            scored += 1;
            correct += u64::from(c);
        }
        agreements += u64::from(row.oracle_agrees);
    }
    Summary {
        sweep_param: point.map(|(p, _)| p.name().to_string()),
        sweep_value: point.map(|(_, v)| v),
        trials: results.len() as u64,
        face_tpir: counts.face.tpir(),
        face_fpir: counts.face.fpir(),
        voice_tpir: counts.voice.tpir(),
        voice_fpir: counts.voice.fpir(),
        oracle_face_tpir: oracle.face.tpir(),
        oracle_face_fpir: oracle.face.fpir(),
        oracle_voice_tpir: oracle.voice.tpir(),
        oracle_voice_fpir: oracle.voice.fpir(),
        counts,
        decisions_scored: scored,
        decisions_correct: correct,
        accuracy: (scored > 0).then(|| correct as f64 / scored as f64),
        oracle_agreements: agreements,
    }
}

/// One CSV row per trial, with a header row.
pub fn write_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "sigma=0.1, 0.5".parse().unwrap();
        assert_eq!(s.param, SweepParam::Sigma);
        assert_eq!(s.values, vec![0.1, 0.5]);
        assert!("speed=1".parse::<Sweep>().is_err());
        assert!("sigma=a".parse::<Sweep>().is_err());
        assert!("sigma".parse::<Sweep>().is_err());
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..4).map(|t| trial_seed(7, t)).collect();
        let b: Vec<u64> = (0..4).map(|t| trial_seed(7, t)).collect();
        assert_eq!(a, b);
        let distinct: std::collections::BTreeSet<_> = a.iter().collect();
        assert_eq!(distinct.len(), 4);
    }
}
