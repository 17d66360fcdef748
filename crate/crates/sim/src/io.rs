//! File formats: embedding fixtures, dictionaries, command corpora and
//! audit logs.

use std::io::{BufRead, Write};
use std::path::Path;

use dashcam_pay_core::command::{parse_command, Dictionary, UseCase};
use dashcam_pay_core::embedding::Embedding;
use dashcam_pay_core::protocol::AuditRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{path}: dictionary has no words")]
    EmptyDictionary { path: String },
    #[error("{path}:{line}: bad annotation {text:?} (expected `use_case [slot]`)")]
    Annotation { path: String, line: usize, text: String },
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// JSON array of `{"modality": ..., "values": [...]}`.
pub fn load_embeddings(path: &Path) -> Result<Vec<Embedding>, FormatError> {
    serde_json::from_str(&read(path)?).map_err(|e| FormatError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_embeddings<W: Write>(embeddings: &[Embedding], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, embeddings)?;
    writeln!(out)
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary, FormatError> {
    Dictionary::parse(&read(path)?).ok_or_else(|| FormatError::EmptyDictionary {
        path: path.display().to_string(),
    })
}

/// Expected parse of a corpus line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub use_case: UseCase,
    pub slot: Option<u64>,
}

impl Expected {
    /// `use_case [slot]`, e.g. `fast_food 120` or `toll`.
    pub fn parse(text: &str) -> Option<Self> {
        let mut parts = text.split_whitespace();
        let use_case = match parts.next()? {
            "fuel" => UseCase::Fuel,
            "toll" => UseCase::Toll,
            "parking" => UseCase::Parking,
            "fast_food" => UseCase::FastFood,
            _ => return None,
        };
        let slot = match parts.next() {
            Some(s) => Some(s.parse().ok()?),
            None => None,
        };
        if parts.next().is_some() || use_case.has_slot() != slot.is_some() {
            return None;
        }
        Some(Self { use_case, slot })
    }

    pub fn render(&self) -> String {
        match self.slot {
            Some(s) => format!("{} {s}", self.use_case),
            None => self.use_case.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub line: usize,
    pub transcript: String,
    pub expected: Option<Expected>,
}

/// One transcript per line, optionally followed by a tab and the expected
/// parse. Blank lines and lines starting with `#` are skipped.
pub fn parse_corpus(text: &str, path: &str) -> Result<Vec<CorpusEntry>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let (transcript, expected) = match raw.split_once('\t') {
            Some((t, e)) => {
                let parsed = Expected::parse(e).ok_or_else(|| FormatError::Annotation {
                    path: path.to_string(),
                    line: i + 1,
                    text: e.to_string(),
                })?;
                (t, Some(parsed))
            }
            None => (raw, None),
        };
        out.push(CorpusEntry {
            line: i + 1,
            transcript: transcript.to_string(),
            expected,
        });
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, FormatError> {
    parse_corpus(&read(path)?, &path.display().to_string())
}

pub fn write_corpus<W: Write>(entries: &[CorpusEntry], mut out: W) -> std::io::Result<()> {
    for e in entries {
        match &e.expected {
            Some(x) => writeln!(out, "{}\t{}", e.transcript, x.render())?,
            None => writeln!(out, "{}", e.transcript)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMismatch {
    pub line: usize,
    pub transcript: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub sentences: usize,
    pub annotated: usize,
    pub parsed: usize,
    pub correct: usize,
    /// Correct over annotated.
    pub accuracy: Option<f64>,
    pub mismatches: Vec<CorpusMismatch>,
}

pub fn evaluate_corpus(entries: &[CorpusEntry], dict: &Dictionary) -> CorpusReport {
    let mut report = CorpusReport {
        sentences: entries.len(),
        annotated: 0,
        parsed: 0,
        correct: 0,
        accuracy: None,
        mismatches: Vec::new(),
    };
    for e in entries {
        let result = parse_command(&e.transcript, dict);
        report.parsed += usize::from(result.is_ok());
        let Some(expected) = e.expected else {
            continue;
        };
        report.annotated += 1;
        let got = result.as_ref().map(|c| Expected {
            use_case: c.use_case,
            slot: c.slot,
        });
        if got.as_ref() == Ok(&expected) {
            report.correct += 1;
        } else {
            report.mismatches.push(CorpusMismatch {
                line: e.line,
                transcript: e.transcript.clone(),
                expected: expected.render(),
                got: match got {
                    Ok(g) => g.render(),
                    Err(err) => format!("error: {err}"),
                },
            });
        }
    }
    report.accuracy = (report.annotated > 0).then(|| report.correct as f64 / report.annotated as f64);
    report
}

/// One JSON object per line.
pub fn write_audit_jsonl<W: Write>(records: &[AuditRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_audit_jsonl<R: BufRead>(input: R) -> Result<Vec<AuditRecord>, serde_json::Error> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| serde_json::from_str(&l.map_err(serde_json::Error::io)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use dashcam_pay_core::protocol::SimTime;

    #[test]
    fn annotations() {
        assert_eq!(
            Expected::parse("fast_food 120"),
            Some(Expected {
                use_case: UseCase::FastFood,
                slot: Some(120)
            })
        );
        assert_eq!(Expected::parse("toll").unwrap().render(), "toll");
        assert_eq!(Expected::parse("toll 3"), None);
        assert_eq!(Expected::parse("fuel"), None);
        assert_eq!(Expected::parse("boat 1"), None);
    }

    #[test]
    fn corpus_roundtrip_and_scoring() {
        let text = "# header\nhey dashcam pay for toll\ttoll\n\nhey dashcam pay for gas at pump six\tfuel 7\nhey dashcam\n";
        let entries = parse_corpus(text, "c").unwrap();
        assert_eq!(entries.len(), 3);
        let mut buf = Vec::new();
        write_corpus(&entries, &mut buf).unwrap();
        let again = parse_corpus(std::str::from_utf8(&buf).unwrap(), "c").unwrap();
        assert_eq!(
            entries.iter().map(|e| (&e.transcript, e.expected)).collect::<Vec<_>>(),
            again.iter().map(|e| (&e.transcript, e.expected)).collect::<Vec<_>>()
        );
        let report = evaluate_corpus(&entries, &Dictionary::default());
        assert_eq!((report.annotated, report.correct, report.parsed), (2, 1, 2));
        assert_eq!(report.mismatches[0].got, "fuel 6");
        assert!(matches!(parse_corpus("x\tboat", "c"), Err(FormatError::Annotation { line: 1, .. })));
    }

    #[test]
    fn audit_jsonl_roundtrip() {
        let records = vec![AuditRecord {
            time: SimTime(5),
            actor: "dashcam".into(),
            event: "connect".into(),
            detail: "m0000000000000001 on link 0".into(),
        }];
        let mut buf = Vec::new();
        write_audit_jsonl(&records, &mut buf).unwrap();
        assert_eq!(
            std::str::from_utf8(&buf).unwrap(),
            "{\"time\":5,\"actor\":\"dashcam\",\"event\":\"connect\",\"detail\":\"m0000000000000001 on link 0\"}\n"
        );
        assert_eq!(read_audit_jsonl(&buf[..]).unwrap(), records);
    }
}
