use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;
use serde_json::Number;

use super::{DatasetError, DecisionSet, ModelOutput, ScoringDecision};

/// Supported record file formats.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DecisionFormat {
    /// One JSON object per line.
    #[default]
    Jsonl,
}

#[derive(Deserialize)]
struct RawRecord {
    decision_id: String,
    #[serde(default)]
    item_id: String,
    #[serde(default)]
    criterion_id: String,
    #[serde(default)]
    votes: Option<Vec<bool>>,
    #[serde(default)]
    times_s: Option<Vec<f64>>,
    small: RawOutput,
    #[serde(default)]
    large: Option<RawOutput>,
}

#[derive(Deserialize)]
struct RawOutput {
    label: bool,
    #[serde(default)]
    confidence: Option<Number>,
    latency_ms: f64,
    input_tokens: u64,
    output_tokens: u64,
}

pub fn load_decisions(
    path: impl AsRef<Path>,
    format: DecisionFormat,
) -> Result<DecisionSet, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        DecisionFormat::Jsonl => parse_decisions(&text, path.display().to_string()),
    }
}

/// Parses JSONL text. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines.
pub fn parse_decisions(text: &str, provenance: impl Into<String>) -> Result<DecisionSet, DatasetError> {
    let mut decisions = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(raw_line).map_err(|e| DatasetError::Malformed {
                line,
                message: e.to_string(),
            })?;
        if !seen.insert(raw.decision_id.clone()) {
            return Err(DatasetError::DuplicateId {
                line,
                decision_id: raw.decision_id,
            });
        }
        decisions.push(convert(line, raw)?);
    }
    if decisions.is_empty() {
        return Err(DatasetError::Empty);
    }
    DecisionSet::new(decisions, provenance)
}

fn convert(line: usize, raw: RawRecord) -> Result<ScoringDecision, DatasetError> {
    let id = raw.decision_id;
    let votes = raw.votes.unwrap_or_default();
    let votes: [bool; 3] = votes.as_slice().try_into().map_err(|_| DatasetError::Arity {
        line,
        decision_id: id.clone(),
        field: "votes",
        found: votes.len(),
    })?;
    let times = raw.times_s.unwrap_or_default();
    let times_s: [f64; 3] = times.as_slice().try_into().map_err(|_| DatasetError::Arity {
        line,
        decision_id: id.clone(),
        field: "times_s",
        found: times.len(),
    })?;
    let confidence = match raw.small.confidence.as_ref() {
        Some(n) => Some(normalize_confidence(n).ok_or_else(|| DatasetError::ConfidenceRange {
            line,
            decision_id: id.clone(),
            value: n.to_string(),
        })?),
        None => {
            return Err(DatasetError::MissingConfidence {
                line,
                decision_id: id,
            })
        }
    };
    let small = output(raw.small, confidence);
    let large = raw.large.map(|l| output(l, None));
    let decision = ScoringDecision {
        decision_id: id,
        item_id: raw.item_id,
        criterion_id: raw.criterion_id,
        votes,
        times_s,
        small,
        large,
    };
    super::validate_decision(line, &decision)?;
    Ok(decision)
}

fn output(raw: RawOutput, confidence: Option<f64>) -> ModelOutput {
    ModelOutput {
        label: raw.label,
        confidence,
        latency_ms: raw.latency_ms,
        input_tokens: raw.input_tokens,
        output_tokens: raw.output_tokens,
    }
}

/// Integer literals are on the 0-100 scale. Float literals in `[0, 1]` are
/// already fractions; floats in `(1, 100]` are percentages.
fn normalize_confidence(n: &Number) -> Option<f64> {
    if let Some(i) = n.as_u64() {
        return (i <= 100).then(|| i as f64 / 100.0);
    }
    if n.is_i64() {
        return None;
    }
    let x = n.as_f64()?;
    if (0.0..=1.0).contains(&x) {
        Some(x)
    } else if x > 1.0 && x <= 100.0 {
        Some(x / 100.0)
    } else {
        None
    }
}

/// Serializes a set back to JSONL. Confidences are written as normalized
/// floats, so loading the output reproduces the set exactly.
pub fn to_jsonl(set: &DecisionSet) -> String {
    let mut out = String::new();
    for d in set {
        out.push_str(&serde_json::to_string(d).expect("decision serializes"));
        out.push('\n');
    }
    out
}

pub fn write_decisions(set: &DecisionSet, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    std::fs::write(path, to_jsonl(set)).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}
