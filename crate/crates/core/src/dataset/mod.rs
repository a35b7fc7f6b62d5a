//! Decision records: the data model, JSONL ingestion, ground truth and
//! agreement categories, and seeded synthetic fixtures.
//!
//! A [`ScoringDecision`] is one criterion-level judgment. Labels are plain
//! `bool`s throughout the crate: `true` means the criterion was met.

mod io;
mod synth;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use io::{load_decisions, parse_decisions, to_jsonl, write_decisions, DecisionFormat};
pub use synth::{generate_synthetic, ConfidenceProfile, LatencyProfile, SynthConfig};

/// Errors raised while ingesting, validating or synthesizing decisions.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("empty decision set")]
    Empty,
    #[error("line {line}: duplicate decision_id {decision_id:?}")]
    DuplicateId { line: usize, decision_id: String },
    #[error("line {line}: decision {decision_id:?} has {found} {field}, expected 3")]
    Arity {
        line: usize,
        decision_id: String,
        field: &'static str,
        found: usize,
    },
    #[error("line {line}: decision {decision_id:?} has confidence {value} outside [0,100]")]
    ConfidenceRange {
        line: usize,
        decision_id: String,
        value: String,
    },
    #[error("line {line}: decision {decision_id:?} has no small-model confidence")]
    MissingConfidence { line: usize, decision_id: String },
    #[error("line {line}: decision {decision_id:?}: {reason}")]
    InvalidValue {
        line: usize,
        decision_id: String,
        reason: String,
    },
    #[error("infeasible synthetic config: {0}")]
    Infeasible(String),
}

/// Unanimous (3/3) or split (2/1) annotator agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementCategory {
    Unanimous,
    Split,
}

/// One model's answer for a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub label: bool,
    /// Normalized to `[0, 1]`. Only the small model carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub latency_ms: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

/// One criterion-level judgment with its three annotator votes and both
/// models' outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringDecision {
    pub decision_id: String,
    pub item_id: String,
    pub criterion_id: String,
    pub votes: [bool; 3],
    pub times_s: [f64; 3],
    pub small: ModelOutput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub large: Option<ModelOutput>,
}

impl ScoringDecision {
    pub fn majority_label(&self) -> bool {
        majority_label(self.votes)
    }

    pub fn agreement(&self) -> AgreementCategory {
        agreement_category(self.votes)
    }

    /// Small-model confidence; always present on a loaded set.
    pub fn confidence(&self) -> f64 {
        self.small
            .confidence
            .expect("validated decision sets carry small-model confidence")
    }
}

/// Ground truth: the label held by at least two of the three annotators.
pub fn majority_label(votes: [bool; 3]) -> bool {
    votes.iter().filter(|&&v| v).count() >= 2
}

pub fn agreement_category(votes: [bool; 3]) -> AgreementCategory {
    if votes[0] == votes[1] && votes[1] == votes[2] {
        AgreementCategory::Unanimous
    } else {
        AgreementCategory::Split
    }
}

/// An immutable, validated collection of decisions. Annotator identity is
/// positional: index `i` of `votes`/`times_s` is annotator `i` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    decisions: Vec<ScoringDecision>,
    annotator_ids: [String; 3],
    provenance: String,
}

impl DecisionSet {
    /// Validates uniqueness of ids, nonemptiness, vote times and the
    /// presence of small-model confidence.
    pub fn new(
        decisions: Vec<ScoringDecision>,
        provenance: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        if decisions.is_empty() {
            return Err(DatasetError::Empty);
        }
        let mut seen = HashSet::with_capacity(decisions.len());
        for (i, d) in decisions.iter().enumerate() {
            let line = i + 1;
            if !seen.insert(d.decision_id.as_str()) {
                return Err(DatasetError::DuplicateId {
                    line,
                    decision_id: d.decision_id.clone(),
                });
            }
            validate_decision(line, d)?;
        }
        Ok(Self {
            decisions,
            annotator_ids: default_annotator_ids(),
            provenance: provenance.into(),
        })
    }

    pub fn with_annotator_ids(mut self, ids: [String; 3]) -> Self {
        self.annotator_ids = ids;
        self
    }

    pub fn decisions(&self) -> &[ScoringDecision] {
        &self.decisions
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoringDecision> {
        self.decisions.iter()
    }

    pub fn annotator_ids(&self) -> &[String; 3] {
        &self.annotator_ids
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn majority_labels(&self) -> Vec<bool> {
        self.decisions.iter().map(|d| d.majority_label()).collect()
    }

    pub fn categories(&self) -> Vec<AgreementCategory> {
        self.decisions.iter().map(|d| d.agreement()).collect()
    }

    pub fn confidences(&self) -> Vec<f64> {
        self.decisions.iter().map(|d| d.confidence()).collect()
    }

    /// Whether every decision carries a large-model output.
    pub fn has_large(&self) -> bool {
        self.decisions.iter().all(|d| d.large.is_some())
    }

    pub fn split_fraction(&self) -> f64 {
        let splits = self
            .decisions
            .iter()
            .filter(|d| d.agreement() == AgreementCategory::Split)
            .count();
        splits as f64 / self.len() as f64
    }

    /// A new set holding the decisions at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DatasetError> {
        let decisions = indices.iter().map(|&i| self.decisions[i].clone()).collect();
        Ok(Self::new(decisions, self.provenance.clone())?
            .with_annotator_ids(self.annotator_ids.clone()))
    }

    /// Per-criterion vote counts `[met, not met]` for Fleiss' kappa, keyed by
    /// `(item_id, criterion_id)` in sorted order.
    pub fn vote_counts_by_criterion(&self) -> Vec<((String, String), Vec<[u32; 2]>)> {
        let mut groups: std::collections::BTreeMap<(String, String), Vec<[u32; 2]>> =
            Default::default();
        for d in &self.decisions {
            let met = d.votes.iter().filter(|&&v| v).count() as u32;
            groups
                .entry((d.item_id.clone(), d.criterion_id.clone()))
                .or_default()
                .push([met, 3 - met]);
        }
        groups.into_iter().collect()
    }
}

impl<'a> IntoIterator for &'a DecisionSet {
    type Item = &'a ScoringDecision;
    type IntoIter = std::slice::Iter<'a, ScoringDecision>;

    fn into_iter(self) -> Self::IntoIter {
        self.decisions.iter()
    }
}

fn default_annotator_ids() -> [String; 3] {
    ["annotator_1".into(), "annotator_2".into(), "annotator_3".into()]
}

fn validate_decision(line: usize, d: &ScoringDecision) -> Result<(), DatasetError> {
    let invalid = |reason: String| DatasetError::InvalidValue {
        line,
        decision_id: d.decision_id.clone(),
        reason,
    };
    if let Some(t) = d.times_s.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(invalid(format!("annotator time {t} is not a nonnegative number")));
    }
    match d.small.confidence {
        None => {
            return Err(DatasetError::MissingConfidence {
                line,
                decision_id: d.decision_id.clone(),
            })
        }
        Some(c) if !(0.0..=1.0).contains(&c) => {
            return Err(DatasetError::ConfidenceRange {
                line,
                decision_id: d.decision_id.clone(),
                value: c.to_string(),
            })
        }
        Some(_) => {}
    }
    for (role, out) in std::iter::once(("small", &d.small))
        .chain(d.large.as_ref().map(|l| ("large", l)))
    {
        if !out.latency_ms.is_finite() || out.latency_ms < 0.0 {
            return Err(invalid(format!("{role} latency {} is invalid", out.latency_ms)));
        }
    }
    Ok(())
}
