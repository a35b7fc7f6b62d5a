//! Confidence-routed two-tier cascades.
//!
//! A decision is kept with the small model when its confidence is at least
//! `tau` and escalated to the large model when it is strictly below. All
//! agreement figures are measured against the annotator majority label.

mod analysis;
mod cv;
mod pricing;
mod select;

use serde::{Deserialize, Serialize};

use crate::dataset::{DecisionSet, ScoringDecision};
use crate::statskit::{nearest_rank, AgreementTable, StatsError};

pub use analysis::{escalation_lift, kappa_diff_ci, latency_profile, LatencySummary, LiftTable, StrategyLatencies};
pub use cv::{cross_validate_selection, CvConfig, CvSummary, FoldResult, STRATIFY_ON};
pub use pricing::{cost_per_decision, ModelPrice, PricingTable, Role, Usd};
pub use select::{pareto_filter, select_operating_point, OperatingPoint, SelectionRule, DEFAULT_DELTA};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CascadeError {
    #[error("decision {decision_id:?} has no small-model confidence")]
    MissingConfidence { decision_id: String },
    #[error("decision {decision_id:?} has no large-model output")]
    MissingLarge { decision_id: String },
    #[error("no pricing entry for role {0}")]
    MissingPricing(Role),
    #[error("invalid pricing: {0}")]
    InvalidPricing(String),
    #[error("no {which} decisions at tau {tau}")]
    EmptySubset { which: &'static str, tau: f64 },
    #[error("stratification failed: {0}")]
    StratificationFailed(String),
    #[error("empty threshold set")]
    NoPoints,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, CascadeError>;

/// The default grid `0.01, 0.02, ..., 0.99`, each value `i / 100` so that
/// percent confidences compare exactly.
pub fn default_taus() -> Vec<f64> {
    (1..=99).map(|i| f64::from(i) / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Kept,
    Escalated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Routed {
    pub route: Route,
    pub label: bool,
}

/// Escalates iff `confidence < tau`.
pub fn route(decision: &ScoringDecision, tau: f64) -> Result<Routed> {
    let confidence = decision.small.confidence.ok_or_else(|| CascadeError::MissingConfidence {
        decision_id: decision.decision_id.clone(),
    })?;
    if escalates(confidence, tau) {
        let large = decision.large.as_ref().ok_or_else(|| CascadeError::MissingLarge {
            decision_id: decision.decision_id.clone(),
        })?;
        Ok(Routed { route: Route::Escalated, label: large.label })
    } else {
        Ok(Routed { route: Route::Kept, label: decision.small.label })
    }
}

#[inline]
pub fn escalates(confidence: f64, tau: f64) -> bool {
    confidence < tau
}

/// One threshold's simulated outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadePoint {
    pub tau: f64,
    pub n: usize,
    pub n_escalated: usize,
    pub kappa: f64,
    pub accuracy: f64,
    pub escalation_rate: f64,
    /// Exact total over all `n` decisions.
    pub total_cost: Usd,
    pub cost_per_decision_usd: f64,
    pub latency_median_ms: f64,
    pub latency_p95_ms: f64,
}

impl CascadePoint {
    /// Compares mean cost exactly by cross-multiplying totals.
    pub fn cost_cmp(&self, other: &CascadePoint) -> std::cmp::Ordering {
        (self.total_cost.pico() * other.n as u128).cmp(&(other.total_cost.pico() * self.n as u128))
    }
}

/// A decision reduced to what cascade simulation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeRow {
    pub gold: bool,
    pub small_label: bool,
    pub large_label: bool,
    pub confidence: f64,
    pub small_cost: Usd,
    pub large_cost: Usd,
    pub small_ms: f64,
    pub large_ms: f64,
}

impl CascadeRow {
    #[inline]
    pub fn escalated(&self, tau: f64) -> bool {
        escalates(self.confidence, tau)
    }

    #[inline]
    pub fn final_label(&self, tau: f64) -> bool {
        if self.escalated(tau) {
            self.large_label
        } else {
            self.small_label
        }
    }
}

/// A decision set prepared for repeated simulation under one pricing table.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeData {
    rows: Vec<CascadeRow>,
}

impl CascadeData {
    pub fn new(set: &DecisionSet, pricing: &PricingTable) -> Result<Self> {
        Self::build(set, Some(pricing))
    }

    /// Rows with every cost set to zero, for analyses that ignore money.
    pub fn unpriced(set: &DecisionSet) -> Result<Self> {
        Self::build(set, None)
    }

    fn build(set: &DecisionSet, pricing: Option<&PricingTable>) -> Result<Self> {
        let cost = |o, role| match pricing {
            Some(p) => cost_per_decision(o, role, p),
            None => Ok(Usd::ZERO),
        };
        let rows = set
            .iter()
            .map(|d| {
                let confidence = d.small.confidence.ok_or_else(|| CascadeError::MissingConfidence {
                    decision_id: d.decision_id.clone(),
                })?;
                let large = d.large.as_ref().ok_or_else(|| CascadeError::MissingLarge {
                    decision_id: d.decision_id.clone(),
                })?;
                Ok(CascadeRow {
                    gold: d.majority_label(),
                    small_label: d.small.label,
                    large_label: large.label,
                    confidence,
                    small_cost: cost(&d.small, Role::Small)?,
                    large_cost: cost(large, Role::Large)?,
                    small_ms: d.small.latency_ms,
                    large_ms: large.latency_ms,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn from_rows(rows: Vec<CascadeRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(CascadeError::InvalidArgument("no decisions".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[CascadeRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { rows: indices.iter().map(|&i| self.rows[i]).collect() }
    }

    pub fn simulate(&self, tau: f64) -> Result<CascadePoint> {
        simulate_rows(self.rows.iter(), tau)
    }

    pub fn sweep(&self, taus: &[f64]) -> Result<Vec<CascadePoint>> {
        taus.iter().map(|&t| self.simulate(t)).collect()
    }

    pub fn large_kappa(&self) -> Result<f64> {
        Ok(kappa_of(self.rows.iter(), |r| r.large_label)?)
    }

    pub fn small_kappa(&self) -> Result<f64> {
        Ok(kappa_of(self.rows.iter(), |r| r.small_label)?)
    }
}

pub(crate) fn kappa_of<'a>(
    rows: impl IntoIterator<Item = &'a CascadeRow>,
    label: impl Fn(&CascadeRow) -> bool,
) -> std::result::Result<f64, StatsError> {
    let mut t = AgreementTable::default();
    for r in rows {
        t.push(label(r), r.gold);
    }
    t.kappa()
}

fn simulate_rows<'a>(rows: impl IntoIterator<Item = &'a CascadeRow>, tau: f64) -> Result<CascadePoint> {
    let mut table = AgreementTable::default();
    let mut n_escalated = 0;
    let mut total = Usd::ZERO;
    let mut latencies = Vec::new();
    for r in rows {
        let esc = r.escalated(tau);
        table.push(r.final_label(tau), r.gold);
        total = total + r.small_cost;
        let mut ms = r.small_ms;
        if esc {
            n_escalated += 1;
            total = total + r.large_cost;
            ms += r.large_ms;
        }
        latencies.push(ms);
    }
    let n = latencies.len();
    if n == 0 {
        return Err(CascadeError::InvalidArgument("no decisions".into()));
    }
    Ok(CascadePoint {
        tau,
        n,
        n_escalated,
        kappa: table.kappa()?,
        accuracy: table.accuracy()?,
        escalation_rate: n_escalated as f64 / n as f64,
        total_cost: total,
        cost_per_decision_usd: total.per(n),
        latency_median_ms: nearest_rank(&latencies, 0.5)?,
        latency_p95_ms: nearest_rank(&latencies, 0.95)?,
    })
}

pub fn simulate(set: &DecisionSet, tau: f64, pricing: &PricingTable) -> Result<CascadePoint> {
    CascadeData::new(set, pricing)?.simulate(tau)
}

/// One [`simulate`] per threshold, in the given order.
pub fn sweep(set: &DecisionSet, pricing: &PricingTable, taus: &[f64]) -> Result<Vec<CascadePoint>> {
    CascadeData::new(set, pricing)?.sweep(taus)
}
