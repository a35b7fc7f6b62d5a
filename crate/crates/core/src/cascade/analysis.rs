use serde::{Deserialize, Serialize};

use super::{kappa_of, CascadeData, CascadeError, CascadeRow, Result};
use crate::dataset::DecisionSet;
use crate::statskit::{nearest_rank, paired_bootstrap_diff, BootstrapConfig, CiEstimate};

/// Small-model agreement on kept vs escalated decisions, and what the large
/// model recovers on the escalated ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftTable {
    pub tau: f64,
    pub n_kept: usize,
    pub n_escalated: usize,
    pub small_kappa_kept: f64,
    pub small_kappa_escalated: f64,
    pub large_kappa_escalated: f64,
    /// Small kappa on kept minus small kappa on escalated.
    pub separation: f64,
    /// Large minus small kappa on escalated.
    pub lift: f64,
}

pub fn escalation_lift(set: &DecisionSet, tau: f64) -> Result<LiftTable> {
    let data = CascadeData::unpriced(set)?;
    let (escalated, kept): (Vec<&CascadeRow>, Vec<&CascadeRow>) = data.rows().iter().partition(|r| r.escalated(tau));
    if escalated.is_empty() {
        return Err(CascadeError::EmptySubset { which: "escalated", tau });
    }
    if kept.is_empty() {
        return Err(CascadeError::EmptySubset { which: "kept", tau });
    }
    let small_kept = kappa_of(kept.iter().copied(), |r| r.small_label)?;
    let small_esc = kappa_of(escalated.iter().copied(), |r| r.small_label)?;
    let large_esc = kappa_of(escalated.iter().copied(), |r| r.large_label)?;
    Ok(LiftTable {
        tau,
        n_kept: kept.len(),
        n_escalated: escalated.len(),
        small_kappa_kept: small_kept,
        small_kappa_escalated: small_esc,
        large_kappa_escalated: large_esc,
        separation: small_kept - small_esc,
        lift: large_esc - small_esc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub median_ms: f64,
    pub p95_ms: f64,
}

impl LatencySummary {
    fn of(latencies: &[f64]) -> Result<Self> {
        Ok(Self {
            median_ms: nearest_rank(latencies, 0.5)?,
            p95_ms: nearest_rank(latencies, 0.95)?,
        })
    }
}

/// Per-decision latency under each scoring strategy. Cascade latency is
/// sequential: small, plus large when escalated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyLatencies {
    pub tau: f64,
    pub always_small: LatencySummary,
    pub always_large: LatencySummary,
    pub cascade: LatencySummary,
}

pub fn latency_profile(set: &DecisionSet, tau: f64) -> Result<StrategyLatencies> {
    let data = CascadeData::unpriced(set)?;
    let rows = data.rows();
    let small: Vec<f64> = rows.iter().map(|r| r.small_ms).collect();
    let large: Vec<f64> = rows.iter().map(|r| r.large_ms).collect();
    let cascade: Vec<f64> = rows
        .iter()
        .map(|r| if r.escalated(tau) { r.small_ms + r.large_ms } else { r.small_ms })
        .collect();
    Ok(StrategyLatencies {
        tau,
        always_small: LatencySummary::of(&small)?,
        always_large: LatencySummary::of(&large)?,
        cascade: LatencySummary::of(&cascade)?,
    })
}

/// Paired bootstrap of cascade kappa at `tau` minus large-alone kappa, both
/// evaluated on each resample.
pub fn kappa_diff_ci(set: &DecisionSet, tau: f64, config: &BootstrapConfig) -> Result<CiEstimate> {
    let data = CascadeData::unpriced(set)?;
    Ok(paired_bootstrap_diff(
        data.rows(),
        |rs| {
            Ok((
                kappa_of(rs.iter().copied(), |r| r.final_label(tau))?,
                kappa_of(rs.iter().copied(), |r| r.large_label)?,
            ))
        },
        config,
    )?)
}
