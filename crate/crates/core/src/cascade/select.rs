use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{CascadeError, CascadePoint, Result};

pub const DEFAULT_DELTA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    WithinDelta,
    FallbackMaxKappa,
}

impl SelectionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionRule::WithinDelta => "within_delta",
            SelectionRule::FallbackMaxKappa => "fallback_max_kappa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub point: CascadePoint,
    pub rule_fired: SelectionRule,
    pub delta: f64,
    pub large_kappa: f64,
    pub frontier: Vec<CascadePoint>,
}

/// Drops every point for which some other point is both strictly cheaper
/// and has strictly higher kappa. Survivors keep their input order.
pub fn pareto_filter(points: &[CascadePoint]) -> Vec<CascadePoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].cost_cmp(&points[b]));
    let mut keep = vec![true; points.len()];
    // best kappa among points strictly cheaper than the current cost group
    let mut best_cheaper = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && points[order[j]].cost_cmp(&points[order[i]]) == Ordering::Equal {
            j += 1;
        }
        let mut group_best = f64::NEG_INFINITY;
        for &idx in &order[i..j] {
            if best_cheaper > points[idx].kappa {
                keep[idx] = false;
            }
            group_best = group_best.max(points[idx].kappa);
        }
        best_cheaper = best_cheaper.max(group_best);
        i = j;
    }
    points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p.clone()).collect()
}

/// Cheapest frontier point with `large_kappa - kappa <= delta`; if none
/// qualifies, the highest-kappa point. Ties go to the lower threshold.
pub fn select_operating_point(frontier: &[CascadePoint], large_kappa: f64, delta: f64) -> Result<OperatingPoint> {
    if frontier.is_empty() {
        return Err(CascadeError::NoPoints);
    }
    let by_tau = |a: &CascadePoint, b: &CascadePoint| a.tau.total_cmp(&b.tau);
    let qualifying = frontier.iter().filter(|p| large_kappa - p.kappa <= delta);
    let (point, rule_fired) = match qualifying.min_by(|a, b| a.cost_cmp(b).then_with(|| by_tau(a, b))) {
        Some(p) => (p, SelectionRule::WithinDelta),
        None => {
            let p = frontier
                .iter()
                .min_by(|a, b| b.kappa.total_cmp(&a.kappa).then_with(|| by_tau(a, b)))
                .expect("nonempty");
            (p, SelectionRule::FallbackMaxKappa)
        }
    };
    Ok(OperatingPoint {
        point: point.clone(),
        rule_fired,
        delta,
        large_kappa,
        frontier: frontier.to_vec(),
    })
}
