//! Seeded synthetic decision sets.
//!
//! Each decision draws a latent truth, three noisy annotator votes, small
//! and large model correctness (harder on split decisions), a verbalized
//! confidence from the configured profile, annotator times, latencies and
//! token counts. The whole stream comes from one ChaCha8 generator seeded
//! with `SynthConfig::seed`, so a config maps to exactly one set.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{majority_label, AgreementCategory, DatasetError, DecisionSet, ModelOutput, ScoringDecision};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_decisions: usize,
    /// Fraction of decisions whose latent truth is "met".
    pub class_balance_correct: f64,
    pub small_accuracy: f64,
    pub large_accuracy: f64,
    pub confidence_profile: ConfidenceProfile,
    /// Per-annotator probability of flipping the latent truth.
    pub annotator_noise: f64,
    pub seed: u64,
    #[serde(default)]
    pub latency: LatencyProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceProfile {
    /// Confidence that ranks correct answers above incorrect ones with the
    /// given AUROC, quantized to `distinct_values` levels.
    Discriminating { target_auroc: f64, distinct_values: usize },
    /// Near-ceiling confidence: `distinct_values` levels spaced 0.05 apart
    /// below 1.0, averaging `ceiling_mean`, weakly tied to correctness.
    Degenerate { distinct_values: usize, ceiling_mean: f64 },
}

/// Log-normal latency medians (ms) and log-scale spreads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyProfile {
    pub small_median_ms: f64,
    pub small_sigma: f64,
    pub large_median_ms: f64,
    pub large_sigma: f64,
}

impl Default for LatencyProfile {
    fn default() -> Self {
        Self {
            small_median_ms: 2049.0,
            small_sigma: 0.2,
            large_median_ms: 5300.0,
            large_sigma: 0.6,
        }
    }
}

const ANNOTATOR_PACE_S: [f64; 3] = [2.6, 4.1, 6.5];
const SPLIT_TIME_FACTOR: f64 = 2.0;
const BREAK_PROBABILITY: f64 = 0.003;
/// Probability that the large model's correctness draw reuses the small
/// model's, so that both tend to miss the same decisions.
const SHARED_DIFFICULTY: f64 = 0.5;
const DEGENERATE_STEP: f64 = 0.05;
/// How much more often an incorrect answer lands below the ceiling than
/// the average answer does, in the degenerate profile.
const DEGENERATE_INCORRECT_LIFT: f64 = 3.0;

pub fn generate_synthetic(config: &SynthConfig) -> Result<DecisionSet, DatasetError> {
    validate(config)?;
    let confidence = ConfidenceModel::build(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = config.annotator_noise;
    let split_rate = 3.0 * p * (1.0 - p);
    let small_acc = AccuracyModel::new(config.small_accuracy, split_rate);
    let large_acc = AccuracyModel::new(config.large_accuracy, split_rate);
    let lat = &config.latency;
    let small_latency = LogNormal::new(lat.small_median_ms.ln(), lat.small_sigma)
        .map_err(|e| DatasetError::Infeasible(format!("small latency: {e}")))?;
    let large_latency = LogNormal::new(lat.large_median_ms.ln(), lat.large_sigma)
        .map_err(|e| DatasetError::Infeasible(format!("large latency: {e}")))?;
    let paces: Vec<LogNormal<f64>> = ANNOTATOR_PACE_S
        .iter()
        .map(|m| LogNormal::new(m.ln(), 0.45).expect("valid pace"))
        .collect();

    let mut decisions = Vec::with_capacity(config.n_decisions);
    for i in 0..config.n_decisions {
        let truth = rng.random_bool(config.class_balance_correct);
        let mut votes = [truth; 3];
        for v in &mut votes {
            if rng.random_bool(p) {
                *v = !*v;
            }
        }
        let gold = majority_label(votes);
        let split = super::agreement_category(votes) == AgreementCategory::Split;

        let u: f64 = rng.random();
        let v: f64 = if rng.random_bool(SHARED_DIFFICULTY) { u } else { rng.random() };
        let small_correct = u < small_acc.p(split);
        let large_correct = v < large_acc.p(split);
        let conf = confidence.sample(&mut rng, small_correct);

        let mut times_s = [0.0; 3];
        for (t, pace) in times_s.iter_mut().zip(&paces) {
            let mut x = pace.sample(&mut rng);
            if split {
                x *= SPLIT_TIME_FACTOR;
            }
            if rng.random_bool(BREAK_PROBABILITY) {
                x += 600.0 + rng.random::<f64>() * 90_000.0;
            }
            *t = round_to(x, 3);
        }

        let input_tokens = 900 + rng.random_range(0..1200u64);
        let small = ModelOutput {
            label: if small_correct { gold } else { !gold },
            confidence: Some(conf),
            latency_ms: round_to(small_latency.sample(&mut rng), 1),
            input_tokens,
            output_tokens: 40 + rng.random_range(0..40u64),
        };
        let large = ModelOutput {
            label: if large_correct { gold } else { !gold },
            confidence: None,
            latency_ms: round_to(large_latency.sample(&mut rng), 1),
            input_tokens,
            output_tokens: 200 + rng.random_range(0..800u64),
        };
        decisions.push(ScoringDecision {
            decision_id: format!("d{i:05}"),
            item_id: format!("item{}", i % 4),
            criterion_id: format!("c{}", (i / 4) % 2 + 1),
            votes,
            times_s,
            small,
            large: Some(large),
        });
    }
    DecisionSet::new(decisions, format!("synthetic(seed={})", config.seed))
}

fn round_to(x: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (x * f).round() / f
}

fn validate(c: &SynthConfig) -> Result<(), DatasetError> {
    let bad = |m: &str| Err(DatasetError::Infeasible(m.to_string()));
    if c.n_decisions == 0 {
        return bad("n_decisions must be positive");
    }
    for (name, v) in [
        ("class_balance_correct", c.class_balance_correct),
        ("small_accuracy", c.small_accuracy),
        ("large_accuracy", c.large_accuracy),
    ] {
        if !(v > 0.0 && v < 1.0) {
            return bad(&format!("{name} must lie in (0,1)"));
        }
    }
    if !(0.0..0.5).contains(&c.annotator_noise) {
        return bad("annotator_noise must lie in [0,0.5)");
    }
    Ok(())
}

/// Correctness probability conditioned on agreement: split decisions sit
/// halfway between the configured accuracy and a coin flip, unanimous ones
/// absorb the rest so the marginal matches.
struct AccuracyModel {
    unanimous: f64,
    split: f64,
}

impl AccuracyModel {
    fn new(accuracy: f64, split_rate: f64) -> Self {
        let split = 0.5 + 0.5 * (accuracy - 0.5);
        let unanimous = ((accuracy - split_rate * split) / (1.0 - split_rate)).clamp(0.0, 1.0);
        Self { unanimous, split }
    }

    fn p(&self, split: bool) -> f64 {
        if split {
            self.split
        } else {
            self.unanimous
        }
    }
}

enum ConfidenceModel {
    /// Binormal latent score, `N(shift, 1)` when correct and `N(0, 1)`
    /// otherwise, cut into equal-width bands between `lo` and `hi`.
    Binormal { shift: f64, lo: f64, hi: f64, levels: Vec<f64> },
    /// Probability of landing below the ceiling for correct/incorrect
    /// answers; below-ceiling levels are uniform.
    Ceiling { below_correct: f64, below_incorrect: f64, levels: Vec<f64> },
}

impl ConfidenceModel {
    fn build(config: &SynthConfig) -> Result<Self, DatasetError> {
        match config.confidence_profile {
            ConfidenceProfile::Discriminating { target_auroc, distinct_values: k } => {
                if k == 0 || k > 101 {
                    return Err(DatasetError::Infeasible(format!(
                        "distinct_values must be in 1..=101, got {k}"
                    )));
                }
                if !(0.5..=1.0).contains(&target_auroc) {
                    return Err(DatasetError::Infeasible(format!(
                        "target AUROC {target_auroc} outside [0.5, 1]"
                    )));
                }
                let levels = grid_levels(k);
                let shift = solve_shift(target_auroc, k).ok_or_else(|| {
                    DatasetError::Infeasible(format!(
                        "target AUROC {target_auroc} unreachable with {k} distinct value(s)"
                    ))
                })?;
                let (lo, hi) = band_edges(shift);
                Ok(Self::Binormal { shift, lo, hi, levels })
            }
            ConfidenceProfile::Degenerate { distinct_values: k, ceiling_mean } => {
                if k == 0 || (k - 1) as f64 * DEGENERATE_STEP >= 1.0 {
                    return Err(DatasetError::Infeasible(format!(
                        "degenerate profile cannot have {k} distinct values"
                    )));
                }
                let levels: Vec<f64> = (0..k)
                    .map(|j| round_to(1.0 - (k - 1 - j) as f64 * DEGENERATE_STEP, 2))
                    .collect();
                let deficit = 1.0 - ceiling_mean;
                if k == 1 {
                    if deficit.abs() > 1e-12 {
                        return Err(DatasetError::Infeasible(
                            "one distinct value forces a ceiling mean of 1.0".into(),
                        ));
                    }
                    return Ok(Self::Ceiling { below_correct: 0.0, below_incorrect: 0.0, levels });
                }
                let mean_drop = DEGENERATE_STEP * k as f64 / 2.0;
                let below = deficit / mean_drop;
                let acc = config.small_accuracy;
                let lift = DEGENERATE_INCORRECT_LIFT.min(1.0 / (1.0 - acc));
                let below_incorrect = below * lift;
                let below_correct = below * (1.0 - (1.0 - acc) * lift) / acc;
                if !(0.0..=1.0).contains(&below) || below_incorrect > 1.0 || below_correct < 0.0 {
                    return Err(DatasetError::Infeasible(format!(
                        "ceiling mean {ceiling_mean} unreachable with {k} levels"
                    )));
                }
                Ok(Self::Ceiling { below_correct, below_incorrect, levels })
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, correct: bool) -> f64 {
        match self {
            Self::Binormal { shift, lo, hi, levels } => {
                let z: f64 = rng.sample(StandardNormal);
                let z = if correct { z + shift } else { z };
                levels[band_index(z, *lo, *hi, levels.len())]
            }
            Self::Ceiling { below_correct, below_incorrect, levels } => {
                let k = levels.len();
                let below = if correct { *below_correct } else { *below_incorrect };
                if k > 1 && rng.random_bool(below) {
                    levels[rng.random_range(0..k - 1)]
                } else {
                    levels[k - 1]
                }
            }
        }
    }
}

/// `k` distinct percentages ending at 1.0, spaced 0.05 apart when they fit
/// in a 0.6-wide span, otherwise as evenly as the 0.01 grid allows.
fn grid_levels(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let span = if k <= 13 {
        0.05 * (k - 1) as f64
    } else if k <= 61 {
        0.6
    } else {
        0.01 * (k - 1) as f64
    };
    (0..k)
        .map(|j| round_to(1.0 - span + span * j as f64 / (k - 1) as f64, 2))
        .collect()
}

fn band_edges(shift: f64) -> (f64, f64) {
    (-1.0, shift + 1.0)
}

fn band_index(z: f64, lo: f64, hi: f64, k: usize) -> usize {
    if k == 1 {
        return 0;
    }
    let width = (hi - lo) / k as f64;
    (((z - lo) / width).ceil() - 1.0).clamp(0.0, (k - 1) as f64) as usize
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact AUROC of the quantized binormal model (ties count one half).
fn quantized_auroc(shift: f64, k: usize) -> f64 {
    if k == 1 {
        return 0.5;
    }
    let (lo, hi) = band_edges(shift);
    let width = (hi - lo) / k as f64;
    let cut = |m: usize| -> f64 {
        match m {
            0 => f64::NEG_INFINITY,
            m if m == k => f64::INFINITY,
            m => lo + width * m as f64,
        }
    };
    let mass = |mean: f64, j: usize| normal_cdf(cut(j + 1) - mean) - normal_cdf(cut(j) - mean);
    let mut below_incorrect = 0.0;
    let mut auc = 0.0;
    for j in 0..k {
        let pc = mass(shift, j);
        let pi = mass(0.0, j);
        auc += pc * (below_incorrect + 0.5 * pi);
        below_incorrect += pi;
    }
    auc
}

/// Bisection for the latent shift hitting `target` after quantization.
fn solve_shift(target: f64, k: usize) -> Option<f64> {
    const MAX_SHIFT: f64 = 12.0;
    if (target - 0.5).abs() < 1e-9 {
        return Some(0.0);
    }
    if quantized_auroc(MAX_SHIFT, k) < target - 1e-3 {
        return None;
    }
    let (mut a, mut b) = (0.0, MAX_SHIFT);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if quantized_auroc(m, k) < target {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
