//! Statistics kernel: agreement, discrimination, calibration, correlation,
//! effect sizes and bootstrap resampling.
//!
//! Every function here is pure. Degenerate inputs that make a statistic
//! undefined return an error rather than a sentinel value; the resampling
//! layer discards and counts such resamples.

mod agreement;
mod calibration;
mod correlation;
mod discrimination;
mod effect;
mod resample;
pub mod rng;

pub use agreement::{cohen_kappa, fleiss_kappa, AgreementTable};
pub use calibration::{ece, ece_from_bins, nce, reliability_bins, Bin, BinTable, DEFAULT_BINS};
pub use correlation::{average_ranks, correlation_p_value, pearson_r, spearman_rho};
pub use discrimination::auroc;
pub use effect::{cohens_d, mann_whitney_p, welch_t_p, GroupTest};
pub use resample::{bootstrap_ci, paired_bootstrap_diff, BootstrapConfig, CiEstimate};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("undefined kappa: expected agreement is 1")]
    UndefinedKappa,
    #[error("AUROC undefined: only one correctness class present")]
    UndefinedAuroc,
    #[error("undefined correlation: zero variance")]
    UndefinedCorrelation,
    #[error("undefined effect size: zero pooled variance")]
    UndefinedEffectSize,
    #[error("undefined test statistic: both groups have zero variance")]
    UndefinedTest,
    #[error("unstable statistic: {undefined} of {resamples} resamples undefined")]
    UnstableStatistic { undefined: usize, resamples: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;

pub(crate) fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(StatsError::LengthMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample variance with Bessel's correction.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: xs.len() });
    }
    let m = mean(xs)?;
    Ok(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Population variance (divides by `n`).
pub fn population_variance(xs: &[f64]) -> Result<f64> {
    let m = mean(xs)?;
    Ok(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64)
}

/// Nearest-rank quantile: the smallest element whose rank is at least
/// `ceil(q * n)`; `q = 0` returns the minimum.
pub fn nearest_rank(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(StatsError::InvalidArgument(format!("quantile {q} outside [0,1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[nearest_rank_index(sorted.len(), q)])
}

/// Zero-based index of the nearest-rank element. A small slack absorbs
/// products such as `0.025 * 10_000` landing just above an integer.
pub(crate) fn nearest_rank_index(n: usize, q: f64) -> usize {
    let rank = (q * n as f64 - 1e-9).ceil().max(0.0) as usize;
    rank.clamp(1, n) - 1
}
