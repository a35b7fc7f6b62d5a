use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{average_ranks, mean, sample_variance, Result, StatsError};

/// Which two-sample test backs a reported p-value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTest {
    #[default]
    Welch,
    MannWhitney,
}

impl GroupTest {
    pub fn p_value(self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            Self::Welch => welch_t_p(a, b),
            Self::MannWhitney => mann_whitney_p(a, b),
        }
    }
}

fn check_groups(a: &[f64], b: &[f64]) -> Result<()> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(StatsError::TooFew { needed: 2, got: g.len() });
        }
    }
    Ok(())
}

/// Standardized mean difference `(mean_a - mean_b) / s_pooled`, with the
/// pooled SD built from Bessel-corrected group variances.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    check_groups(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = ((na - 1.0) * sample_variance(a)? + (nb - 1.0) * sample_variance(b)?) / (na + nb - 2.0);
    if pooled <= 0.0 {
        return Err(StatsError::UndefinedEffectSize);
    }
    Ok((mean(a)? - mean(b)?) / pooled.sqrt())
}

/// Two-sided Welch t-test p-value with Welch-Satterthwaite degrees of
/// freedom. Two zero-variance groups with equal means give `p = 1`.
pub fn welch_t_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_groups(a, b)?;
    let va = sample_variance(a)? / a.len() as f64;
    let vb = sample_variance(b)? / b.len() as f64;
    let diff = mean(a)? - mean(b)?;
    let se2 = va + vb;
    if se2 == 0.0 {
        return if diff == 0.0 { Ok(1.0) } else { Err(StatsError::UndefinedTest) };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).clamp(f64::MIN_POSITIVE, 1.0))
}

/// Two-sided Mann-Whitney U p-value from the tie-corrected normal
/// approximation (no continuity correction).
pub fn mann_whitney_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_groups(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let u = rank_sum_a - na * (na + 1.0) / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = (u - na * nb / 2.0) / var.sqrt();
    let normal = Normal::standard();
    Ok((2.0 * normal.sf(z.abs())).clamp(f64::MIN_POSITIVE, 1.0))
}
