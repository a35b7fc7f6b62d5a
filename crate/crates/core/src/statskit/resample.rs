use serde::{Deserialize, Serialize};

use super::rng::{draw_index, stream};
use super::{nearest_rank_index, Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    /// Central coverage of the percentile interval.
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: 10_000, seed: 0, level: 0.95 }
    }
}

impl BootstrapConfig {
    pub fn new(resamples: usize, seed: u64) -> Self {
        Self { resamples, seed, ..Self::default() }
    }
}

/// A point estimate with its percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiEstimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
    /// Resamples on which the statistic was undefined.
    pub discarded: usize,
    pub seed: u64,
}

impl CiEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Percentile bootstrap interval for `statistic` over `data`.
///
/// Each resample draws `data.len()` items with replacement from the seeded
/// stream described in [`super::rng`]. Resamples where the statistic errors
/// are discarded and counted; more than half discarded is an error.
pub fn bootstrap_ci<T, F>(data: &[T], statistic: F, config: &BootstrapConfig) -> Result<CiEstimate>
where
    F: Fn(&[&T]) -> Result<f64>,
{
    let all: Vec<&T> = data.iter().collect();
    let point = statistic(&all)?;
    let stats = resample_stats(data, config, |r| statistic(r))?;
    interval(point, stats, config)
}

/// Bootstrap of the difference `A - B` where both statistics are evaluated
/// on the same resample each iteration.
pub fn paired_bootstrap_diff<T, F>(data: &[T], pair: F, config: &BootstrapConfig) -> Result<CiEstimate>
where
    F: Fn(&[&T]) -> Result<(f64, f64)>,
{
    let all: Vec<&T> = data.iter().collect();
    let (a, b) = pair(&all)?;
    let stats = resample_stats(data, config, |r| pair(r).map(|(a, b)| a - b))?;
    interval(a - b, stats, config)
}

fn resample_stats<T, F>(data: &[T], config: &BootstrapConfig, f: F) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[&T]) -> Result<f64>,
{
    if config.resamples == 0 {
        return Err(StatsError::InvalidArgument("resamples must be at least 1".into()));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(StatsError::InvalidArgument(format!("level {} outside (0,1)", config.level)));
    }
    if data.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = data.len();
    let mut rng = stream(config.seed);
    let mut buf: Vec<&T> = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(config.resamples);
    let mut undefined = 0;
    for _ in 0..config.resamples {
        buf.clear();
        buf.extend((0..n).map(|_| &data[draw_index(&mut rng, n)]));
        match f(&buf) {
            Ok(v) if v.is_finite() => out.push(v),
            _ => undefined += 1,
        }
    }
    if 2 * undefined > config.resamples {
        return Err(StatsError::UnstableStatistic { undefined, resamples: config.resamples });
    }
    Ok((out, undefined))
}

fn interval(point: f64, (mut stats, discarded): (Vec<f64>, usize), config: &BootstrapConfig) -> Result<CiEstimate> {
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - config.level) / 2.0;
    let lo = stats[nearest_rank_index(stats.len(), alpha)];
    let hi = stats[nearest_rank_index(stats.len(), 1.0 - alpha)];
    Ok(CiEstimate {
        point,
        lo,
        hi,
        level: config.level,
        resamples: config.resamples,
        discarded,
        seed: config.seed,
    })
}
