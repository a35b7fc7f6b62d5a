use serde::{Deserialize, Serialize};

use super::{check_same_len, Result, StatsError};

pub const DEFAULT_BINS: usize = 10;

/// One equal-width confidence bin `(lower, upper]` (the first bin also
/// holds 0.0). Empty bins have no mean confidence or accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Reliability-diagram table over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub n: usize,
    pub bins: Vec<Bin>,
}

fn edge(i: usize, n_bins: usize) -> f64 {
    i as f64 / n_bins as f64
}

/// Right-closed bin index. Starts from `ceil(c * n) - 1` and corrects
/// against the same edges reported in the table, so values such as 0.3 land
/// in `(0.2, 0.3]` despite `0.3 * 10` rounding above 3.
fn bin_index(c: f64, n_bins: usize) -> usize {
    let mut i = ((c * n_bins as f64).ceil() as isize - 1).clamp(0, n_bins as isize - 1) as usize;
    while i > 0 && c <= edge(i, n_bins) {
        i -= 1;
    }
    while i + 1 < n_bins && c > edge(i + 1, n_bins) {
        i += 1;
    }
    i
}

fn check_inputs(confidence: &[f64], correct: &[bool], n_bins: usize) -> Result<()> {
    check_same_len(confidence.len(), correct.len())?;
    if n_bins == 0 {
        return Err(StatsError::InvalidArgument("n_bins must be at least 1".into()));
    }
    if let Some(c) = confidence.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(StatsError::InvalidArgument(format!("confidence {c} outside [0,1]")));
    }
    Ok(())
}

/// Per-bin counts, mean confidence and empirical accuracy. An empty input
/// yields a table of empty bins.
pub fn reliability_bins(confidence: &[f64], correct: &[bool], n_bins: usize) -> Result<BinTable> {
    check_inputs(confidence, correct, n_bins)?;
    let mut counts = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0f64; n_bins];
    let mut hits = vec![0usize; n_bins];
    for (&c, &ok) in confidence.iter().zip(correct) {
        let b = bin_index(c, n_bins);
        counts[b] += 1;
        conf_sum[b] += c;
        hits[b] += usize::from(ok);
    }
    let bins = (0..n_bins)
        .map(|b| {
            let count = counts[b];
            let (mean_confidence, accuracy) = if count == 0 {
                (None, None)
            } else {
                (Some(conf_sum[b] / count as f64), Some(hits[b] as f64 / count as f64))
            };
            Bin {
                lower: edge(b, n_bins),
                upper: edge(b + 1, n_bins),
                count,
                mean_confidence,
                accuracy,
            }
        })
        .collect();
    Ok(BinTable { n: confidence.len(), bins })
}

/// Count-weighted mean of `|accuracy - mean confidence|` over a bin table.
pub fn ece_from_bins(table: &BinTable) -> Result<f64> {
    if table.n == 0 {
        return Err(StatsError::Empty);
    }
    Ok(table
        .bins
        .iter()
        .filter_map(|b| Some(b.count as f64 * (b.accuracy? - b.mean_confidence?).abs()))
        .sum::<f64>()
        / table.n as f64)
}

/// Expected calibration error over `n_bins` equal-width bins.
pub fn ece(confidence: &[f64], correct: &[bool], n_bins: usize) -> Result<f64> {
    if confidence.is_empty() {
        return Err(StatsError::Empty);
    }
    ece_from_bins(&reliability_bins(confidence, correct, n_bins)?)
}

/// Signed calibration gap: mean accuracy minus mean confidence. Positive
/// means the model is underconfident.
pub fn nce(confidence: &[f64], correct: &[bool]) -> Result<f64> {
    check_same_len(confidence.len(), correct.len())?;
    if confidence.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = confidence.len() as f64;
    let acc = correct.iter().filter(|&&c| c).count() as f64 / n;
    Ok(acc - confidence.iter().sum::<f64>() / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_point_mass() {
        assert_eq!(ece(&[1.0; 5], &[true; 5], 10).unwrap(), 0.0);
    }

    #[test]
    fn single_bin_gap() {
        let conf = [0.8; 10];
        let correct: Vec<bool> = (0..10).map(|i| i < 6).collect();
        assert!((ece(&conf, &correct, 10).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn edges_are_right_closed() {
        for (c, expected) in [(0.0, 0), (0.1, 0), (0.1000001, 1), (0.3, 2), (0.7, 6), (0.95, 9), (1.0, 9)] {
            assert_eq!(bin_index(c, 10), expected, "{c}");
        }
        for k in 0..=100 {
            let c = k as f64 / 100.0;
            let b = bin_index(c, 10);
            let lower = edge(b, 10);
            let upper = edge(b + 1, 10);
            assert!(c <= upper && (c > lower || b == 0), "{c} -> {b}");
        }
    }

    #[test]
    fn empty_input_gives_empty_bins() {
        let t = reliability_bins(&[], &[], 10).unwrap();
        assert_eq!(t.bins.len(), 10);
        assert!(t.bins.iter().all(|b| b.count == 0 && b.accuracy.is_none()));
        assert_eq!(ece(&[], &[], 10), Err(StatsError::Empty));
    }

    #[test]
    fn one_item_lands_in_last_bin() {
        let t = reliability_bins(&[0.95], &[true], 10).unwrap();
        assert_eq!(t.bins[9].count, 1);
        assert_eq!(t.bins[9].accuracy, Some(1.0));
        assert_eq!(t.bins.iter().map(|b| b.count).sum::<usize>(), 1);
    }

    #[test]
    fn nce_signs() {
        assert_eq!(nce(&[1.0; 4], &[true; 4]).unwrap(), 0.0);
        let correct: Vec<bool> = (0..20).map(|i| i < 18).collect();
        let under = nce(&[0.85; 20], &correct).unwrap();
        assert!((under - 0.05).abs() < 1e-12);
        let correct: Vec<bool> = (0..10).map(|i| i < 8).collect();
        let over = nce(&[0.9; 10], &correct).unwrap();
        assert!((over + 0.10).abs() < 1e-12);
    }

    #[test]
    fn one_bin_ece_is_abs_nce() {
        let conf = [0.2, 0.9, 0.55, 0.71, 1.0, 0.0];
        let correct = [false, true, true, false, true, false];
        let e = ece(&conf, &correct, 1).unwrap();
        let n = nce(&conf, &correct).unwrap();
        assert!((e - n.abs()).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_bins_and_out_of_range() {
        assert!(ece(&[0.5], &[true], 0).is_err());
        assert!(ece(&[1.5], &[true], 10).is_err());
    }
}
