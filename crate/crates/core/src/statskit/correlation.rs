use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{check_same_len, Result, StatsError};

/// 1-based ranks with ties replaced by the average of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j share ranks (i+1)..=(j+1)
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_same_len(x.len(), y.len())?;
    if x.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_same_len(x.len(), y.len())?;
    pearson_r(&average_ranks(x), &average_ranks(y))
}

/// Two-sided p-value for a correlation coefficient via the t approximation
/// with `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(StatsError::TooFew { needed: 3, got: n });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(StatsError::InvalidArgument(format!("correlation {r} outside [-1,1]")));
    }
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return Ok(f64::MIN_POSITIVE);
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    Ok((2.0 * dist.sf(t)).clamp(f64::MIN_POSITIVE, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[3.0, 3.0, 3.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn monotone_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 4.0, 9.0, 16.0, 25.0];
        assert!((spearman_rho(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn spearman_with_tie_matches_hand_ranks() {
        // ranks x = (1, 2.5, 2.5, 4), ranks y = (1, 2, 3, 4)
        // centered x = (-1.5, 0, 0, 1.5), y = (-1.5, -0.5, 0.5, 1.5)
        // sxy = 2.25 + 2.25 = 4.5, sxx = 4.5, syy = 5 -> rho = 4.5 / sqrt(22.5)
        let rho = spearman_rho(&[1.0, 2.0, 2.0, 4.0], &[10.0, 20.0, 30.0, 40.0]).unwrap();
        assert!((rho - 4.5 / 22.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_and_hand() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // x=(0,1,2,3) mean 1.5; y=(0,1,1,3) mean 1.25
        // sxy = (-1.5)(-1.25) + (-0.5)(-0.25) + (0.5)(-0.25) + (1.5)(1.75) = 4.5
        // sxx = 5, syy = 1.5625 + 0.0625 + 0.0625 + 3.0625 = 4.75
        let r = pearson_r(&x, &[0.0, 1.0, 1.0, 3.0]).unwrap();
        assert!((r - 4.5 / (5.0f64 * 4.75).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_undefined() {
        assert_eq!(pearson_r(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]), Err(StatsError::UndefinedCorrelation));
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[5.0; 3]), Err(StatsError::UndefinedCorrelation));
        assert!(matches!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn p_values() {
        assert!((correlation_p_value(0.0, 50).unwrap() - 1.0).abs() < 1e-12);
        assert!(correlation_p_value(0.9, 100).unwrap() < 1e-10);
        assert!(correlation_p_value(1.0, 10).unwrap() > 0.0);
        // r = 0.5, n = 12: t = 0.5*sqrt(10/0.75) = 1.8257, df 10 -> p ~ 0.0978
        assert!((correlation_p_value(0.5, 12).unwrap() - 0.0978).abs() < 5e-4);
    }
}
