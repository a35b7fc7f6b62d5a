use super::{check_same_len, Result, StatsError};

/// Probability that a randomly chosen correct item carries higher confidence
/// than a randomly chosen incorrect one; ties count one half.
///
/// Sorts once and walks groups of tied confidence, so it runs in
/// `O(n log n)`. Counts are kept doubled in integers to stay exact.
pub fn auroc(confidence: &[f64], correct: &[bool]) -> Result<f64> {
    check_same_len(confidence.len(), correct.len())?;
    if confidence.iter().any(|c| c.is_nan()) {
        return Err(StatsError::InvalidArgument("NaN confidence".into()));
    }
    let n_pos = correct.iter().filter(|&&c| c).count() as u128;
    let n_neg = correct.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(StatsError::UndefinedAuroc);
    }

    let mut order: Vec<usize> = (0..confidence.len()).collect();
    order.sort_by(|&a, &b| confidence[a].total_cmp(&confidence[b]));

    let mut neg_below: u128 = 0;
    let mut twice_concordant: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let value = confidence[order[i]];
        let (mut pos, mut neg) = (0u128, 0u128);
        while i < order.len() && confidence[order[i]] == value {
            if correct[order[i]] {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        twice_concordant += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
    }
    Ok(twice_concordant as f64 / (2 * n_pos * n_neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        let c = [0.9, 0.8, 0.7, 0.6];
        assert_eq!(auroc(&c, &[true, true, false, false]).unwrap(), 1.0);
    }

    #[test]
    fn three_of_four_pairs_concordant() {
        // cross pairs: (.9,.8) (.9,.6) (.7,.8) (.7,.6) -> 3 concordant
        let c = [0.9, 0.8, 0.7, 0.6];
        assert_eq!(auroc(&c, &[true, false, true, false]).unwrap(), 0.75);
    }

    #[test]
    fn all_ties_is_half() {
        assert_eq!(auroc(&[0.5; 6], &[true, false, true, true, false, false]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_undefined() {
        assert_eq!(auroc(&[0.1, 0.2], &[true, true]), Err(StatsError::UndefinedAuroc));
    }
}
