use super::{check_same_len, Result, StatsError};

/// 2x2 agreement counts between a prediction and a reference label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgreementTable {
    /// Both met.
    pub a: u64,
    /// Prediction met, reference not.
    pub b: u64,
    /// Prediction not, reference met.
    pub c: u64,
    /// Both not met.
    pub d: u64,
}

impl AgreementTable {
    pub fn push(&mut self, pred: bool, gold: bool) {
        match (pred, gold) {
            (true, true) => self.a += 1,
            (true, false) => self.b += 1,
            (false, true) => self.c += 1,
            (false, false) => self.d += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn accuracy(&self) -> Result<f64> {
        match self.total() {
            0 => Err(StatsError::Empty),
            n => Ok((self.a + self.d) as f64 / n as f64),
        }
    }

    /// `2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d))`, algebraically
    /// `(p_o - p_e) / (1 - p_e)`, in integer arithmetic until the final
    /// division.
    pub fn kappa(&self) -> Result<f64> {
        if self.total() == 0 {
            return Err(StatsError::Empty);
        }
        let [a, b, c, d] = [self.a, self.b, self.c, self.d].map(i128::from);
        let denom = (a + b) * (b + d) + (a + c) * (c + d);
        if denom == 0 {
            return Err(StatsError::UndefinedKappa);
        }
        Ok((2 * (a * d - b * c)) as f64 / denom as f64)
    }
}

/// Cohen's kappa between two binary label sequences. Fails when both
/// sequences are the same constant (`p_e = 1`).
pub fn cohen_kappa(pred: &[bool], gold: &[bool]) -> Result<f64> {
    check_same_len(pred.len(), gold.len())?;
    let mut t = AgreementTable::default();
    for (&p, &g) in pred.iter().zip(gold) {
        t.push(p, g);
    }
    t.kappa()
}

/// Fleiss' kappa over binary categories. Each row holds `[met, not met]`
/// counts and every row must have the same rater count (at least 2).
pub fn fleiss_kappa(ratings: &[[u32; 2]]) -> Result<f64> {
    let first = ratings.first().ok_or(StatsError::Empty)?;
    let raters = first[0] + first[1];
    if raters < 2 {
        return Err(StatsError::InvalidArgument("need at least 2 raters per item".into()));
    }
    if let Some(row) = ratings.iter().find(|r| r[0] + r[1] != raters) {
        return Err(StatsError::InvalidArgument(format!(
            "row {row:?} does not sum to {raters} raters"
        )));
    }
    let n_items = ratings.len() as f64;
    let n = raters as f64;
    let total = n_items * n;

    let met: f64 = ratings.iter().map(|r| r[0] as f64).sum();
    let p_met = met / total;
    let p_not = 1.0 - p_met;
    let expected = p_met * p_met + p_not * p_not;

    let observed = ratings
        .iter()
        .map(|r| {
            let sq = (r[0] as f64).powi(2) + (r[1] as f64).powi(2);
            (sq - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items;

    if met == 0.0 || met == total {
        return Err(StatsError::UndefinedKappa);
    }
    Ok((observed - expected) / (1.0 - expected))
}
