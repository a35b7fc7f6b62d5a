//! Human difficulty proxies (annotator disagreement and processed response
//! time) and how small-model confidence lines up with them.
//!
//! Response times go through three steps per annotator position: cap at the
//! annotator's own nearest-rank percentile (p95 by default), z-score with
//! the sample SD, then take the median of the three z-scores per decision.

use serde::{Deserialize, Serialize};

use crate::dataset::{AgreementCategory, DecisionSet};
use crate::statskit::{
    self, cohens_d, correlation_p_value, nearest_rank, pearson_r, spearman_rho, welch_t_p, GroupTest,
    StatsError,
};

pub const DEFAULT_CAP_PERCENTILE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UncertaintyError {
    #[error("need at least {needed} decisions, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("degenerate annotator times at position {position}: zero variance after capping")]
    DegenerateAnnotator { position: usize },
    #[error("cap percentile {0} outside (0,1]")]
    InvalidCap(f64),
    #[error("undefined proxy correlation: only {0:?} decisions present")]
    SingleCategory(AgreementCategory),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, UncertaintyError>;

/// Per-decision difficulty scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScores {
    pub categories: Vec<AgreementCategory>,
    /// Median of the three within-annotator z-scores (unitless).
    pub difficulty: Vec<f64>,
    /// Capped, z-scored stream for each annotator position.
    pub annotator_z: [Vec<f64>; 3],
    /// The cap applied at each annotator position, in seconds.
    pub caps_s: [f64; 3],
}

pub fn response_time_difficulty(set: &DecisionSet, cap_percentile: f64) -> Result<DifficultyScores> {
    if !(cap_percentile > 0.0 && cap_percentile <= 1.0) {
        return Err(UncertaintyError::InvalidCap(cap_percentile));
    }
    if set.len() < 2 {
        return Err(UncertaintyError::TooFew { needed: 2, got: set.len() });
    }
    let mut annotator_z: [Vec<f64>; 3] = Default::default();
    let mut caps_s = [0.0; 3];
    for position in 0..3 {
        let raw: Vec<f64> = set.iter().map(|d| d.times_s[position]).collect();
        let cap = nearest_rank(&raw, cap_percentile)?;
        let capped: Vec<f64> = raw.iter().map(|&t| t.min(cap)).collect();
        let mean = statskit::mean(&capped)?;
        let sd = statskit::sample_variance(&capped)?.sqrt();
        if !(sd > 0.0) {
            return Err(UncertaintyError::DegenerateAnnotator { position });
        }
        annotator_z[position] = capped.iter().map(|t| (t - mean) / sd).collect();
        caps_s[position] = cap;
    }
    let difficulty = (0..set.len())
        .map(|i| median3(annotator_z[0][i], annotator_z[1][i], annotator_z[2][i]))
        .collect();
    Ok(DifficultyScores {
        categories: set.categories(),
        difficulty,
        annotator_z,
        caps_s,
    })
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// How the two human proxies relate to each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyCorrelation {
    /// Point-biserial r between the split indicator (unanimous 0, split 1)
    /// and response-time difficulty.
    pub r: f64,
    pub r_p: f64,
    /// Cohen's d of difficulty, split minus unanimous.
    pub d: f64,
    pub d_p: f64,
    pub split_fraction: f64,
    pub n_split: usize,
    pub n_unanimous: usize,
}

fn split_groups<'a>(
    categories: &[AgreementCategory],
    values: impl IntoIterator<Item = &'a f64>,
) -> (Vec<f64>, Vec<f64>) {
    let mut unanimous = Vec::new();
    let mut split = Vec::new();
    for (&c, &v) in categories.iter().zip(values) {
        match c {
            AgreementCategory::Unanimous => unanimous.push(v),
            AgreementCategory::Split => split.push(v),
        }
    }
    (unanimous, split)
}

fn require_both(unanimous: &[f64], split: &[f64]) -> Result<()> {
    if split.is_empty() {
        return Err(UncertaintyError::SingleCategory(AgreementCategory::Unanimous));
    }
    if unanimous.is_empty() {
        return Err(UncertaintyError::SingleCategory(AgreementCategory::Split));
    }
    Ok(())
}

pub fn proxy_correlation(scores: &DifficultyScores) -> Result<ProxyCorrelation> {
    let (unanimous, split) = split_groups(&scores.categories, &scores.difficulty);
    require_both(&unanimous, &split)?;
    let indicator: Vec<f64> = scores
        .categories
        .iter()
        .map(|c| f64::from(u8::from(*c == AgreementCategory::Split)))
        .collect();
    let r = pearson_r(&indicator, &scores.difficulty)?;
    let n = scores.difficulty.len();
    Ok(ProxyCorrelation {
        r,
        r_p: correlation_p_value(r, n)?,
        d: cohens_d(&split, &unanimous)?,
        d_p: welch_t_p(&split, &unanimous)?,
        split_fraction: split.len() as f64 / n as f64,
        n_split: split.len(),
        n_unanimous: unanimous.len(),
    })
}

/// Mean small-model confidence on unanimous vs split decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementGap {
    pub mean_unanimous: f64,
    pub mean_split: f64,
    /// Cohen's d, unanimous minus split.
    pub d: f64,
    pub p: f64,
    pub test: GroupTest,
}

pub fn confidence_by_agreement(set: &DecisionSet, test: GroupTest) -> Result<AgreementGap> {
    let conf = set.confidences();
    let (unanimous, split) = split_groups(&set.categories(), &conf);
    require_both(&unanimous, &split)?;
    Ok(AgreementGap {
        mean_unanimous: statskit::mean(&unanimous)?,
        mean_split: statskit::mean(&split)?,
        d: cohens_d(&unanimous, &split)?,
        p: test.p_value(&unanimous, &split)?,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCorrelation {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

/// Spearman's rho between small-model confidence and response-time
/// difficulty; negative when confidence falls on slower decisions.
pub fn confidence_time_correlation(set: &DecisionSet, scores: &DifficultyScores) -> Result<TimeCorrelation> {
    if set.len() < 3 {
        return Err(UncertaintyError::TooFew { needed: 3, got: set.len() });
    }
    let rho = spearman_rho(&set.confidences(), &scores.difficulty)?;
    Ok(TimeCorrelation {
        rho,
        p: correlation_p_value(rho, set.len())?,
        n: set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ModelOutput, ScoringDecision};

    fn set_from(times: &[[f64; 3]], votes: &[[bool; 3]], conf: &[f64]) -> DecisionSet {
        let decisions = times
            .iter()
            .enumerate()
            .map(|(i, t)| ScoringDecision {
                decision_id: format!("d{i}"),
                item_id: "i".into(),
                criterion_id: "c".into(),
                votes: votes[i],
                times_s: *t,
                small: ModelOutput {
                    label: true,
                    confidence: Some(conf[i]),
                    latency_ms: 1.0,
                    input_tokens: 0,
                    output_tokens: 0,
                },
                large: None,
            })
            .collect();
        DecisionSet::new(decisions, "test").unwrap()
    }

    const U: [bool; 3] = [true, true, true];
    const S: [bool; 3] = [true, false, true];

    #[test]
    fn outlier_is_capped_and_ranks_highest() {
        // 20 jittered base times plus one break-length outlier at index 7
        let mut times: Vec<[f64; 3]> = (0..21)
            .map(|i| {
                let t = 3.0 + 0.1 * (i % 5) as f64;
                [t, t * 1.5, t * 0.8]
            })
            .collect();
        times[7] = [5000.0, 7500.0, 4000.0];
        let n = times.len();
        let scores = response_time_difficulty(&set_from(&times, &vec![U; n], &vec![0.9; n]), 0.95).unwrap();
        // nearest rank ceil(0.95*21)=20 -> the cap is the largest base value
        assert_eq!(scores.caps_s[0], 3.4);
        let max = scores.difficulty.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(scores.difficulty[7], max);

        // hand computation for annotator 0: capped stream has 4 values at
        // each of 3.0..3.4 plus the outlier capped to 3.4
        let capped: Vec<f64> = times.iter().map(|t| t[0].min(3.4)).collect();
        let m = capped.iter().sum::<f64>() / 21.0;
        let sd = (capped.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 20.0).sqrt();
        assert!((scores.annotator_z[0][7] - (3.4 - m) / sd).abs() < 1e-12);
    }

    #[test]
    fn pipeline_standardizes_each_annotator() {
        let times: Vec<[f64; 3]> = (0..50)
            .map(|i| {
                let x = i as f64;
                [1.0 + (x * 0.37).sin().abs(), 2.0 + x * 0.1, 0.5 + (x * 1.3).cos() + 1.0]
            })
            .collect();
        let n = times.len();
        let s = response_time_difficulty(&set_from(&times, &vec![U; n], &vec![0.9; n]), 0.95).unwrap();
        for z in &s.annotator_z {
            let mean = z.iter().sum::<f64>() / n as f64;
            let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn order_invariance() {
        let times: Vec<[f64; 3]> = (0..30).map(|i| [i as f64, (i * 7 % 30) as f64 + 0.5, ((i * 11) % 13) as f64]).collect();
        let n = times.len();
        let a = response_time_difficulty(&set_from(&times, &vec![U; n], &vec![0.5; n]), 0.95).unwrap();
        let mut rev = times.clone();
        rev.reverse();
        let b = response_time_difficulty(&set_from(&rev, &vec![U; n], &vec![0.5; n]), 0.95).unwrap();
        for i in 0..n {
            assert!((a.difficulty[i] - b.difficulty[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_annotator() {
        let times = vec![[1.0, 2.0, 3.0], [1.0, 5.0, 3.5], [1.0, 1.0, 9.0]];
        let s = set_from(&times, &[U, U, U], &[0.5; 3]);
        assert_eq!(
            response_time_difficulty(&s, 0.95),
            Err(UncertaintyError::DegenerateAnnotator { position: 0 })
        );
    }

    #[test]
    fn median_of_three() {
        for (a, b, c) in [(1.0, 2.0, 3.0), (3.0, 1.0, 2.0), (2.0, 3.0, 1.0), (1.0, 1.0, 5.0)] {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            assert_eq!(median3(a, b, c), v[1]);
        }
    }

    fn scores(categories: Vec<AgreementCategory>, difficulty: Vec<f64>) -> DifficultyScores {
        DifficultyScores { categories, difficulty, annotator_z: Default::default(), caps_s: [0.0; 3] }
    }

    #[test]
    fn proxy_correlation_cases() {
        use AgreementCategory::*;
        let cats = vec![Unanimous, Split, Unanimous, Split, Unanimous];
        let same = scores(cats.clone(), vec![0.3; 5]);
        assert!(proxy_correlation(&same).is_err());

        let indicator: Vec<f64> = cats.iter().map(|c| if *c == Split { 1.0 } else { 0.0 }).collect();
        let perfect = proxy_correlation(&scores(cats.clone(), indicator)).unwrap_err();
        // indicator difficulty has zero within-group variance -> d undefined
        assert_eq!(perfect, UncertaintyError::Stats(StatsError::UndefinedEffectSize));

        let only = scores(vec![Unanimous; 3], vec![0.1, 0.2, 0.3]);
        assert!(matches!(proxy_correlation(&only), Err(UncertaintyError::SingleCategory(_))));
    }

    #[test]
    fn shifted_split_difficulty_gives_unit_d() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 4000;
        let mut cats = Vec::new();
        let mut diff = Vec::new();
        for i in 0..n {
            let split = i % 5 == 0;
            let z: f64 = StandardNormal.sample(&mut rng);
            cats.push(if split { AgreementCategory::Split } else { AgreementCategory::Unanimous });
            diff.push(z + if split { 1.0 } else { 0.0 });
        }
        let p = proxy_correlation(&scores(cats, diff)).unwrap();
        assert!((p.d - 1.0).abs() < 0.1, "{}", p.d);
        assert!((p.split_fraction - 0.2).abs() < 1e-12);
        assert!(p.r > 0.0 && p.r_p < 1e-6);
    }

    #[test]
    fn confidence_gap_rows() {
        // group means built to 0.909 / 0.833
        let conf = [0.899, 0.919, 0.909, 0.823, 0.843];
        let votes = [U, U, U, S, S];
        let times = vec![[1.0, 2.0, 3.0]; 5];
        let set = set_from(&times, &votes, &conf);
        let gap = confidence_by_agreement(&set, GroupTest::Welch).unwrap();
        assert!((gap.mean_unanimous - 0.909).abs() < 1e-12);
        assert!((gap.mean_split - 0.833).abs() < 1e-12);
        assert!((gap.mean_unanimous - gap.mean_split - 0.076).abs() < 1e-12);
        assert!(gap.d > 0.0);

        let raised: Vec<f64> = conf.iter().map(|c| c + 0.05).collect();
        let gap2 = confidence_by_agreement(&set_from(&times, &votes, &raised), GroupTest::Welch).unwrap();
        assert!((gap.d - gap2.d).abs() < 1e-9);

        let flat = set_from(&times, &votes, &[0.9; 5]);
        assert!(confidence_by_agreement(&flat, GroupTest::Welch).is_err());
    }

    #[test]
    fn confidence_tracks_difficulty() {
        let set = set_from(&[[1.0, 1.0, 1.0]; 4], &[U; 4], &[0.9, 0.8, 0.7, 0.6]);
        let s = scores(vec![AgreementCategory::Unanimous; 4], vec![-1.0, 0.0, 0.5, 2.0]);
        let tc = confidence_time_correlation(&set, &s).unwrap();
        assert!((tc.rho + 1.0).abs() < 1e-12);

        // confidence = -difficulty with a tie: still exactly -1 on ranks
        let set = set_from(&[[1.0, 1.0, 1.0]; 4], &[U; 4], &[0.9, 0.5, 0.5, 0.1]);
        let s = scores(vec![AgreementCategory::Unanimous; 4], vec![-0.9, -0.5, -0.5, -0.1]);
        assert!((confidence_time_correlation(&set, &s).unwrap().rho + 1.0).abs() < 1e-12);
    }
}
