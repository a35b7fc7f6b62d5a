use serde::{Deserialize, Serialize};

use super::{default_taus, pareto_filter, select_operating_point, CascadeData, CascadeError, PricingTable, Result, SelectionRule, DEFAULT_DELTA};
use crate::dataset::DecisionSet;
use crate::statskit::{mean, rng, sample_variance};

/// The variable folds are stratified on.
pub const STRATIFY_ON: &str = "majority_label";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub delta: f64,
    pub taus: Vec<f64>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { k: 5, seed: 0, delta: DEFAULT_DELTA, taus: default_taus() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub tau: f64,
    pub rule_fired: SelectionRule,
    pub train_large_kappa: f64,
    pub train_kappa: f64,
    pub held_out_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub k: usize,
    pub seed: u64,
    pub stratified_on: String,
    pub folds: Vec<FoldResult>,
    pub mean_held_out_kappa: f64,
    pub sd_held_out_kappa: f64,
    pub mean_tau: f64,
    pub sd_tau: f64,
    pub in_sample_tau: f64,
    pub in_sample_kappa: f64,
    pub in_sample_rule: SelectionRule,
    /// In-sample kappa minus mean held-out kappa.
    pub optimism: f64,
}

/// Stratified k-fold check of threshold selection.
///
/// Each majority-label class is shuffled with the `seed` stream and dealt
/// round-robin into folds, the deal counter running on from one class to
/// the next. Every fold selects a threshold on its training part (with that
/// part's own large-alone kappa) and scores it on the held-out part.
pub fn cross_validate_selection(set: &DecisionSet, pricing: &PricingTable, config: &CvConfig) -> Result<CvSummary> {
    let k = config.k;
    if k < 2 {
        return Err(CascadeError::InvalidArgument(format!("k = {k}; need at least 2 folds")));
    }
    if set.len() < k {
        return Err(CascadeError::StratificationFailed(format!("{} decisions for {k} folds", set.len())));
    }
    let data = CascadeData::new(set, pricing)?;
    let folds = assign_folds(&data, k, config.seed);

    let choose = |d: &CascadeData| -> Result<_> {
        let frontier = pareto_filter(&d.sweep(&config.taus)?);
        select_operating_point(&frontier, d.large_kappa()?, config.delta)
    };

    let mut results = Vec::with_capacity(k);
    for (fold, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let train = data.subset(&train_idx);
        let test = data.subset(test_idx);
        for (part, name) in [(&train, "training"), (&test, "held-out")] {
            let positives = part.rows().iter().filter(|r| r.gold).count();
            if positives == 0 || positives == part.len() {
                return Err(CascadeError::StratificationFailed(format!(
                    "fold {fold} {name} part has a single majority-label class"
                )));
            }
        }
        let op = choose(&train)?;
        let held_out = test.simulate(op.point.tau)?;
        results.push(FoldResult {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            tau: op.point.tau,
            rule_fired: op.rule_fired,
            train_large_kappa: op.large_kappa,
            train_kappa: op.point.kappa,
            held_out_kappa: held_out.kappa,
        });
    }

    let in_sample = choose(&data)?;
    let kappas: Vec<f64> = results.iter().map(|f| f.held_out_kappa).collect();
    let taus: Vec<f64> = results.iter().map(|f| f.tau).collect();
    let mean_held_out_kappa = mean(&kappas)?;
    Ok(CvSummary {
        k,
        seed: config.seed,
        stratified_on: STRATIFY_ON.to_string(),
        folds: results,
        mean_held_out_kappa,
        sd_held_out_kappa: sample_variance(&kappas)?.sqrt(),
        mean_tau: mean(&taus)?,
        sd_tau: sample_variance(&taus)?.sqrt(),
        in_sample_tau: in_sample.point.tau,
        in_sample_kappa: in_sample.point.kappa,
        in_sample_rule: in_sample.rule_fired,
        optimism: in_sample.point.kappa - mean_held_out_kappa,
    })
}

fn assign_folds(data: &CascadeData, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut stream = rng::stream(seed);
    let mut folds = vec![Vec::new(); k];
    let mut counter = 0;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.rows()[i].gold == class).collect();
        rng::shuffle(&mut stream, &mut idx);
        for i in idx {
            folds[counter % k].push(i);
            counter += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}
