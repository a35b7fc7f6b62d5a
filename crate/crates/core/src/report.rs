//! End-to-end analysis run: every table plus plot-ready series, written as
//! `report.json` and one CSV per table.
//!
//! A table whose computation fails is kept in the report with its error and
//! the remaining tables are still produced. Randomized tables draw from
//! named substreams of the single top-level seed, so rerunning a subset of
//! tables reproduces their numbers exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cascade::{
    cross_validate_selection, default_taus, escalation_lift, kappa_diff_ci, kappa_of, latency_profile, pareto_filter,
    select_operating_point, CascadeData, CascadeError, CascadePoint, CvConfig, OperatingPoint, PricingTable, Role, Usd,
    DEFAULT_DELTA,
};
use crate::dataset::{load_decisions, AgreementCategory, DatasetError, DecisionFormat, DecisionSet};
use crate::statskit::{
    auroc, bootstrap_ci, cohen_kappa, ece, fleiss_kappa, nce, population_variance, reliability_bins, rng::substream,
    BootstrapConfig, GroupTest, StatsError, DEFAULT_BINS,
};
use crate::uncertainty::{
    confidence_by_agreement, confidence_time_correlation, proxy_correlation, response_time_difficulty,
    DEFAULT_CAP_PERCENTILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TableId {
    T02,
    T03,
    T04,
    T05,
    T06,
    T07,
    T08,
    T09,
    T10,
    T11,
    T12,
    T13,
    T14,
    T15,
    T16,
}

impl TableId {
    pub const ALL: [TableId; 15] = [
        TableId::T02,
        TableId::T03,
        TableId::T04,
        TableId::T05,
        TableId::T06,
        TableId::T07,
        TableId::T08,
        TableId::T09,
        TableId::T10,
        TableId::T11,
        TableId::T12,
        TableId::T13,
        TableId::T14,
        TableId::T15,
        TableId::T16,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 2
    }

    pub fn slug(self) -> &'static str {
        match self {
            TableId::T02 => "human_agreement",
            TableId::T03 => "agreement_distribution",
            TableId::T04 => "accuracy",
            TableId::T05 => "discrimination",
            TableId::T06 => "confidence_by_agreement",
            TableId::T07 => "confidence_vs_time",
            TableId::T08 => "cost",
            TableId::T09 => "operating_point",
            TableId::T10 => "kappa_difference",
            TableId::T11 => "confidence_separation",
            TableId::T12 => "escalation_lift",
            TableId::T13 => "latency",
            TableId::T14 => "calibration",
            TableId::T15 => "stratified_calibration",
            TableId::T16 => "cross_validation",
        }
    }

    /// `tableNN_<slug>`, the CSV stem and report key.
    pub fn name(self) -> String {
        format!("table{:02}_{}", self.number(), self.slug())
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TableId {
    type Err = String;

    /// Accepts `9`, `09`, `table09` or the full `table09_operating_point`.
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let t = t.strip_prefix("table").unwrap_or(t);
        let (digits, slug) = match t.split_once('_') {
            Some((d, slug)) => (d, Some(slug)),
            None => (t, None),
        };
        let n: u8 = digits.parse().map_err(|_| format!("unknown table {s:?}"))?;
        let id = TableId::ALL
            .into_iter()
            .find(|id| id.number() == n)
            .ok_or_else(|| format!("no table {n}; tables are 2-16"))?;
        match slug {
            Some(slug) if slug != id.slug() => Err(format!("unknown table {s:?}")),
            _ => Ok(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub resamples: usize,
    pub delta: f64,
    pub taus: Vec<f64>,
    pub cap_percentile: f64,
    pub cv_folds: usize,
    pub group_test: GroupTest,
    /// Tables to compute; `None` means all.
    pub tables: Option<BTreeSet<TableId>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            resamples: 10_000,
            delta: DEFAULT_DELTA,
            taus: default_taus(),
            cap_percentile: DEFAULT_CAP_PERCENTILE,
            cv_folds: 5,
            group_test: GroupTest::Welch,
            tables: None,
        }
    }
}

impl ReportConfig {
    fn wants(&self, id: TableId) -> bool {
        self.tables.as_ref().is_none_or(|t| t.contains(&id))
    }

    fn bootstrap(&self, name: &str) -> BootstrapConfig {
        BootstrapConfig::new(self.resamples, substream(self.seed, name))
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Undefined { undefined: String },
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Num(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Undefined { undefined } => write!(f, "undefined: {undefined}"),
        }
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

fn int(n: usize) -> Cell {
    Cell::Int(n as u64)
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

fn cell<E: fmt::Display>(r: Result<f64, E>) -> Cell {
    match r {
        Ok(x) => Cell::Num(x),
        Err(e) => Cell::Undefined { undefined: e.to_string() },
    }
}

/// Which operation produced a table, with what parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub operation: String,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TableBody {
    Ok { columns: Vec<String>, rows: Vec<Vec<Cell>> },
    Error { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub name: String,
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: TableBody,
}

impl TableResult {
    pub fn is_error(&self) -> bool {
        matches!(self.body, TableBody::Error { .. })
    }

    pub fn error(&self) -> Option<&str> {
        match &self.body {
            TableBody::Error { error } => Some(error),
            TableBody::Ok { .. } => None,
        }
    }

    /// The table as CSV. Errored tables become a single `error` column.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        match &self.body {
            TableBody::Ok { columns, rows } => {
                w.write_record(columns).expect("in-memory write");
                for row in rows {
                    w.write_record(row.iter().map(ToString::to_string)).expect("in-memory write");
                }
            }
            TableBody::Error { error } => {
                w.write_record(["error"]).expect("in-memory write");
                w.write_record([error]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Column `name` of row `row`, if present.
    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        match &self.body {
            TableBody::Ok { columns, rows } => {
                let c = columns.iter().position(|c| c == name)?;
                rows.get(row)?.get(c)
            }
            TableBody::Error { .. } => None,
        }
    }
}

type Rows = (Vec<&'static str>, Vec<Vec<Cell>>);

fn table(
    name: String,
    operation: &str,
    params: &[(&str, String)],
    seed: Option<u64>,
    body: impl FnOnce() -> Result<Rows, String>,
) -> TableResult {
    let provenance = Provenance {
        operation: operation.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        seed,
    };
    let body = match body() {
        Ok((columns, rows)) => TableBody::Ok { columns: columns.into_iter().map(String::from).collect(), rows },
        Err(error) => TableBody::Error { error },
    };
    TableResult { name, provenance, body }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub source: String,
    pub n_decisions: usize,
    pub config: ReportConfig,
    pub tables: BTreeMap<TableId, TableResult>,
    /// Plot-ready series keyed by file stem.
    pub plots: BTreeMap<String, TableResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operating_point: Option<OperatingPoint>,
}

impl AnalysisReport {
    /// Requested tables whose computation failed.
    pub fn failed_tables(&self) -> Vec<TableId> {
        self.tables.iter().filter(|(_, t)| t.is_error()).map(|(&id, _)| id).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json`, one CSV per table and one per plot series.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        std::fs::create_dir_all(dir).map_err(|e| ReportError::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: String, contents: String| -> Result<(), ReportError> {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| ReportError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        for (id, t) in &self.tables {
            put(format!("{}.csv", id.name()), t.to_csv())?;
        }
        for (name, t) in &self.plots {
            put(format!("{name}.csv"), t.to_csv())?;
        }
        put("report.json".into(), self.to_json())?;
        Ok(written)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ReportError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io { path: path.display().to_string(), source }
    }
}

/// Count of distinct confidence values and their population variance.
pub fn distinct_confidence_stats(set: &DecisionSet) -> (usize, f64) {
    let conf = set.confidences();
    let distinct: BTreeSet<u64> = conf.iter().map(|c| c.to_bits()).collect();
    let variance = population_variance(&conf).expect("decision sets are nonempty");
    (distinct.len(), variance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumCalibration {
    pub stratum: AgreementCategory,
    pub n: usize,
    pub auroc: Result<f64, StatsError>,
    pub ece: Result<f64, StatsError>,
}

/// AUROC and ECE of the small model within the unanimous and split strata.
pub fn stratified_calibration(set: &DecisionSet) -> [StratumCalibration; 2] {
    [AgreementCategory::Unanimous, AgreementCategory::Split].map(|stratum| {
        let (conf, correct): (Vec<f64>, Vec<bool>) = set
            .iter()
            .filter(|d| d.agreement() == stratum)
            .map(|d| (d.confidence(), d.small.label == d.majority_label()))
            .unzip();
        StratumCalibration {
            stratum,
            n: conf.len(),
            auroc: auroc(&conf, &correct),
            ece: ece(&conf, &correct, DEFAULT_BINS),
        }
    })
}

fn stratum_name(c: AgreementCategory) -> &'static str {
    match c {
        AgreementCategory::Unanimous => "unanimous",
        AgreementCategory::Split => "split",
    }
}

/// Loads both inputs and builds the report. A pricing file that fails to
/// load only blocks the cost-dependent tables.
pub fn run_full_report(
    decisions_path: impl AsRef<Path>,
    pricing_path: impl AsRef<Path>,
    config: &ReportConfig,
) -> Result<AnalysisReport, ReportError> {
    let set = load_decisions(decisions_path, DecisionFormat::Jsonl)?;
    let pricing = PricingTable::load(pricing_path);
    Ok(build_report(&set, pricing, config))
}

pub fn build_report(
    set: &DecisionSet,
    pricing: Result<PricingTable, CascadeError>,
    config: &ReportConfig,
) -> AnalysisReport {
    Builder::new(set, pricing, config).build()
}

struct Builder<'a> {
    set: &'a DecisionSet,
    config: &'a ReportConfig,
    pricing: Result<PricingTable, CascadeError>,
    gold: Vec<bool>,
    conf: Vec<f64>,
    small_correct: Vec<bool>,
    priced: Result<CascadeData, CascadeError>,
    sweep: Result<Vec<CascadePoint>, CascadeError>,
    op: Result<OperatingPoint, CascadeError>,
}

impl<'a> Builder<'a> {
    fn new(set: &'a DecisionSet, pricing: Result<PricingTable, CascadeError>, config: &'a ReportConfig) -> Self {
        let gold = set.majority_labels();
        let conf = set.confidences();
        let small_correct = set.iter().zip(&gold).map(|(d, &g)| d.small.label == g).collect();
        let priced = pricing.clone().and_then(|p| CascadeData::new(set, &p));
        let sweep = priced.clone().and_then(|d| d.sweep(&config.taus));
        let op = match (&priced, &sweep) {
            (Ok(d), Ok(points)) => d
                .large_kappa()
                .and_then(|lk| select_operating_point(&pareto_filter(points), lk, config.delta)),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        Self { set, config, pricing, gold, conf, small_correct, priced, sweep, op }
    }

    fn build(self) -> AnalysisReport {
        let mut tables = BTreeMap::new();
        for id in TableId::ALL {
            if self.config.wants(id) {
                tables.insert(id, self.table(id));
            }
        }
        let mut plots = BTreeMap::new();
        for t in [self.sweep_curve(), self.reliability_plot(), self.confidence_distribution()] {
            plots.insert(t.name.clone(), t);
        }
        AnalysisReport {
            source: self.set.provenance().to_string(),
            n_decisions: self.set.len(),
            config: self.config.clone(),
            tables,
            plots,
            operating_point: self.op.ok(),
        }
    }

    fn op_tau(&self) -> Result<f64, String> {
        self.op.as_ref().map(|o| o.point.tau).map_err(|e| format!("no operating point: {e}"))
    }

    fn table(&self, id: TableId) -> TableResult {
        let c = self.config;
        let name = id.name();
        match id {
            TableId::T02 => table(name, "fleiss_kappa", &[("grouping", "item_id, criterion_id".into())], None, || {
                let mut rows = Vec::new();
                let mut all = Vec::new();
                for ((item, crit), counts) in self.set.vote_counts_by_criterion() {
                    rows.push(vec![text(item), text(crit), int(counts.len()), cell(fleiss_kappa(&counts))]);
                    all.extend(counts);
                }
                rows.push(vec![text("all"), text("all"), int(all.len()), cell(fleiss_kappa(&all))]);
                Ok((vec!["item_id", "criterion_id", "n", "fleiss_kappa"], rows))
            }),
            TableId::T03 => table(name, "agreement_category", &[], None, || {
                let n = self.set.len();
                let split = self.set.categories().iter().filter(|&&c| c == AgreementCategory::Split).count();
                let frac = |k: usize| num(k as f64 / n as f64);
                Ok((
                    vec!["metric", "count", "fraction"],
                    vec![
                        vec![text("decisions"), int(n), num(1.0)],
                        vec![text("unanimous"), int(n - split), frac(n - split)],
                        vec![text("split"), int(split), frac(split)],
                    ],
                ))
            }),
            TableId::T04 => {
                let seed_small = substream(c.seed, "bootstrap/table04/small");
                table(name, "cohen_kappa + bootstrap_ci", &[("resamples", c.resamples.to_string())], Some(c.seed), || {
                    let mut rows = Vec::new();
                    let small: Vec<bool> = self.set.iter().map(|d| d.small.label).collect();
                    rows.push(self.accuracy_row("small", &small, seed_small)?);
                    if self.set.has_large() {
                        let large: Vec<bool> = self.set.iter().map(|d| d.large.as_ref().is_some_and(|l| l.label)).collect();
                        rows.push(self.accuracy_row("large", &large, substream(c.seed, "bootstrap/table04/large"))?);
                    } else {
                        let missing = Cell::Undefined { undefined: "no large-model outputs".into() };
                        rows.push(vec![text("large"), int(self.set.len()), missing.clone(), missing.clone(), missing.clone(), missing]);
                    }
                    Ok((vec!["model", "n", "accuracy", "kappa", "kappa_ci_lo", "kappa_ci_hi"], rows))
                })
            }
            TableId::T05 => table(name, "auroc + distinct_confidence_stats", &[], None, || {
                let (distinct, variance) = distinct_confidence_stats(self.set);
                Ok((
                    vec!["model", "auroc", "distinct_values", "variance"],
                    vec![vec![text("small"), cell(auroc(&self.conf, &self.small_correct)), int(distinct), num(variance)]],
                ))
            }),
            TableId::T06 => table(name, "confidence_by_agreement", &[("test", format!("{:?}", c.group_test))], None, || {
                let g = confidence_by_agreement(self.set, c.group_test).map_err(|e| e.to_string())?;
                Ok((
                    vec!["model", "mean_unanimous", "mean_split", "gap", "cohens_d", "p"],
                    vec![vec![
                        text("small"),
                        num(g.mean_unanimous),
                        num(g.mean_split),
                        num(g.mean_unanimous - g.mean_split),
                        num(g.d),
                        num(g.p),
                    ]],
                ))
            }),
            TableId::T07 => table(name, "response_time_difficulty + confidence_time_correlation", &[("cap_percentile", c.cap_percentile.to_string())], None, || {
                let scores = response_time_difficulty(self.set, c.cap_percentile).map_err(|e| e.to_string())?;
                let tc = confidence_time_correlation(self.set, &scores).map_err(|e| e.to_string())?;
                let proxy = proxy_correlation(&scores);
                let (r, d) = match &proxy {
                    Ok(p) => (num(p.r), num(p.d)),
                    Err(e) => (cell::<_>(Err(e)), cell::<_>(Err(e))),
                };
                Ok((
                    vec!["model", "spearman_rho", "p", "n", "proxy_r", "proxy_cohens_d"],
                    vec![vec![text("small"), num(tc.rho), num(tc.p), int(tc.n), r, d]],
                ))
            }),
            TableId::T08 => table(name, "cost_per_decision", &[], None, || {
                let pricing = self.pricing.as_ref().map_err(|e| e.to_string())?;
                let n = self.set.len() as u128;
                let mut rows = Vec::new();
                let mut push = |role: Role, total: Result<Usd, CascadeError>| {
                    let cell = match total {
                        Ok(t) => text(Usd::from_pico((t.pico() * 1000 + n / 2) / n).to_fixed6()),
                        Err(e) => Cell::Undefined { undefined: e.to_string() },
                    };
                    rows.push(vec![text(role.to_string()), cell]);
                };
                push(Role::Small, self.set.iter().map(|d| pricing.call_cost(Role::Small, d.small.input_tokens, d.small.output_tokens)).sum());
                push(
                    Role::Large,
                    self.set
                        .iter()
                        .map(|d| match &d.large {
                            Some(l) => pricing.call_cost(Role::Large, l.input_tokens, l.output_tokens),
                            None => Err(CascadeError::MissingLarge { decision_id: d.decision_id.clone() }),
                        })
                        .sum(),
                );
                Ok((vec!["model", "cost_per_1k_usd"], rows))
            }),
            TableId::T09 => {
                let seed = substream(c.seed, "bootstrap/table09");
                table(
                    name,
                    "sweep + pareto_filter + select_operating_point",
                    &[("delta", c.delta.to_string()), ("n_taus", c.taus.len().to_string()), ("resamples", c.resamples.to_string())],
                    Some(c.seed),
                    || {
                        let op = self.op.as_ref().map_err(|e| e.to_string())?;
                        let data = self.priced.as_ref().map_err(|e| e.to_string())?;
                        let tau = op.point.tau;
                        let ci = bootstrap_ci(data.rows(), |rs| kappa_of(rs.iter().copied(), |r| r.final_label(tau)), &BootstrapConfig::new(c.resamples, seed))
                            .map_err(|e| e.to_string())?;
                        let p = &op.point;
                        Ok((
                            vec![
                                "tau", "kappa", "kappa_ci_lo", "kappa_ci_hi", "accuracy", "escalation_rate", "n_escalated",
                                "cost_per_decision_usd", "latency_median_ms", "latency_p95_ms", "rule_fired", "delta", "large_kappa",
                                "frontier_size",
                            ],
                            vec![vec![
                                num(p.tau),
                                num(p.kappa),
                                num(ci.lo),
                                num(ci.hi),
                                num(p.accuracy),
                                num(p.escalation_rate),
                                int(p.n_escalated),
                                num(p.cost_per_decision_usd),
                                num(p.latency_median_ms),
                                num(p.latency_p95_ms),
                                text(op.rule_fired.as_str()),
                                num(op.delta),
                                num(op.large_kappa),
                                int(op.frontier.len()),
                            ]],
                        ))
                    },
                )
            }
            TableId::T10 => {
                let boot = c.bootstrap("bootstrap/table10");
                table(name, "kappa_diff_ci", &[("resamples", c.resamples.to_string())], Some(c.seed), || {
                    let tau = self.op_tau()?;
                    let ci = kappa_diff_ci(self.set, tau, &boot).map_err(|e| e.to_string())?;
                    Ok((
                        vec!["tau", "kappa_difference", "ci_lo", "ci_hi", "resamples", "discarded"],
                        vec![vec![num(tau), num(ci.point), num(ci.lo), num(ci.hi), int(ci.resamples), int(ci.discarded)]],
                    ))
                })
            }
            TableId::T11 => table(name, "escalation_lift", &[], None, || {
                let l = escalation_lift(self.set, self.op_tau()?).map_err(|e| e.to_string())?;
                Ok((
                    vec!["tau", "n_kept", "n_escalated", "small_kappa_kept", "small_kappa_escalated", "separation"],
                    vec![vec![num(l.tau), int(l.n_kept), int(l.n_escalated), num(l.small_kappa_kept), num(l.small_kappa_escalated), num(l.separation)]],
                ))
            }),
            TableId::T12 => table(name, "escalation_lift", &[], None, || {
                let l = escalation_lift(self.set, self.op_tau()?).map_err(|e| e.to_string())?;
                Ok((
                    vec!["tau", "n_escalated", "small_kappa_escalated", "large_kappa_escalated", "lift"],
                    vec![vec![num(l.tau), int(l.n_escalated), num(l.small_kappa_escalated), num(l.large_kappa_escalated), num(l.lift)]],
                ))
            }),
            TableId::T13 => table(name, "latency_profile", &[], None, || {
                let p = latency_profile(self.set, self.op_tau()?).map_err(|e| e.to_string())?;
                let row = |s: &str, l: crate::cascade::LatencySummary| vec![text(s), num(l.median_ms), num(l.p95_ms)];
                Ok((
                    vec!["strategy", "median_ms", "p95_ms"],
                    vec![row("always_large", p.always_large), row("always_small", p.always_small), row("cascade", p.cascade)],
                ))
            }),
            TableId::T14 => table(name, "ece + nce", &[("bins", DEFAULT_BINS.to_string())], None, || {
                Ok((
                    vec!["model", "ece", "nce"],
                    vec![vec![
                        text("small"),
                        cell(ece(&self.conf, &self.small_correct, DEFAULT_BINS)),
                        cell(nce(&self.conf, &self.small_correct)),
                    ]],
                ))
            }),
            TableId::T15 => table(name, "stratified_calibration", &[("bins", DEFAULT_BINS.to_string())], None, || {
                let rows = stratified_calibration(self.set)
                    .into_iter()
                    .map(|s| vec![text("small"), text(stratum_name(s.stratum)), int(s.n), cell(s.auroc), cell(s.ece)])
                    .collect();
                Ok((vec!["model", "subset", "n", "auroc", "ece"], rows))
            }),
            TableId::T16 => {
                let cv_seed = substream(c.seed, "cv");
                table(
                    name,
                    "cross_validate_selection",
                    &[("k", c.cv_folds.to_string()), ("delta", c.delta.to_string()), ("stratified_on", crate::cascade::STRATIFY_ON.into())],
                    Some(c.seed),
                    || {
                        let pricing = self.pricing.as_ref().map_err(|e| e.to_string())?;
                        let cv = cross_validate_selection(
                            self.set,
                            pricing,
                            &CvConfig { k: c.cv_folds, seed: cv_seed, delta: c.delta, taus: c.taus.clone() },
                        )
                        .map_err(|e| e.to_string())?;
                        let mut rows = vec![vec![
                            text("all"),
                            num(cv.in_sample_tau),
                            num(cv.in_sample_kappa),
                            num(cv.mean_held_out_kappa),
                            num(cv.sd_held_out_kappa),
                            num(cv.optimism),
                            num(cv.mean_tau),
                            num(cv.sd_tau),
                        ]];
                        for f in &cv.folds {
                            rows.push(vec![
                                text(format!("fold{}", f.fold)),
                                num(f.tau),
                                num(f.train_kappa),
                                num(f.held_out_kappa),
                                Cell::Text(String::new()),
                                Cell::Text(String::new()),
                                num(f.tau),
                                Cell::Text(String::new()),
                            ]);
                        }
                        Ok((
                            vec!["scope", "tau", "in_sample_kappa", "cv_kappa", "cv_kappa_sd", "optimism", "tau_mean", "tau_sd"],
                            rows,
                        ))
                    },
                )
            }
        }
    }

    fn accuracy_row(&self, model: &str, pred: &[bool], seed: u64) -> Result<Vec<Cell>, String> {
        let pairs: Vec<(bool, bool)> = pred.iter().copied().zip(self.gold.iter().copied()).collect();
        let kappa = cohen_kappa(pred, &self.gold).map_err(|e| format!("{model}: {e}"))?;
        let correct = pairs.iter().filter(|(p, g)| p == g).count();
        let ci = bootstrap_ci(
            &pairs,
            |rs| {
                let mut t = crate::statskit::AgreementTable::default();
                for &&(p, g) in rs {
                    t.push(p, g);
                }
                t.kappa()
            },
            &BootstrapConfig::new(self.config.resamples, seed),
        )
        .map_err(|e| format!("{model}: {e}"))?;
        Ok(vec![
            text(model),
            int(pairs.len()),
            num(correct as f64 / pairs.len() as f64),
            num(kappa),
            num(ci.lo),
            num(ci.hi),
        ])
    }

    fn sweep_curve(&self) -> TableResult {
        table("sweep_curve".into(), "sweep", &[("n_taus", self.config.taus.len().to_string())], None, || {
            let points = self.sweep.as_ref().map_err(|e| e.to_string())?;
            let frontier: BTreeSet<u64> = pareto_filter(points).iter().map(|p| p.tau.to_bits()).collect();
            let selected = self.op.as_ref().ok().map(|o| o.point.tau.to_bits());
            let rows = points
                .iter()
                .map(|p| {
                    vec![
                        num(p.tau),
                        num(p.kappa),
                        num(p.accuracy),
                        num(p.escalation_rate),
                        int(p.n_escalated),
                        num(p.cost_per_decision_usd),
                        num(p.latency_median_ms),
                        num(p.latency_p95_ms),
                        text(frontier.contains(&p.tau.to_bits()).to_string()),
                        text((selected == Some(p.tau.to_bits())).to_string()),
                    ]
                })
                .collect();
            Ok((
                vec![
                    "tau", "kappa", "accuracy", "escalation_rate", "n_escalated", "cost_per_decision_usd", "latency_median_ms",
                    "latency_p95_ms", "on_frontier", "selected",
                ],
                rows,
            ))
        })
    }

    fn reliability_plot(&self) -> TableResult {
        table("reliability_bins".into(), "reliability_bins", &[("bins", DEFAULT_BINS.to_string())], None, || {
            let mut rows = Vec::new();
            let cats = self.set.categories();
            for subset in ["all", "unanimous", "split"] {
                let keep = |c: AgreementCategory| subset == "all" || stratum_name(c) == subset;
                let (conf, correct): (Vec<f64>, Vec<bool>) = cats
                    .iter()
                    .zip(self.conf.iter().zip(&self.small_correct))
                    .filter(|(c, _)| keep(**c))
                    .map(|(_, (&f, &k))| (f, k))
                    .unzip();
                if conf.is_empty() {
                    continue;
                }
                let bins = reliability_bins(&conf, &correct, DEFAULT_BINS).map_err(|e| e.to_string())?;
                for b in bins.bins {
                    let opt = |v: Option<f64>| v.map_or(Cell::Text(String::new()), Cell::Num);
                    rows.push(vec![text(subset), num(b.lower), num(b.upper), int(b.count), opt(b.mean_confidence), opt(b.accuracy)]);
                }
            }
            Ok((vec!["subset", "lower", "upper", "count", "mean_confidence", "accuracy"], rows))
        })
    }

    fn confidence_distribution(&self) -> TableResult {
        table("confidence_distribution".into(), "histogram", &[], None, || {
            let mut counts: BTreeMap<u64, [usize; 2]> = BTreeMap::new();
            for (&c, &k) in self.conf.iter().zip(&self.small_correct) {
                counts.entry(c.to_bits()).or_default()[usize::from(k)] += 1;
            }
            let rows = counts
                .into_iter()
                .map(|(bits, [wrong, right])| vec![num(f64::from_bits(bits)), int(right), int(wrong)])
                .collect();
            Ok((vec!["confidence", "n_correct", "n_incorrect"], rows))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::ModelPrice;
    use crate::dataset::{ConfidenceProfile, ModelOutput, ScoringDecision, SynthConfig};

    fn pricing() -> PricingTable {
        PricingTable::new(ModelPrice::new(0.1, 0.4), ModelPrice::new(3.0, 15.0)).unwrap()
    }

    fn synth(n: usize) -> DecisionSet {
        crate::dataset::generate_synthetic(&SynthConfig {
            n_decisions: n,
            class_balance_correct: 0.25,
            small_accuracy: 0.9,
            large_accuracy: 0.93,
            confidence_profile: ConfidenceProfile::Discriminating { target_auroc: 0.85, distinct_values: 13 },
            annotator_noise: 0.035,
            seed: 3,
            latency: Default::default(),
        })
        .unwrap()
    }

    fn quick() -> ReportConfig {
        ReportConfig { resamples: 200, ..ReportConfig::default() }
    }

    #[test]
    fn table_ids_parse() {
        assert_eq!("9".parse::<TableId>().unwrap(), TableId::T09);
        assert_eq!("table09".parse::<TableId>().unwrap(), TableId::T09);
        assert_eq!("table16_cross_validation".parse::<TableId>().unwrap(), TableId::T16);
        assert!("table17".parse::<TableId>().is_err());
        assert!("table09_latency".parse::<TableId>().is_err());
        assert_eq!(TableId::T04.name(), "table04_accuracy");
    }

    #[test]
    fn distinct_stats() {
        let mk = |conf: &[f64]| {
            let ds = conf
                .iter()
                .enumerate()
                .map(|(i, &c)| ScoringDecision {
                    decision_id: format!("d{i}"),
                    item_id: "i".into(),
                    criterion_id: "c".into(),
                    votes: [true; 3],
                    times_s: [1.0; 3],
                    small: ModelOutput { label: true, confidence: Some(c), latency_ms: 1.0, input_tokens: 1, output_tokens: 1 },
                    large: None,
                })
                .collect();
            DecisionSet::new(ds, "t").unwrap()
        };
        assert_eq!(distinct_confidence_stats(&mk(&[0.99; 5])), (1, 0.0));
        let (k, v) = distinct_confidence_stats(&mk(&[0.9, 0.95, 1.0, 1.0]));
        assert_eq!(k, 3);
        // mean 0.9625; deviations -0.0625, -0.0125, 0.0375, 0.0375
        assert!((v - (0.0625f64.powi(2) + 0.0125f64.powi(2) + 2.0 * 0.0375f64.powi(2)) / 4.0).abs() < 1e-15);
        assert_eq!(distinct_confidence_stats(&mk(&[0.9, 0.95, 1.0, 1.0, 0.95])).0, 3);
    }

    #[test]
    fn strata_partition_the_set() {
        let s = synth(600);
        let strata = stratified_calibration(&s);
        assert_eq!(strata[0].n + strata[1].n, 600);

        let unanimous: Vec<usize> = (0..s.len()).filter(|&i| s.decisions()[i].agreement() == AgreementCategory::Unanimous).collect();
        let u = s.subset(&unanimous).unwrap();
        let only = stratified_calibration(&u);
        assert_eq!(only[1].n, 0);
        assert!(only[1].auroc.is_err());
        let gold = u.majority_labels();
        let correct: Vec<bool> = u.iter().zip(&gold).map(|(d, g)| d.small.label == *g).collect();
        assert_eq!(only[0].auroc, auroc(&u.confidences(), &correct));
    }

    #[test]
    fn full_report_is_deterministic_and_complete() {
        let s = synth(500);
        let a = build_report(&s, Ok(pricing()), &quick());
        let b = build_report(&s, Ok(pricing()), &quick());
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.tables.len(), 15);
        assert!(a.failed_tables().is_empty(), "{:?}", a.tables.values().filter_map(|t| t.error()).collect::<Vec<_>>());

        // the operating point row appears unchanged in the sweep curve
        let t9 = &a.tables[&TableId::T09];
        let curve = &a.plots["sweep_curve"];
        let TableBody::Ok { rows, .. } = &curve.body else { panic!() };
        let sel = rows.iter().position(|r| r[9] == text("true")).unwrap();
        for col in ["tau", "kappa", "escalation_rate", "cost_per_decision_usd"] {
            assert_eq!(t9.get(0, col), curve.get(sel, col), "{col}");
        }
    }

    #[test]
    fn missing_large_blocks_only_cascade_tables() {
        let mut ds = synth(300).decisions().to_vec();
        for d in &mut ds {
            d.large = None;
        }
        let s = DecisionSet::new(ds, "no-large").unwrap();
        let r = build_report(&s, Ok(pricing()), &quick());
        let failed = r.failed_tables();
        for id in [TableId::T09, TableId::T10, TableId::T11, TableId::T12, TableId::T13, TableId::T16] {
            assert!(failed.contains(&id), "{id}");
        }
        for id in [TableId::T02, TableId::T03, TableId::T04, TableId::T05, TableId::T06, TableId::T14, TableId::T15] {
            assert!(!failed.contains(&id), "{id}");
        }
        assert!(r.tables[&TableId::T09].to_csv().starts_with("error\n"));
    }

    #[test]
    fn subset_selection_and_bad_pricing() {
        let s = synth(300);
        let cfg = ReportConfig { tables: Some([TableId::T05, TableId::T08].into()), ..quick() };
        let r = build_report(&s, Err(CascadeError::InvalidPricing("bad".into())), &cfg);
        assert_eq!(r.tables.len(), 2);
        assert_eq!(r.failed_tables(), vec![TableId::T08]);
    }
}
