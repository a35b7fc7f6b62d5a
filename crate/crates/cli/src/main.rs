use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cascadekit::cascade::{
    cross_validate_selection, default_taus, escalation_lift, pareto_filter, select_operating_point, sweep, CascadeData,
    CvConfig, PricingTable, DEFAULT_DELTA,
};
use cascadekit::dataset::{
    generate_synthetic, load_decisions, write_decisions, AgreementCategory, DecisionFormat, DecisionSet, SynthConfig,
};
use cascadekit::report::{distinct_confidence_stats, run_full_report, ReportConfig, TableId};
use cascadekit::uncertainty::{response_time_difficulty, DEFAULT_CAP_PERCENTILE};
use cascadekit_router::config::resolve_config_path;
use cascadekit_router::RouterConfig;
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cascadekit", version, about = "Confidence-routed small/large model cascades for rubric scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a decision file and print a summary.
    Validate { path: PathBuf },
    /// Generate a seeded synthetic decision file.
    Synth {
        /// JSON synthesis config.
        #[arg(long)]
        config: PathBuf,
        /// Replaces the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-decision response-time difficulty.
    Difficulty {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP_PERCENTILE)]
        cap: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate every threshold on the default grid.
    Sweep {
        path: PathBuf,
        #[arg(long)]
        pricing: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the operating threshold.
    Select {
        path: PathBuf,
        #[arg(long)]
        pricing: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Cross-validate the threshold selection.
    Cv {
        path: PathBuf,
        #[arg(long)]
        pricing: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Compare kept and escalated decisions at one threshold.
    Lift {
        path: PathBuf,
        #[arg(long)]
        tau: f64,
    },
    /// Compute the full table set into a run directory.
    Report {
        path: PathBuf,
        #[arg(long)]
        pricing: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated table numbers or names, e.g. `9,10,table16`.
        #[arg(long, value_delimiter = ',')]
        tables: Option<Vec<TableId>>,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Run the scoring gateway.
    Serve {
        /// TOML or JSON config; `CASCADEKIT_CONFIG` takes precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<DecisionSet> {
    load_decisions(path, DecisionFormat::Jsonl).with_context(|| format!("loading {}", path.display()))
}

fn pricing(path: &Path) -> Result<PricingTable> {
    Ok(PricingTable::load(path)?)
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    decisions: usize,
    split_fraction: f64,
    has_large: bool,
    distinct_confidence_values: usize,
    confidence_variance: f64,
}

#[derive(Serialize)]
struct DifficultyRow<'a> {
    decision_id: &'a str,
    category: AgreementCategory,
    difficulty: f64,
}

#[derive(Serialize)]
struct SweepRow {
    tau: f64,
    n: usize,
    n_escalated: usize,
    escalation_rate: f64,
    kappa: f64,
    accuracy: f64,
    total_cost_usd: String,
    cost_per_decision_usd: f64,
    latency_median_ms: f64,
    latency_p95_ms: f64,
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { path } => {
            let set = load(&path)?;
            let (distinct, variance) = distinct_confidence_stats(&set);
            print_json(&Summary {
                decisions: set.len(),
                split_fraction: set.split_fraction(),
                has_large: set.has_large(),
                distinct_confidence_values: distinct,
                confidence_variance: variance,
            })?;
        }
        Command::Synth { config, seed, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut value: serde_json::Value = serde_json::from_str(&text)?;
            if let Some(seed) = seed {
                value["seed"] = seed.into();
            }
            let cfg: SynthConfig = serde_json::from_value(value).context("synthesis config")?;
            let set = generate_synthetic(&cfg)?;
            write_decisions(&set, &out)?;
            eprintln!("wrote {} decisions to {}", set.len(), out.display());
        }
        Command::Difficulty { path, cap, out } => {
            let set = load(&path)?;
            let scores = response_time_difficulty(&set, cap)?;
            write_csv(
                &out,
                set.iter().zip(&scores.categories).zip(&scores.difficulty).map(|((d, c), &difficulty)| DifficultyRow {
                    decision_id: &d.decision_id,
                    category: *c,
                    difficulty,
                }),
            )?;
        }
        Command::Sweep { path, pricing: p, out } => {
            let points = sweep(&load(&path)?, &pricing(&p)?, &default_taus())?;
            write_csv(
                &out,
                points.into_iter().map(|p| SweepRow {
                    tau: p.tau,
                    n: p.n,
                    n_escalated: p.n_escalated,
                    escalation_rate: p.escalation_rate,
                    kappa: p.kappa,
                    accuracy: p.accuracy,
                    total_cost_usd: p.total_cost.to_fixed6(),
                    cost_per_decision_usd: p.cost_per_decision_usd,
                    latency_median_ms: p.latency_median_ms,
                    latency_p95_ms: p.latency_p95_ms,
                }),
            )?;
        }
        Command::Select { path, pricing: p, delta } => {
            let data = CascadeData::new(&load(&path)?, &pricing(&p)?)?;
            let frontier = pareto_filter(&data.sweep(&default_taus())?);
            print_json(&select_operating_point(&frontier, data.large_kappa()?, delta)?)?;
        }
        Command::Cv { path, pricing: p, k, seed, delta } => {
            let config = CvConfig { k, seed, delta, ..CvConfig::default() };
            print_json(&cross_validate_selection(&load(&path)?, &pricing(&p)?, &config)?)?;
        }
        Command::Lift { path, tau } => print_json(&escalation_lift(&load(&path)?, tau)?)?,
        Command::Report { path, pricing, seed, out, tables, resamples, delta } => {
            let config = ReportConfig {
                seed,
                resamples,
                delta,
                tables: tables.map(BTreeSet::from_iter),
                ..ReportConfig::default()
            };
            let report = run_full_report(&path, &pricing, &config)?;
            report.write(&out)?;
            let failed = report.failed_tables();
            for id in &failed {
                let t = &report.tables[id];
                eprintln!("{}: {}", id.name(), t.error().unwrap_or_default());
            }
            eprintln!("wrote {} tables to {}", report.tables.len(), out.display());
            if !failed.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Serve { config } => {
            let path = resolve_config_path(config.as_deref())?;
            let config = RouterConfig::load(&path)?;
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(cascadekit_router::server::serve(config))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn table_list_parses() {
        let cli = Cli::try_parse_from(["cascadekit", "report", "d.jsonl", "--pricing", "p.json", "--out", "o", "--tables", "9,table10,16"])
            .unwrap();
        let Command::Report { tables, .. } = cli.command else { panic!() };
        assert_eq!(tables.unwrap(), [TableId::T09, TableId::T10, TableId::T16]);
        assert!(Cli::try_parse_from(["cascadekit", "report", "d", "--pricing", "p", "--out", "o", "--tables", "99"]).is_err());
    }
}
