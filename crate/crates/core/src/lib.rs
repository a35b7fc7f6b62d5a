//! Tools for calibrating, simulating and selecting confidence-routed
//! small/large model cascades for rubric scoring.
//!
//! * [`dataset`]: decision records, ground truth and synthetic fixtures
//! * [`statskit`]: agreement, discrimination, calibration and resampling
//! * [`uncertainty`]: human difficulty proxies and their link to confidence
//! * [`cascade`]: threshold sweeps, Pareto selection, cost and latency
//! * [`report`]: end-to-end table generation

pub mod cascade;
pub mod dataset;
pub mod report;
pub mod statskit;
pub mod uncertainty;
