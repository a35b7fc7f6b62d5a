use std::sync::Arc;
use std::time::{Duration, Instant};

use cascadekit::cascade::{escalates, CascadeError, PricingTable, Role, Usd};
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError};
use crate::log::{LogEntry, LoggedOutput, SmallStatus};
use crate::prompt::{render_prompt, ScoreRequest};
use crate::verdict::{parse_verdict, ParsedVerdict};

/// A backend plus its call policy.
#[derive(Clone)]
pub struct BackendHandle {
    pub backend: Arc<dyn Backend>,
    pub timeout: Duration,
    /// Extra attempts after a transport failure or timeout.
    pub max_retries: u32,
}

impl BackendHandle {
    pub fn new(backend: Arc<dyn Backend>, timeout: Duration, max_retries: u32) -> Self {
        Self { backend, timeout, max_retries }
    }
}

/// The two tiers and their prices.
#[derive(Clone)]
pub struct Backends {
    pub small: BackendHandle,
    pub large: Option<BackendHandle>,
    pub pricing: PricingTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyMs {
    pub small: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub large: Option<f64>,
    /// `small + large`: the calls run one after the other.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendIds {
    pub small: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub large: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub request_id: String,
    pub is_satisfied: bool,
    pub reasoning: String,
    pub escalated: bool,
    /// In `[0, 1]`; absent when the small call failed or was unparseable.
    pub small_confidence: Option<f64>,
    pub tau: f64,
    pub latency_ms: LatencyMs,
    pub cost_usd_estimate: f64,
    pub backend_ids: BackendIds,
    pub warnings: Vec<String>,
}

/// What is known about a request that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDiagnostics {
    pub request_id: String,
    pub small_status: SmallStatus,
    pub small_confidence: Option<f64>,
    pub small_latency_ms: f64,
    pub large_latency_ms: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RouteError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("small backend failed and no large backend is configured: {reason}")]
    SmallFailed { reason: String, diagnostics: PartialDiagnostics },
    #[error("large backend failed after escalation: {reason}")]
    LargeFailed { reason: String, diagnostics: PartialDiagnostics },
    #[error(transparent)]
    Pricing(#[from] CascadeError),
}

impl RouteError {
    pub fn diagnostics(&self) -> Option<&PartialDiagnostics> {
        match self {
            RouteError::SmallFailed { diagnostics, .. } | RouteError::LargeFailed { diagnostics, .. } => Some(diagnostics),
            _ => None,
        }
    }
}

/// A served request and the log line describing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub response: ScoreResponse,
    pub entry: LogEntry,
}

/// Rough token count used for cost estimates: one token per four characters.
pub fn estimate_tokens(text: &str) -> u64 {
    text.chars().count().div_ceil(4) as u64
}

struct Call {
    result: Result<String, BackendError>,
    latency_ms: f64,
}

async fn call(handle: &BackendHandle, prompt: &str) -> Call {
    let start = Instant::now();
    let mut retries = 0;
    let result = loop {
        let attempt = tokio::time::timeout(handle.timeout, handle.backend.complete(prompt, handle.timeout))
            .await
            .unwrap_or(Err(BackendError::Timeout(handle.timeout.as_millis() as u64)));
        match attempt {
            Err(BackendError::Timeout(_) | BackendError::Transport(_)) if retries < handle.max_retries => retries += 1,
            other => break other,
        }
    };
    Call { result, latency_ms: start.elapsed().as_secs_f64() * 1000.0 }
}

/// Scores one request through the cascade.
///
/// The small model always runs first. Its answer is kept when its
/// confidence (as a fraction) is at least `tau`; otherwise the large model
/// is asked and its verdict is returned. An unparseable small answer counts
/// as confidence 0. A small backend that fails after retries forces
/// escalation when a large backend exists.
pub async fn route_request(request: &ScoreRequest, tau: f64, backends: &Backends) -> Result<Scored, RouteError> {
    request.validate().map_err(RouteError::InvalidRequest)?;
    let mut warnings = Vec::new();

    let small_prompt = render_prompt(request, true);
    let small_call = call(&backends.small, &small_prompt).await;
    let small_ms = small_call.latency_ms;
    let (status, verdict, small_tokens) = match small_call.result {
        Ok(text) => {
            let tokens = (estimate_tokens(&small_prompt), estimate_tokens(&text));
            match parse_verdict(&text, Role::Small) {
                Ok(v) => {
                    warnings.extend(v.warnings.iter().map(|w| format!("small: {w}")));
                    (SmallStatus::Ok, Some(v), tokens)
                }
                Err(e) => {
                    warnings.push(format!("small: unparseable response ({e}); treated as confidence 0"));
                    (SmallStatus::ParseFailure, None, tokens)
                }
            }
        }
        Err(e) => {
            warnings.push(format!("small: backend failed ({e})"));
            (SmallStatus::BackendFailure, None, (0, 0))
        }
    };
    let percent = verdict.as_ref().and_then(|v| v.confidence);
    let small_confidence = percent.map(|c| f64::from(c) / 100.0);
    let diagnostics = |warnings: &[String], large_ms: Option<f64>| PartialDiagnostics {
        request_id: request.request_id.clone(),
        small_status: status,
        small_confidence,
        small_latency_ms: small_ms,
        large_latency_ms: large_ms,
        warnings: warnings.to_vec(),
    };
    let small_out = LoggedOutput {
        label: verdict.as_ref().is_some_and(|v| v.is_satisfied),
        confidence: Some(percent.unwrap_or(0)),
        latency_ms: small_ms,
        input_tokens: small_tokens.0,
        output_tokens: small_tokens.1,
    };
    let mut cost = backends.pricing.call_cost(Role::Small, small_tokens.0, small_tokens.1)?;
    let below = small_confidence.is_none_or(|c| escalates(c, tau));

    let large = match (&backends.large, &verdict) {
        (Some(large), _) if below => large,
        (None, None) => {
            let reason = warnings.last().cloned().unwrap_or_default();
            return Err(RouteError::SmallFailed { reason, diagnostics: diagnostics(&warnings, None) });
        }
        (None, Some(v)) if below => {
            warnings.push("no large backend configured; small verdict kept below tau".into());
            return kept(request, tau, backends, v, small_confidence, small_out, status, cost, warnings);
        }
        (_, Some(v)) => return kept(request, tau, backends, v, small_confidence, small_out, status, cost, warnings),
        (Some(_), None) => unreachable!("a missing small verdict is always below tau"),
    };

    let large_prompt = render_prompt(request, false);
    let large_call = call(large, &large_prompt).await;
    let large_ms = large_call.latency_ms;
    let text = match large_call.result {
        Ok(text) => text,
        Err(e) => {
            return Err(RouteError::LargeFailed { reason: e.to_string(), diagnostics: diagnostics(&warnings, Some(large_ms)) })
        }
    };
    let large_verdict = match parse_verdict(&text, Role::Large) {
        Ok(v) => v,
        Err(e) => {
            return Err(RouteError::LargeFailed {
                reason: format!("unparseable response ({e})"),
                diagnostics: diagnostics(&warnings, Some(large_ms)),
            })
        }
    };
    warnings.extend(large_verdict.warnings.iter().map(|w| format!("large: {w}")));
    let large_tokens = (estimate_tokens(&large_prompt), estimate_tokens(&text));
    cost = cost + backends.pricing.call_cost(Role::Large, large_tokens.0, large_tokens.1)?;
    let response = ScoreResponse {
        request_id: request.request_id.clone(),
        is_satisfied: large_verdict.is_satisfied,
        reasoning: large_verdict.reasoning,
        escalated: true,
        small_confidence,
        tau,
        latency_ms: LatencyMs { small: small_ms, large: Some(large_ms), total: small_ms + large_ms },
        cost_usd_estimate: cost.as_f64(),
        backend_ids: BackendIds { small: backends.small.backend.describe(), large: Some(large.backend.describe()) },
        warnings,
    };
    let large_out = LoggedOutput {
        label: large_verdict.is_satisfied,
        confidence: None,
        latency_ms: large_ms,
        input_tokens: large_tokens.0,
        output_tokens: large_tokens.1,
    };
    Ok(Scored { entry: entry(request, small_out, Some(large_out), status, &response), response })
}

#[allow(clippy::too_many_arguments)]
fn kept(
    request: &ScoreRequest,
    tau: f64,
    backends: &Backends,
    verdict: &ParsedVerdict,
    small_confidence: Option<f64>,
    small_out: LoggedOutput,
    status: SmallStatus,
    cost: Usd,
    warnings: Vec<String>,
) -> Result<Scored, RouteError> {
    let small_ms = small_out.latency_ms;
    let response = ScoreResponse {
        request_id: request.request_id.clone(),
        is_satisfied: verdict.is_satisfied,
        reasoning: verdict.reasoning.clone(),
        escalated: false,
        small_confidence,
        tau,
        latency_ms: LatencyMs { small: small_ms, large: None, total: small_ms },
        cost_usd_estimate: cost.as_f64(),
        backend_ids: BackendIds { small: backends.small.backend.describe(), large: None },
        warnings,
    };
    Ok(Scored { entry: entry(request, small_out, None, status, &response), response })
}

fn entry(
    request: &ScoreRequest,
    small: LoggedOutput,
    large: Option<LoggedOutput>,
    small_status: SmallStatus,
    response: &ScoreResponse,
) -> LogEntry {
    LogEntry {
        decision_id: request.request_id.clone(),
        item_id: request.item_id.clone(),
        criterion_id: request.criterion_id.clone(),
        small,
        large,
        small_status,
        response: response.clone(),
    }
}
