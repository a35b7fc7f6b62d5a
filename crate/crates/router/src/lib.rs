//! A scoring gateway that runs a small model first and escalates
//! low-confidence verdicts to a large model.
//!
//! * [`render_prompt`] and [`parse_verdict`]: the prompt and its JSON answer
//! * [`Backend`]: the completion contract, with mock implementations
//! * [`route_request`]: one request through the cascade
//! * [`server`]: the HTTP service and its decision log

mod backend;
pub mod config;
mod gateway;
mod log;
mod prompt;
pub mod server;
mod verdict;

pub use backend::{backend_from_endpoint, Backend, BackendError, FailingBackend, FixedBackend, ScriptedBackend};
pub use config::{RouterConfig, CONFIG_ENV};
pub use gateway::{
    estimate_tokens, route_request, BackendHandle, BackendIds, Backends, LatencyMs, PartialDiagnostics, RouteError,
    ScoreResponse, Scored,
};
pub use log::{attach_labels, DecisionLog, LogEntry, LoggedOutput, SmallStatus};
pub use prompt::{render_prompt, ScoreRequest, CONFIDENCE_FIELD, ELICITATION};
pub use verdict::{parse_verdict, ParsedVerdict, VerdictError, VerdictWarning};
