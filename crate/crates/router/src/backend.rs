use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("timed out after {0} ms")]
    Timeout(u64),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unsupported backend endpoint {0:?}")]
    Unsupported(String),
}

/// A text-completion service.
#[async_trait]
pub trait Backend: Send + Sync {
    async fn complete(&self, prompt: &str, timeout: Duration) -> Result<String, BackendError>;

    /// Identifier reported in responses and logs.
    fn describe(&self) -> String;
}

/// Always answers with the same verdict after a fixed delay.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBackend {
    pub id: String,
    pub satisfied: bool,
    /// Omitted from the answer when `None`.
    pub confidence: Option<i64>,
    pub latency: Duration,
}

impl FixedBackend {
    pub fn answer(&self) -> String {
        let mut v = serde_json::json!({
            "1_Reasoning": format!("fixed verdict from {}", self.id),
            "2_IsSatisfied": self.satisfied,
        });
        if let Some(c) = self.confidence {
            v["3_Confidence"] = c.into();
        }
        v.to_string()
    }
}

#[async_trait]
impl Backend for FixedBackend {
    async fn complete(&self, _prompt: &str, timeout: Duration) -> Result<String, BackendError> {
        if self.latency > timeout {
            tokio::time::sleep(timeout).await;
            return Err(BackendError::Timeout(timeout.as_millis() as u64));
        }
        tokio::time::sleep(self.latency).await;
        Ok(self.answer())
    }

    fn describe(&self) -> String {
        self.id.clone()
    }
}

/// Always fails with a transport error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailingBackend {
    pub id: String,
}

#[async_trait]
impl Backend for FailingBackend {
    async fn complete(&self, _prompt: &str, _timeout: Duration) -> Result<String, BackendError> {
        Err(BackendError::Transport(format!("{} is configured to fail", self.id)))
    }

    fn describe(&self) -> String {
        self.id.clone()
    }
}

type Script = dyn Fn(&str) -> Result<String, BackendError> + Send + Sync;

/// Answers by calling a closure on the prompt.
#[derive(Clone)]
pub struct ScriptedBackend {
    id: String,
    script: Arc<Script>,
}

impl ScriptedBackend {
    pub fn new(id: impl Into<String>, script: impl Fn(&str) -> Result<String, BackendError> + Send + Sync + 'static) -> Self {
        Self { id: id.into(), script: Arc::new(script) }
    }
}

#[async_trait]
impl Backend for ScriptedBackend {
    async fn complete(&self, prompt: &str, _timeout: Duration) -> Result<String, BackendError> {
        (self.script)(prompt)
    }

    fn describe(&self) -> String {
        self.id.clone()
    }
}

/// Builds an in-tree backend from an endpoint locator.
///
/// * `mock://fixed?satisfied=true&confidence=90&latency_ms=5`
/// * `mock://fail`
///
/// Other schemes need a [`Backend`] implementation supplied by the caller.
pub fn backend_from_endpoint(id: &str, endpoint: &str) -> Result<Arc<dyn Backend>, BackendError> {
    let unsupported = || BackendError::Unsupported(endpoint.to_string());
    let url = Url::parse(endpoint).map_err(|_| unsupported())?;
    if url.scheme() != "mock" {
        return Err(unsupported());
    }
    match url.host_str() {
        Some("fixed") => {
            let mut fixed = FixedBackend { id: id.to_string(), satisfied: true, confidence: None, latency: Duration::ZERO };
            for (key, value) in url.query_pairs() {
                let bad = || BackendError::Unsupported(format!("{endpoint}: bad {key}={value}"));
                match &*key {
                    "satisfied" => fixed.satisfied = value.parse().map_err(|_| bad())?,
                    "confidence" => fixed.confidence = Some(value.parse().map_err(|_| bad())?),
                    "latency_ms" => fixed.latency = Duration::from_millis(value.parse().map_err(|_| bad())?),
                    _ => return Err(bad()),
                }
            }
            Ok(Arc::new(fixed))
        }
        Some("fail") => Ok(Arc::new(FailingBackend { id: id.to_string() })),
        _ => Err(unsupported()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn fixed_endpoint_round_trip() {
        let b = backend_from_endpoint("s", "mock://fixed?satisfied=false&confidence=42&latency_ms=1").unwrap();
        let text = b.complete("p", Duration::from_secs(1)).await.unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["2_IsSatisfied"], false);
        assert_eq!(v["3_Confidence"], 42);
        assert_eq!(b.describe(), "s");
    }

    #[tokio::test]
    async fn fixed_backend_times_out() {
        let b = backend_from_endpoint("s", "mock://fixed?latency_ms=50").unwrap();
        assert_eq!(b.complete("p", Duration::from_millis(5)).await, Err(BackendError::Timeout(5)));
    }

    #[test]
    fn rejects_unknown_endpoints() {
        for e in ["https://api.example.com/v1", "mock://other", "mock://fixed?colour=red", "not a url"] {
            assert!(matches!(backend_from_endpoint("x", e), Err(BackendError::Unsupported(_))), "{e}");
        }
    }
}
