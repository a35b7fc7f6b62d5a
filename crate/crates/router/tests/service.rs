use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use cascadekit::cascade::{route, ModelPrice, PricingTable, Route};
use cascadekit::dataset::parse_decisions;
use cascadekit_router::config::{BackendConfig, BackendsConfig, PricingSource};
use cascadekit_router::server::{app, Gateway};
use cascadekit_router::{
    attach_labels, Backend, BackendError, BackendHandle, Backends, DecisionLog, FixedBackend, LogEntry, RouterConfig,
    ScoreRequest, ScoreResponse,
};
use serde_json::{json, Value};
use tokio::sync::Notify;
use tower::ServiceExt;

fn pricing() -> PricingTable {
    PricingTable::new(ModelPrice::new(0.1, 0.4), ModelPrice::new(3.0, 15.0)).unwrap()
}

fn config(tau: f64) -> RouterConfig {
    let b = |id: &str| BackendConfig { id: id.into(), endpoint: "mock://fail".into(), timeout_ms: 1000, max_retries: 1 };
    RouterConfig {
        tau,
        delta: 0.02,
        backends: BackendsConfig { small: b("small"), large: Some(b("large")) },
        pricing: PricingSource::Inline(pricing()),
        log_path: None,
        listen: None,
    }
}

fn request(id: &str) -> ScoreRequest {
    ScoreRequest {
        request_id: id.into(),
        problem: "Find the slope of y = 3x + 1".into(),
        student_answer: "3".into(),
        criterion: "Identifies the coefficient of x as the slope".into(),
        conversation: "Proctor: Why 3?\nStudent: It multiplies x.".into(),
        item_id: "item-7".into(),
        criterion_id: "slope".into(),
    }
}

fn handle(b: impl Backend + 'static) -> BackendHandle {
    BackendHandle::new(Arc::new(b), Duration::from_secs(5), 1)
}

fn fixed(id: &str, satisfied: bool, confidence: Option<i64>, ms: u64) -> FixedBackend {
    FixedBackend { id: id.into(), satisfied, confidence, latency: Duration::from_millis(ms) }
}

async fn call(router: axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = router.oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::test]
async fn health_and_config_endpoints() {
    let backends = Backends { small: handle(fixed("s", true, Some(90), 0)), large: None, pricing: pricing() };
    let g = Arc::new(Gateway::new(config(0.77), backends, None));
    let (status, body) = call(app(g.clone()), "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok", "tau": 0.77 }));

    let (_, body) = call(app(g.clone()), "GET", "/v1/config", None).await;
    assert_eq!(body["backends"]["small"]["id"], "small");
    assert_eq!(body["pricing"]["large"]["output_per_million_usd"], 15.0);

    let (status, _) = call(app(g.clone()), "PUT", "/v1/config/tau", Some(json!({ "tau": -0.1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = call(app(g.clone()), "PUT", "/v1/config/tau", Some(json!({ "tau": 0.5 }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["tau"], 0.5);
    assert_eq!(call(app(g), "GET", "/healthz", None).await.1["tau"], 0.5);
}

#[tokio::test]
async fn score_endpoint_status_codes() {
    let backends = Backends {
        small: handle(fixed("s", true, Some(30), 0)),
        large: Some(handle(cascadekit_router::FailingBackend { id: "l".into() })),
        pricing: pricing(),
    };
    let g = Arc::new(Gateway::new(config(0.77), backends, None));
    let mut bad = serde_json::to_value(request("r")).unwrap();
    bad["criterion"] = json!("");
    assert_eq!(call(app(g.clone()), "POST", "/v1/score", Some(bad)).await.0, StatusCode::BAD_REQUEST);

    let (status, body) = call(app(g), "POST", "/v1/score", Some(serde_json::to_value(request("r")).unwrap())).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["diagnostics"]["small_confidence"], 0.3);
}

#[tokio::test]
async fn concurrent_requests_are_independent_and_both_logged() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("log.jsonl");
    let backends = Backends {
        small: handle(fixed("s", true, Some(60), 40)),
        large: Some(handle(fixed("l", false, None, 40))),
        pricing: pricing(),
    };
    let g = Arc::new(Gateway::new(config(0.77), backends, Some(DecisionLog::open(&log_path).unwrap())));
    let body = |id: &str| Some(serde_json::to_value(request(id)).unwrap());
    let started = std::time::Instant::now();
    let ((sa, a), (sb, b)) =
        tokio::join!(call(app(g.clone()), "POST", "/v1/score", body("a")), call(app(g.clone()), "POST", "/v1/score", body("b")));
    // two sequential cascades would take at least 160 ms
    assert!(started.elapsed() < Duration::from_millis(160));
    assert_eq!((sa, sb), (StatusCode::OK, StatusCode::OK));
    assert_eq!((a["request_id"].as_str(), b["request_id"].as_str()), (Some("a"), Some("b")));
    assert!(a["escalated"].as_bool().unwrap() && b["escalated"].as_bool().unwrap());

    let text = std::fs::read_to_string(&log_path).unwrap();
    let mut ids: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<LogEntry>(l).unwrap().decision_id)
        .collect();
    ids.sort();
    assert_eq!(ids, ["a", "b"]);
}

/// Holds every call until released, and signals when one has started.
struct Gate {
    entered: Arc<Notify>,
    release: Arc<Notify>,
}

#[async_trait]
impl Backend for Gate {
    async fn complete(&self, _prompt: &str, _timeout: Duration) -> Result<String, BackendError> {
        self.entered.notify_one();
        self.release.notified().await;
        Ok(r#"{"1_Reasoning":"r","2_IsSatisfied":true,"3_Confidence":70}"#.into())
    }

    fn describe(&self) -> String {
        "gate".into()
    }
}

#[tokio::test]
async fn tau_reload_spares_requests_in_flight() {
    let entered = Arc::new(Notify::new());
    let release = Arc::new(Notify::new());
    let backends = Backends {
        small: handle(Gate { entered: entered.clone(), release: release.clone() }),
        large: Some(handle(fixed("l", false, None, 0))),
        pricing: pricing(),
    };
    let g = Arc::new(Gateway::new(config(0.5), backends, None));

    let in_flight = tokio::spawn({
        let g = g.clone();
        async move { g.score(&request("old")).await.unwrap() }
    });
    entered.notified().await;
    g.set_tau(0.9).unwrap();
    release.notify_one();
    let old: ScoreResponse = in_flight.await.unwrap();
    assert_eq!(old.tau, 0.5);
    assert!(!old.escalated);

    let next = tokio::spawn({
        let g = g.clone();
        async move { g.score(&request("new")).await.unwrap() }
    });
    entered.notified().await;
    release.notify_one();
    let new = next.await.unwrap();
    assert_eq!(new.tau, 0.9);
    assert!(new.escalated);
}

#[tokio::test]
async fn labelled_log_loads_as_a_decision_set() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("decisions.jsonl");
    let mut cfg = config(0.77);
    cfg.log_path = Some(log_path.clone());
    cfg.backends.small.endpoint = "mock://fixed?satisfied=true&confidence=64".into();
    cfg.backends.large.as_mut().unwrap().endpoint = "mock://fixed?satisfied=false".into();
    let g = Gateway::from_config(cfg).unwrap();
    let mut responses = Vec::new();
    for i in 0..5 {
        responses.push(g.score(&request(&format!("r{i}"))).await.unwrap());
    }
    g.set_tau(0.6).unwrap();
    responses.push(g.score(&request("r5")).await.unwrap());

    let labelled: String = std::fs::read_to_string(&log_path)
        .unwrap()
        .lines()
        .map(|l| attach_labels(l, [true, false, true], [30.0, 41.5, 12.25]).unwrap() + "\n")
        .collect();
    let set = parse_decisions(&labelled, "gateway log").unwrap();
    assert_eq!(set.len(), 6);
    for (d, r) in set.iter().zip(&responses) {
        assert_eq!(d.decision_id, r.request_id);
        assert_eq!((d.item_id.as_str(), d.criterion_id.as_str()), ("item-7", "slope"));
        assert_eq!(d.small.confidence, r.small_confidence);
        assert_eq!(d.small.latency_ms, r.latency_ms.small);
        assert_eq!(d.large.as_ref().map(|l| l.latency_ms), r.latency_ms.large);
        let offline = route(d, r.tau).unwrap();
        assert_eq!(offline.route == Route::Escalated, r.escalated);
        assert_eq!(offline.label, r.is_satisfied);
    }
    assert!(responses[..5].iter().all(|r| r.escalated));
    assert!(!responses[5].escalated);
}
