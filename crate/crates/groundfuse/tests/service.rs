use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use groundfuse::assets;
use groundfuse::service::{router, AppState};
use groundfuse_core::expert::ExpertParams;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(assets::bundled_maps(), ExpertParams::default(), 7))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, seed: u64) -> u64 {
    let (status, v) = call(app, "POST", "/sessions", Some(json!({"map_id": "demo", "seed": seed}))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["id"].as_u64().unwrap()
}

#[tokio::test]
async fn lists_bundled_maps() {
    let app = app();
    let (status, v) = call(&app, "GET", "/maps", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|m| m["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["demo", "city-a", "city-b", "city-c"]);
}

#[tokio::test]
async fn sentence_then_step_updates_state() {
    let app = app();
    let id = create(&app, 3).await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;

    let (status, r) =
        call(&app, "POST", &format!("/sessions/{id}/sentence"), Some(json!({"text": "the bag is near building 6"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["accepted"], true);
    assert_eq!(r["tuples"][0]["relation"], "near");
    assert_eq!(r["tuples"][0]["landmark"], "b6");
    assert!(r["entropy"].as_f64().unwrap() < before["belief"]["entropy"].as_f64().unwrap());
    let (rows, cols) = (r["belief"]["rows"].as_u64().unwrap(), r["belief"]["cols"].as_u64().unwrap());
    assert!(rows <= 128 && cols <= 128);
    assert_eq!(r["belief"]["mass"].as_array().unwrap().len() as u64, rows * cols);

    let (status, s) = call(&app, "POST", &format!("/sessions/{id}/step"), Some(json!({"count": 5}))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(s["step"].as_u64().unwrap() >= 1);
    let (_, after) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(after["step"], s["step"]);
    assert_eq!(after["entropy"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn bad_sentence_is_a_structured_rejection() {
    let app = app();
    let id = create(&app, 1).await;
    let (status, r) = call(&app, "POST", &format!("/sessions/{id}/sentence"), Some(json!({"text": "xyzzy building 4"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["accepted"], false);
    assert_eq!(r["error"]["reason"], "parse");
    assert_eq!(r["error"]["error"]["kind"], "UnknownRelation");
    assert_eq!(r["error"]["error"]["detail"], "xyzzy");
}

#[tokio::test]
async fn unknown_session_and_map_are_errors() {
    let app = app();
    let (status, v) = call(&app, "GET", "/sessions/99/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(v["error"].as_str().unwrap().contains("99"));
    let (status, v) = call(&app, "POST", "/sessions", Some(json!({"map_id": "atlantis"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("atlantis"));
}

#[tokio::test]
async fn sessions_do_not_interfere() {
    let app = app();
    let a = create(&app, 5).await;
    let b = create(&app, 5).await;
    call(&app, "POST", &format!("/sessions/{a}/sentence"), Some(json!({"text": "the bag is around building 4"}))).await;
    call(&app, "POST", &format!("/sessions/{a}/step"), Some(json!({"count": 10}))).await;
    let (_, sa) = call(&app, "GET", &format!("/sessions/{a}/state"), None).await;
    let (_, sb) = call(&app, "GET", &format!("/sessions/{b}/state"), None).await;
    assert_eq!(sb["step"], 0);
    assert_ne!(sa["belief"], sb["belief"]);
}

#[tokio::test]
async fn run_and_pause() {
    let app = app();
    let id = create(&app, 2).await;
    let (_, r) = call(&app, "POST", &format!("/sessions/{id}/run"), None).await;
    assert_eq!(r["running"], true);
    tokio::time::sleep(std::time::Duration::from_millis(300)).await;
    let (_, r) = call(&app, "POST", &format!("/sessions/{id}/pause"), None).await;
    assert_eq!(r["running"], false);
    let (_, s1) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert!(s1["step"].as_u64().unwrap() >= 1);
    tokio::time::sleep(std::time::Duration::from_millis(200)).await;
    let (_, s2) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(s1["step"], s2["step"]);
    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn websocket_streams_command_replies() {
    use futures_util::StreamExt;
    let app = app();
    let id = create(&app, 4).await;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let served = app.clone();
    tokio::spawn(async move { axum::serve(listener, served).await.unwrap() });
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/events")).await.unwrap();
    // the subscription is live once the upgrade completes
    call(&app, "POST", &format!("/sessions/{id}/sentence"), Some(json!({"text": "the bag is near building 5"}))).await;
    let msg = tokio::time::timeout(std::time::Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
    let v: Value = serde_json::from_str(msg.to_text().unwrap()).unwrap();
    assert_eq!(v["kind"], "sentence");
    assert_eq!(v["tuples"][0]["landmark"], "b5");
}
