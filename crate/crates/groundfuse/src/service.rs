//! HTTP and WebSocket front end for interactive sessions. Each session is
//! owned by one task that applies requests in arrival order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use groundfuse_core::expert::ExpertParams;
use groundfuse_core::map::WorldMap;
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::assets;
use crate::session::{Command, CommandReply, SentenceReply, Session, SessionRequest, SessionState, StepReply};

/// Step period while a session is running.
pub const RUN_INTERVAL: Duration = Duration::from_millis(50);

enum Msg {
    Command(Command, oneshot::Sender<Result<CommandReply, String>>),
    State(oneshot::Sender<SessionState>),
    Run(bool, oneshot::Sender<bool>),
}

#[derive(Clone)]
struct Handle {
    tx: mpsc::Sender<Msg>,
    events: broadcast::Sender<String>,
}

#[derive(Clone)]
pub struct AppState {
    maps: &'static [WorldMap],
    params: &'static ExpertParams,
    seed: u64,
    next_id: Arc<AtomicU64>,
    sessions: Arc<Mutex<HashMap<u64, Handle>>>,
}

impl AppState {
    /// Maps and parameters live for the rest of the process.
    pub fn new(maps: Vec<WorldMap>, params: ExpertParams, seed: u64) -> Self {
        AppState {
            maps: Vec::leak(maps),
            params: Box::leak(Box::new(params)),
            seed,
            next_id: Arc::new(AtomicU64::new(1)),
            sessions: Arc::default(),
        }
    }

    fn handle(&self, id: u64) -> Result<Handle, ApiError> {
        self.sessions.lock().expect("session table").get(&id).cloned().ok_or(ApiError::NotFound(id))
    }
}

#[derive(Debug)]
enum ApiError {
    NotFound(u64),
    BadRequest(String),
    Gone(u64),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound(id) => (StatusCode::NOT_FOUND, format!("no session {id}")),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Gone(id) => (StatusCode::GONE, format!("session {id} stopped")),
        };
        (code, Json(ErrorBody { error: msg })).into_response()
    }
}

fn publish(events: &broadcast::Sender<String>, value: &impl Serialize) {
    if let Ok(text) = serde_json::to_string(value) {
        let _ = events.send(text);
    }
}

async fn drive(mut session: Session, mut rx: mpsc::Receiver<Msg>, events: broadcast::Sender<String>) {
    let mut running = false;
    let mut tick = tokio::time::interval(RUN_INTERVAL);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            msg = rx.recv() => match msg {
                None => break,
                Some(Msg::Command(c, reply)) => {
                    let r = session.apply(c);
                    if let Ok(ok) = &r {
                        publish(&events, ok);
                    }
                    let _ = reply.send(r);
                }
                Some(Msg::State(reply)) => {
                    let _ = reply.send(session.state());
                }
                Some(Msg::Run(on, reply)) => {
                    running = on && !session.search().finished();
                    let _ = reply.send(running);
                }
            },
            _ = tick.tick(), if running => {
                match session.apply(Command::Step { count: 1 }) {
                    Ok(r) => {
                        if let CommandReply::Step(s) = &r {
                            running = !s.finished;
                        }
                        publish(&events, &r);
                    }
                    Err(_) => running = false,
                }
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: u64,
    pub state: SessionState,
}

async fn create(State(app): State<AppState>, Json(req): Json<SessionRequest>) -> Result<Json<Created>, ApiError> {
    let session = Session::new(app.maps, app.params, req, app.seed).map_err(ApiError::BadRequest)?;
    let state = session.state();
    let id = app.next_id.fetch_add(1, Ordering::Relaxed);
    let (tx, rx) = mpsc::channel(64);
    let (events, _) = broadcast::channel(256);
    tokio::spawn(drive(session, rx, events.clone()));
    app.sessions.lock().expect("session table").insert(id, Handle { tx, events });
    Ok(Json(Created { id, state }))
}

async fn command(app: &AppState, id: u64, c: Command) -> Result<CommandReply, ApiError> {
    let h = app.handle(id)?;
    let (tx, rx) = oneshot::channel();
    h.tx.send(Msg::Command(c, tx)).await.map_err(|_| ApiError::Gone(id))?;
    rx.await.map_err(|_| ApiError::Gone(id))?.map_err(ApiError::BadRequest)
}

#[derive(Debug, Deserialize)]
struct SentenceBody {
    text: String,
}

async fn sentence(
    State(app): State<AppState>,
    Path(id): Path<u64>,
    Json(b): Json<SentenceBody>,
) -> Result<Json<SentenceReply>, ApiError> {
    match command(&app, id, Command::Sentence { text: b.text }).await? {
        CommandReply::Sentence(r) => Ok(Json(r)),
        CommandReply::Step(_) => unreachable!("sentence command"),
    }
}

#[derive(Debug, Default, Deserialize)]
struct StepBody {
    #[serde(default = "one")]
    count: usize,
}

fn one() -> usize {
    1
}

async fn step(
    State(app): State<AppState>,
    Path(id): Path<u64>,
    body: Option<Json<StepBody>>,
) -> Result<Json<StepReply>, ApiError> {
    let count = body.map_or(1, |Json(b)| b.count);
    match command(&app, id, Command::Step { count }).await? {
        CommandReply::Step(r) => Ok(Json(r)),
        CommandReply::Sentence(_) => unreachable!("step command"),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunState {
    pub running: bool,
}

async fn set_running(app: &AppState, id: u64, on: bool) -> Result<Json<RunState>, ApiError> {
    let h = app.handle(id)?;
    let (tx, rx) = oneshot::channel();
    h.tx.send(Msg::Run(on, tx)).await.map_err(|_| ApiError::Gone(id))?;
    Ok(Json(RunState { running: rx.await.map_err(|_| ApiError::Gone(id))? }))
}

async fn run(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<RunState>, ApiError> {
    set_running(&app, id, true).await
}

async fn pause(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<RunState>, ApiError> {
    set_running(&app, id, false).await
}

async fn state(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<SessionState>, ApiError> {
    let h = app.handle(id)?;
    let (tx, rx) = oneshot::channel();
    h.tx.send(Msg::State(tx)).await.map_err(|_| ApiError::Gone(id))?;
    Ok(Json(rx.await.map_err(|_| ApiError::Gone(id))?))
}

async fn close(State(app): State<AppState>, Path(id): Path<u64>) -> Result<StatusCode, ApiError> {
    // Dropping the sender ends the session task.
    app.sessions.lock().expect("session table").remove(&id).map(|_| StatusCode::NO_CONTENT).ok_or(ApiError::NotFound(id))
}

async fn events(
    State(app): State<AppState>,
    Path(id): Path<u64>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let rx = app.handle(id)?.events.subscribe();
    Ok(ws.on_upgrade(move |socket| forward(socket, rx)))
}

async fn forward(mut socket: WebSocket, mut rx: broadcast::Receiver<String>) {
    loop {
        match rx.recv().await {
            Ok(text) => {
                if socket.send(Message::Text(text)).await.is_err() {
                    break;
                }
            }
            Err(broadcast::error::RecvError::Lagged(_)) => continue,
            Err(broadcast::error::RecvError::Closed) => break,
        }
    }
}

async fn maps(State(app): State<AppState>) -> Json<&'static [WorldMap]> {
    Json(app.maps)
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/maps", get(maps))
        .route("/sessions", post(create))
        .route("/sessions/:id", axum::routing::delete(close))
        .route("/sessions/:id/sentence", post(sentence))
        .route("/sessions/:id/step", post(step))
        .route("/sessions/:id/run", post(run))
        .route("/sessions/:id/pause", post(pause))
        .route("/sessions/:id/state", get(state))
        .route("/sessions/:id/events", get(events))
        .with_state(app)
}

/// Serves the bundled maps with default expert parameters until the
/// process is stopped.
pub async fn serve(addr: &str, seed: u64) -> std::io::Result<()> {
    let app = AppState::new(assets::bundled_maps(), ExpertParams::default(), seed);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app)).await
}
