use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use swarmsir_core::score::ScoreBreakdown;
use swarmsir_core::swarm::SimConfig;
use tokio::sync::{broadcast, mpsc, oneshot};
use tracing::{debug, info, warn};
use uuid::Uuid;

use crate::protocol::{Command, ErrorKind, ServerMessage};
use crate::session::{Rejection, ReplayRecord, RunState, Session};

const BROADCAST_CAPACITY: usize = 8192;
const BEST_SCORES_KEPT: usize = 10;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub max_sessions: usize,
    pub default_fps: f64,
    /// How long a session without subscribers survives.
    pub reap_after: Duration,
    pub reap_interval: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_sessions: 64,
            default_fps: 20.0,
            reap_after: Duration::from_secs(120),
            reap_interval: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub session: String,
    pub seed: u64,
    pub breakdown: ScoreBreakdown,
}

enum Request {
    Command(Command, oneshot::Sender<Result<(), Rejection>>),
    Replay(oneshot::Sender<Option<ReplayRecord>>),
}

struct SessionEntry {
    requests: mpsc::Sender<Request>,
    messages: broadcast::Sender<Arc<str>>,
    subscribers: AtomicUsize,
    idle_since: Mutex<Option<Instant>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServiceConfig,
    sessions: Mutex<HashMap<Uuid, Arc<SessionEntry>>>,
    best: Mutex<Vec<ScoreRecord>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                config,
                sessions: Mutex::new(HashMap::new()),
                best: Mutex::new(Vec::new()),
            }),
        }
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().unwrap().len()
    }

    fn get(&self, id: &str) -> Option<Arc<SessionEntry>> {
        let id = Uuid::parse_str(id).ok()?;
        self.inner.sessions.lock().unwrap().get(&id).cloned()
    }

    fn record_score(&self, record: ScoreRecord) {
        let mut best = self.inner.best.lock().unwrap();
        best.push(record);
        best.sort_by(|a, b| b.breakdown.s.total_cmp(&a.breakdown.s));
        best.truncate(BEST_SCORES_KEPT);
    }

    /// Removes sessions that have had no subscriber for `reap_after`.
    pub fn reap(&self) -> usize {
        let now = Instant::now();
        let grace = self.inner.config.reap_after;
        let mut sessions = self.inner.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|id, entry| {
            let idle = *entry.idle_since.lock().unwrap();
            let keep =
                entry.subscribers.load(Ordering::SeqCst) > 0 || idle.is_none_or(|t| now.duration_since(t) < grace);
            if !keep {
                info!(session = %id, "reaping idle session");
            }
            keep
        });
        before - sessions.len()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    #[serde(default)]
    config: SimConfig,
    fps: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: String,
    pub config: SimConfig,
    pub fps: f64,
}

fn error_response(status: StatusCode, kind: &str, message: String) -> Response {
    (status, Json(json!({ "error": { "kind": kind, "message": message } }))).into_response()
}

async fn create_session(State(app): State<AppState>, body: axum::body::Bytes) -> Response {
    let request: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => return error_response(StatusCode::BAD_REQUEST, "validation", e.to_string()),
        }
    };
    let fps = request.fps.unwrap_or(app.inner.config.default_fps);
    if !(fps.is_finite() && fps > 0.0) {
        return error_response(StatusCode::BAD_REQUEST, "validation", format!("fps {fps} must be > 0"));
    }
    let session = match Session::new(request.config.clone()) {
        Ok(s) => s,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, "validation", e.to_string()),
    };

    let id = Uuid::new_v4();
    let (req_tx, req_rx) = mpsc::channel(64);
    let (msg_tx, _) = broadcast::channel(BROADCAST_CAPACITY);
    let entry = Arc::new(SessionEntry {
        requests: req_tx,
        messages: msg_tx.clone(),
        subscribers: AtomicUsize::new(0),
        idle_since: Mutex::new(Some(Instant::now())),
    });
    {
        let mut sessions = app.inner.sessions.lock().unwrap();
        if sessions.len() >= app.inner.config.max_sessions {
            return error_response(
                StatusCode::TOO_MANY_REQUESTS,
                "session_limit",
                format!("at most {} concurrent sessions", app.inner.config.max_sessions),
            );
        }
        sessions.insert(id, entry);
    }
    tokio::spawn(session_actor(app.clone(), id, session, fps, req_rx, msg_tx));
    info!(session = %id, "session created");
    (
        StatusCode::CREATED,
        Json(CreateResponse {
            id: id.to_string(),
            config: request.config,
            fps,
        }),
    )
        .into_response()
}

/// Serializes commands and pacing ticks for one session.
async fn session_actor(
    app: AppState,
    id: Uuid,
    mut session: Session,
    fps: f64,
    mut requests: mpsc::Receiver<Request>,
    messages: broadcast::Sender<Arc<str>>,
) {
    let publish = |msgs: Vec<ServerMessage>| {
        for m in msgs {
            // No subscribers is fine: messages are not buffered for late joiners.
            let _ = messages.send(Arc::from(m.to_json()));
        }
    };
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(1.0 / fps));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut was_finished = false;

    loop {
        let running = session.state() == RunState::Running;
        tokio::select! {
            req = requests.recv() => match req {
                None => break,
                Some(Request::Command(cmd, reply)) => {
                    let result = session.handle(&cmd).map(publish);
                    if cmd == Command::Start && result.is_ok() {
                        ticker.reset();
                    }
                    let _ = reply.send(result);
                }
                Some(Request::Replay(reply)) => {
                    let _ = reply.send(session.replay_record().cloned());
                }
            },
            _ = ticker.tick(), if running => {
                match session.tick() {
                    Ok(msgs) => publish(msgs),
                    Err(e) => {
                        warn!(session = %id, error = %e, "step failed");
                        publish(vec![e.to_message()]);
                    }
                }
            }
        }
        let finished = session.state() == RunState::Finished;
        if finished && !was_finished {
            if let Some(breakdown) = session.final_score() {
                app.record_score(ScoreRecord {
                    session: id.to_string(),
                    seed: session.config().seed,
                    breakdown,
                });
            }
        }
        was_finished = finished;
    }
    debug!(session = %id, "session actor stopped");
}

async fn healthz(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "sessions": app.session_count() }))
}

async fn best_scores(State(app): State<AppState>) -> Json<Vec<ScoreRecord>> {
    Json(app.inner.best.lock().unwrap().clone())
}

async fn replay_record(State(app): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(entry) = app.get(&id) else {
        return error_response(StatusCode::NOT_FOUND, "not_found", format!("no session {id}"));
    };
    let (tx, rx) = oneshot::channel();
    if entry.requests.send(Request::Replay(tx)).await.is_err() {
        return error_response(StatusCode::GONE, "not_found", format!("session {id} stopped"));
    }
    match rx.await {
        Ok(Some(record)) => Json(record).into_response(),
        Ok(None) => error_response(StatusCode::CONFLICT, "illegal_state", "no world yet".into()),
        Err(_) => error_response(StatusCode::GONE, "not_found", format!("session {id} stopped")),
    }
}

async fn socket(
    State(app): State<AppState>,
    Path(id): Path<String>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Response {
    let Some(entry) = app.get(&id) else {
        return error_response(StatusCode::NOT_FOUND, "not_found", format!("no session {id}"));
    };
    let ws = match ws {
        Ok(ws) => ws,
        Err(rejection) => return rejection.into_response(),
    };
    // Subscribe before the upgrade completes so nothing sent after the
    // handshake is missed.
    let rx = entry.messages.subscribe();
    entry.subscribers.fetch_add(1, Ordering::SeqCst);
    *entry.idle_since.lock().unwrap() = None;
    ws.on_upgrade(move |socket| attach(socket, entry, rx))
}

async fn attach(socket: WebSocket, entry: Arc<SessionEntry>, mut rx: broadcast::Receiver<Arc<str>>) {
    let (mut sink, mut stream) = socket.split();
    let (direct_tx, mut direct_rx) = mpsc::channel::<String>(16);

    let writer = tokio::spawn(async move {
        loop {
            let text = tokio::select! {
                m = rx.recv() => match m {
                    Ok(m) => m.to_string(),
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        warn!(skipped = n, "subscriber lagged; closing");
                        break;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                m = direct_rx.recv() => match m {
                    Some(m) => m,
                    None => break,
                },
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = match serde_json::from_str::<Command>(&text) {
            Err(e) => Some(ServerMessage::Error {
                kind: ErrorKind::BadMessage,
                state: RunState::Configuring,
                message: e.to_string(),
            }),
            Ok(cmd) => {
                let (tx, rx) = oneshot::channel();
                if entry.requests.send(Request::Command(cmd, tx)).await.is_err() {
                    break;
                }
                match rx.await {
                    Ok(Ok(())) => None,
                    Ok(Err(rejection)) => Some(rejection.to_message()),
                    Err(_) => break,
                }
            }
        };
        if let Some(reply) = reply {
            if direct_tx.send(reply.to_json()).await.is_err() {
                break;
            }
        }
    }

    drop(direct_tx);
    writer.abort();
    if entry.subscribers.fetch_sub(1, Ordering::SeqCst) == 1 {
        *entry.idle_since.lock().unwrap() = Some(Instant::now());
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/ws", get(socket))
        .route("/sessions/{id}/replay", get(replay_record))
        .route("/scores", get(best_scores))
        .with_state(state)
}

/// Runs the service on an already bound listener until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(config.clone());
    let reaper = state.clone();
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(config.reap_interval);
        loop {
            interval.tick().await;
            reaper.reap();
        }
    });
    info!(addr = ?listener.local_addr()?, "serving");
    axum::serve(listener, router(state)).await
}
