//! HTTP and WebSocket front end for Snake Story sessions.
//!
//! `POST /sessions` creates a session, `GET /sessions/{id}/ws` attaches a
//! player, `GET /sessions/{id}/log` returns the JSONL event log so far, and
//! `GET /healthz` answers `ok`. Each started session runs its own loop on a
//! dedicated thread against the wall clock; sockets only forward intents to
//! it and relay its events.

pub mod protocol;

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc as std_mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::Serialize;
use tokio::sync::broadcast;

use snake_story_core::game::GameConfig;
use snake_story_core::llm::ProviderConfig;
use snake_story_core::session::{
    log_file_name, Controller, EventLog, Intent, LiveTextSource, Session, SessionSetup, SessionView, WallClock,
};
use snake_story_core::story::StoryConfig;

use protocol::{ClientMsg, ServerMsg};

/// Rounds after which a live session is stopped.
const LIVE_ROUND_CAP: u32 = 100_000;

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    pub game: GameConfig,
    pub story: StoryConfig,
    pub provider: ProviderConfig,
    /// Where `session-<id>.jsonl` files go; logs stay in memory only when unset.
    pub log_dir: Option<PathBuf>,
    /// Seed used when a client starts without one.
    pub default_seed: Option<u64>,
}

struct SessionHandle {
    id: String,
    started: AtomicBool,
    player_attached: AtomicBool,
    intents: Mutex<Option<std_mpsc::Sender<Intent>>>,
    lines: Mutex<Vec<String>>,
    latest: Mutex<Vec<ServerMsg>>,
    events: broadcast::Sender<ServerMsg>,
}

impl SessionHandle {
    fn new(id: String) -> Self {
        Self {
            id,
            started: AtomicBool::new(false),
            player_attached: AtomicBool::new(false),
            intents: Mutex::new(None),
            lines: Mutex::new(Vec::new()),
            latest: Mutex::new(Vec::new()),
            events: broadcast::channel(1024).0,
        }
    }

    fn publish(&self, msg: ServerMsg) {
        {
            let mut latest = self.latest.lock().expect("lock");
            let tag = std::mem::discriminant(&msg);
            latest.retain(|m| std::mem::discriminant(m) != tag);
            latest.push(msg.clone());
        }
        let _ = self.events.send(msg);
    }
}

pub struct AppState {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<SessionHandle>>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    fn session(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions.lock().expect("lock").get(id).cloned()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/ws", get(attach))
        .route("/sessions/{id}/log", get(session_log))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    config
        .game
        .validate()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    if let Some(dir) = &config.log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(config))).await
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    ws_url: String,
}

async fn create_session(State(app): State<Arc<AppState>>, headers: HeaderMap) -> impl IntoResponse {
    let id = uuid::Uuid::new_v4().simple().to_string();
    app.sessions
        .lock()
        .expect("lock")
        .insert(id.clone(), Arc::new(SessionHandle::new(id.clone())));
    let host = headers
        .get(header::HOST)
        .and_then(|h| h.to_str().ok())
        .unwrap_or("localhost");
    let ws_url = format!("ws://{host}/sessions/{id}/ws");
    tracing::info!(session = %id, "created");
    (StatusCode::CREATED, Json(Created { session_id: id, ws_url }))
}

async fn session_log(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(handle) = app.session(&id) else {
        return (StatusCode::NOT_FOUND, "unknown session\n").into_response();
    };
    let mut body = String::new();
    for line in handle.lines.lock().expect("lock").iter() {
        body.push_str(line);
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn attach(ws: WebSocketUpgrade, State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(handle) = app.session(&id) else {
        return (StatusCode::NOT_FOUND, "unknown session\n").into_response();
    };
    ws.on_upgrade(move |socket| client_loop(socket, app, handle))
}

async fn client_loop(socket: WebSocket, app: Arc<AppState>, handle: Arc<SessionHandle>) {
    // The first socket to attach plays; later ones only watch until the player leaves.
    let is_player = !handle.player_attached.swap(true, Ordering::SeqCst);
    let (mut tx, mut rx) = socket.split();
    let mut events = handle.events.subscribe();
    let snapshot = handle.latest.lock().expect("lock").clone();
    for msg in snapshot {
        if tx.send(Message::Text(msg.to_json().into())).await.is_err() {
            break;
        }
    }

    let forward = tokio::spawn(async move {
        loop {
            match events.recv().await {
                Ok(msg) => {
                    let ended = matches!(msg, ServerMsg::Ended { .. });
                    if tx.send(Message::Text(msg.to_json().into())).await.is_err() {
                        break;
                    }
                    if ended {
                        let _ = tx.send(Message::Close(None)).await;
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::warn!(skipped = n, "client lagging");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });

    while let Some(Ok(msg)) = rx.next().await {
        let Message::Text(text) = msg else {
            if matches!(msg, Message::Close(_)) {
                break;
            }
            continue;
        };
        if !is_player {
            continue;
        }
        match serde_json::from_str::<ClientMsg>(&text) {
            Ok(ClientMsg::Start { seed }) => start_session(&app, &handle, seed),
            Ok(ClientMsg::Heading { direction }) => send_intent(&handle, Intent::Heading(direction)),
            Ok(ClientMsg::YellowText { text }) => send_intent(&handle, Intent::YellowText(text)),
            Err(e) => {
                let _ = handle.events.send(ServerMsg::Error {
                    message: format!("bad message: {e}"),
                });
            }
        }
    }
    if is_player {
        handle.player_attached.store(false, Ordering::SeqCst);
    }
    forward.abort();
}

fn send_intent(handle: &SessionHandle, intent: Intent) {
    if let Some(tx) = handle.intents.lock().expect("lock").as_ref() {
        let _ = tx.send(intent);
    }
}

/// Intents from the socket, waited for against the wall clock.
struct ChannelController {
    rx: std_mpsc::Receiver<Intent>,
}

impl Controller for ChannelController {
    fn next_intent(&mut self, view: &SessionView<'_>, deadline_ms: u64) -> Option<Intent> {
        let wait = Duration::from_millis(deadline_ms.saturating_sub(view.now_ms));
        self.rx.recv_timeout(wait).ok()
    }
}

fn start_session(app: &AppState, handle: &Arc<SessionHandle>, seed: Option<u64>) {
    if handle.started.swap(true, Ordering::SeqCst) {
        let _ = handle.events.send(ServerMsg::Error {
            message: "session already started".into(),
        });
        return;
    }
    let seed = seed.or(app.config.default_seed).unwrap_or_else(|| {
        let id = uuid::Uuid::new_v4().as_u128();
        (id >> 64) as u64 ^ id as u64
    });
    let (tx, rx) = std_mpsc::channel();
    *handle.intents.lock().expect("lock") = Some(tx);

    let config = app.config.clone();
    let handle = handle.clone();
    std::thread::Builder::new()
        .name(format!("session-{}", handle.id))
        .spawn(move || {
            if let Err(e) = run_live(&config, &handle, seed, rx) {
                tracing::error!(session = %handle.id, error = %e, "session failed");
                handle.publish(ServerMsg::Error { message: e });
            }
        })
        .expect("spawn session thread");
}

fn run_live(
    config: &ServerConfig,
    handle: &Arc<SessionHandle>,
    seed: u64,
    rx: std_mpsc::Receiver<Intent>,
) -> Result<(), String> {
    let provider = config.provider.build(seed).map_err(|e| e.to_string())?;
    let source = LiveTextSource::new(provider, seed, &config.story);
    let setup = SessionSetup {
        id: handle.id.clone(),
        seed,
        config: config.game.clone(),
        story: config.story.clone(),
    };
    let log = match &config.log_dir {
        Some(dir) => {
            let file = File::create(dir.join(log_file_name(&handle.id))).map_err(|e| e.to_string())?;
            EventLog::with_sink(Box::new(BufWriter::new(file)))
        }
        None => EventLog::new(),
    };
    let observer_handle = handle.clone();
    let mut session = Session::new(setup, Box::new(WallClock::new()), Box::new(source))
        .map_err(|e| e.to_string())?
        .with_log(log)
        .with_observer(Box::new(move |observed| {
            observer_handle
                .lines
                .lock()
                .expect("lock")
                .push(observed.line.to_string());
            for msg in ServerMsg::for_event(observed) {
                observer_handle.publish(msg);
            }
        }));
    tracing::info!(session = %handle.id, seed, "started");
    let summary = session
        .run_to_end(&mut ChannelController { rx }, LIVE_ROUND_CAP)
        .map_err(|e| e.to_string())?;
    tracing::info!(session = %handle.id, rounds = summary.rounds_played, words = summary.word_count, "ended");
    Ok(())
}
