//! HTTP and websocket front end. One tokio task per session owns the
//! [`SessionCore`]; connections talk to it through a command queue and
//! receive its output through a broadcast channel.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use crosswalk_core::engine::trace::StateMessage;
use crosswalk_core::pedestrian::PedestrianSource;
use crosswalk_core::{scenarios, ScenarioConfig};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::{interval, Interval, MissedTickBehavior};

use crate::error::{Error, Result};
use crate::protocol::{ClientMessage, ControlAction, Hello, ServerMessage, Status};
use crate::session::{InputRecord, SessionCore};

/// Websocket close code sent to clients that fall behind the broadcast.
const CLOSE_POLICY: u16 = 1008;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// How long a running session keeps going with no client connected.
    pub grace: Duration,
    /// Scenarios offered by `GET /scenarios` and selectable by name.
    pub scenarios: Vec<ScenarioConfig>,
    /// Capacity of each session's command queue.
    pub queue: usize,
    /// Messages buffered per client before it is considered too slow.
    pub fan_out: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            grace: Duration::from_secs(30),
            scenarios: scenarios::builtin(),
            queue: 256,
            fan_out: 256,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    cfg: ServiceConfig,
    sessions: Mutex<HashMap<u64, SessionHandle>>,
    next_id: AtomicU64,
}

#[derive(Clone)]
struct SessionHandle {
    cmd: mpsc::Sender<Command>,
    events: broadcast::Sender<String>,
}

enum Command {
    Client(ClientMessage),
    Joined(oneshot::Sender<(Hello, Option<StateMessage>)>),
    Left,
    Status(oneshot::Sender<Status>),
    Trace(oneshot::Sender<Result<String>>),
    Inputs(oneshot::Sender<Vec<InputRecord>>),
}

impl AppState {
    pub fn new(cfg: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                cfg,
                sessions: Mutex::new(HashMap::new()),
                next_id: AtomicU64::new(1),
            }),
        }
    }

    fn session(&self, id: u64) -> Result<SessionHandle> {
        let sessions = self.inner.sessions.lock().expect("session table lock");
        sessions.get(&id).cloned().ok_or(Error::UnknownSession(id))
    }

    fn scenario(&self, name: &str) -> Result<ScenarioConfig> {
        self.inner
            .cfg
            .scenarios
            .iter()
            .find(|c| c.name == name)
            .cloned()
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))
    }

    fn spawn_session(&self, core: SessionCore) {
        let (cmd, rx) = mpsc::channel(self.inner.cfg.queue);
        let (events, _) = broadcast::channel(self.inner.cfg.fan_out);
        let id = core.id();
        tokio::spawn(run_session(core, rx, events.clone(), self.inner.cfg.grace));
        self.inner
            .sessions
            .lock()
            .expect("session table lock")
            .insert(id, SessionHandle { cmd, events });
    }
}

impl IntoResponse for Error {
    fn into_response(self) -> Response {
        let code = match &self {
            Error::UnknownScenario(_) | Error::UnknownSession(_) => StatusCode::NOT_FOUND,
            Error::BadRequest(_) | Error::Core(_) => StatusCode::BAD_REQUEST,
            Error::SessionClosed | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (code, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenarios", get(list_scenarios))
        .route("/sessions", axum::routing::post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/trace", get(session_trace))
        .route("/sessions/{id}/inputs", get(session_inputs))
        .route("/sessions/{id}/ws", get(session_ws))
        .with_state(state)
}

/// Serves the API on an already bound listener until the process ends.
pub async fn serve(listener: TcpListener, cfg: ServiceConfig) -> Result<()> {
    axum::serve(listener, router(AppState::new(cfg))).await?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub model: PedestrianSource,
    pub dt: f64,
    pub t_max: f64,
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Vec<ScenarioInfo>> {
    let list = state
        .inner
        .cfg
        .scenarios
        .iter()
        .map(|c| ScenarioInfo {
            name: c.name.clone(),
            model: c.pedestrian.model,
            dt: c.dt,
            t_max: c.t_max,
        })
        .collect();
    Json(list)
}

/// Body of `POST /sessions`. Either a named scenario or a full TOML
/// configuration; `set` holds `key=value` overrides applied on top.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub config: Option<String>,
    /// Pedestrian model; live play by default, anything else makes a spectator session.
    #[serde(default)]
    pub model: Option<PedestrianSource>,
    #[serde(default)]
    pub set: Vec<String>,
    #[serde(default)]
    pub pace: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: u64,
    pub hello: Hello,
    /// State the first tick reports, available before the session starts.
    pub state: StateMessage,
    /// Effective configuration, suitable for offline replay.
    pub config: String,
}

fn resolve_config(state: &AppState, req: &CreateSession) -> Result<ScenarioConfig> {
    let text = match (&req.scenario, &req.config) {
        (Some(name), None) => state.scenario(name)?.to_toml_string(),
        (None, Some(text)) => text.clone(),
        _ => {
            return Err(Error::BadRequest(
                "give exactly one of `scenario` or `config`".into(),
            ))
        }
    };
    let mut cfg = ScenarioConfig::from_toml_with_overrides(&text, &req.set)?;
    cfg.pedestrian.model = req.model.unwrap_or(PedestrianSource::External);
    cfg.validate()?;
    Ok(cfg)
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>)> {
    let cfg = resolve_config(&state, &req)?;
    let id = state.inner.next_id.fetch_add(1, Ordering::Relaxed);
    let pace = req.pace.unwrap_or(1.0);
    // Building the simulation may solve an MDP; keep it off the reactor.
    let core = tokio::task::spawn_blocking(move || SessionCore::new(id, cfg, pace))
        .await
        .map_err(|_| Error::SessionClosed)??;
    let created = SessionCreated {
        id,
        hello: core.hello(),
        state: core.snapshot()?,
        config: core.config().to_toml_string(),
    };
    state.spawn_session(core);
    Ok((StatusCode::CREATED, Json(created)))
}

async fn ask<T>(handle: &SessionHandle, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T> {
    let (tx, rx) = oneshot::channel();
    handle.cmd.send(make(tx)).await.map_err(|_| Error::SessionClosed)?;
    rx.await.map_err(|_| Error::SessionClosed)
}

async fn session_status(State(state): State<AppState>, Path(id): Path<u64>) -> Result<Json<Status>> {
    Ok(Json(ask(&state.session(id)?, Command::Status).await?))
}

async fn session_trace(State(state): State<AppState>, Path(id): Path<u64>) -> Result<Response> {
    let csv = ask(&state.session(id)?, Command::Trace).await??;
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}

async fn session_inputs(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<Vec<InputRecord>>> {
    Ok(Json(ask(&state.session(id)?, Command::Inputs).await?))
}

async fn session_ws(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    ws: WebSocketUpgrade,
) -> Result<Response> {
    let handle = state.session(id)?;
    Ok(ws.on_upgrade(move |socket| client_loop(socket, handle)))
}

fn text(msg: &ServerMessage) -> Message {
    Message::Text(msg.to_json().into())
}

async fn client_loop(mut socket: WebSocket, handle: SessionHandle) {
    // Subscribe before joining so no broadcast after the greeting is missed.
    let mut events = handle.events.subscribe();
    let Ok((hello, snapshot)) = ask(&handle, Command::Joined).await else {
        return;
    };
    let mut ok = socket.send(text(&ServerMessage::Hello(hello))).await.is_ok();
    if let (true, Some(state)) = (ok, snapshot) {
        ok = socket.send(text(&ServerMessage::State(state))).await.is_ok();
    }
    while ok {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(body))) => match serde_json::from_str::<ClientMessage>(&body) {
                    Ok(msg) => ok = handle.cmd.send(Command::Client(msg)).await.is_ok(),
                    Err(e) => {
                        let reply = ServerMessage::error(format!("unreadable message: {e}"));
                        ok = socket.send(text(&reply)).await.is_ok();
                    }
                },
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => ok = false,
                Some(Ok(_)) => {}
            },
            event = events.recv() => match event {
                Ok(json) => ok = socket.send(Message::Text(json.into())).await.is_ok(),
                Err(RecvError::Lagged(_)) => {
                    let frame = CloseFrame { code: CLOSE_POLICY, reason: "client too slow".into() };
                    let _ = socket.send(Message::Close(Some(frame))).await;
                    ok = false;
                }
                Err(RecvError::Closed) => ok = false,
            },
        }
    }
    let _ = handle.cmd.send(Command::Left).await;
}

fn ticker(core: &SessionCore) -> Interval {
    let mut t = interval(core.period());
    // Catch up after scheduling hiccups so simulated time tracks wall time.
    t.set_missed_tick_behavior(MissedTickBehavior::Burst);
    t
}

fn publish(events: &broadcast::Sender<String>, msg: &ServerMessage) {
    // No receivers is fine: nobody is watching right now.
    let _ = events.send(msg.to_json());
}

async fn run_session(
    mut core: SessionCore,
    mut rx: mpsc::Receiver<Command>,
    events: broadcast::Sender<String>,
    grace: Duration,
) {
    let mut clients = 0usize;
    let mut idle_since: Option<Instant> = None;
    let mut clock = ticker(&core);
    loop {
        tokio::select! {
            cmd = rx.recv() => {
                let Some(cmd) = cmd else { break };
                match cmd {
                    Command::Client(msg) => {
                        if handle_client(&mut core, msg, &events) {
                            clock = ticker(&core);
                        }
                    }
                    Command::Joined(reply) => {
                        clients += 1;
                        idle_since = None;
                        let _ = reply.send((core.hello(), core.snapshot().ok()));
                    }
                    Command::Left => {
                        clients = clients.saturating_sub(1);
                        if clients == 0 {
                            idle_since = Some(Instant::now());
                        }
                    }
                    Command::Status(reply) => {
                        let _ = reply.send(core.status());
                    }
                    Command::Trace(reply) => {
                        let _ = reply.send(core.trace_csv());
                    }
                    Command::Inputs(reply) => {
                        let _ = reply.send(core.inputs().to_vec());
                    }
                }
            }
            _ = clock.tick(), if core.is_running() => {
                if idle_since.is_some_and(|since| since.elapsed() >= grace) {
                    core.pause();
                    publish(&events, &ServerMessage::Status(core.status()));
                    continue;
                }
                match core.tick() {
                    Ok(Some((record, broadcast))) => {
                        if broadcast {
                            publish(&events, &ServerMessage::State(StateMessage::from(&record)));
                        }
                        if core.is_finished() {
                            publish(&events, &ServerMessage::Status(core.status()));
                        }
                    }
                    Ok(None) => {}
                    Err(e) => {
                        core.pause();
                        publish(&events, &ServerMessage::error(e.to_string()));
                    }
                }
            }
        }
    }
}

/// Applies one client message. Returns true when the tick clock must be rebuilt.
fn handle_client(core: &mut SessionCore, msg: ClientMessage, events: &broadcast::Sender<String>) -> bool {
    match msg {
        ClientMessage::Input { v_ped, i_ped, t } => {
            publish(events, &ServerMessage::Ack(core.handle_input(v_ped, i_ped, t)));
            false
        }
        ClientMessage::Control { action, value } => {
            let result = match action {
                ControlAction::Start => {
                    core.start();
                    Ok(true)
                }
                ControlAction::Pause => {
                    core.pause();
                    Ok(false)
                }
                ControlAction::Reset => core.reset().map(|_| false),
                ControlAction::SetPace => value
                    .ok_or_else(|| Error::BadRequest("set_pace needs a value".into()))
                    .and_then(|v| core.set_pace(v))
                    .map(|_| true),
            };
            match result {
                Ok(rebuild) => {
                    publish(events, &ServerMessage::Status(core.status()));
                    if action == ControlAction::Reset {
                        if let Ok(state) = core.snapshot() {
                            publish(events, &ServerMessage::State(state));
                        }
                    }
                    rebuild
                }
                Err(e) => {
                    publish(events, &ServerMessage::error(e.to_string()));
                    false
                }
            }
        }
    }
}
