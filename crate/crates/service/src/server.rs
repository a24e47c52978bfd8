//! HTTP and WebSocket front end.
//!
//! Each session sits behind its own mutex, so commands for one session are
//! processed one at a time while different sessions proceed in parallel.
//! Commands run on the blocking pool because scripted seats may wait on
//! external policies. Pushes go through one broadcast channel per seat.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::sync::broadcast;
use yle_core::agents::external::Handshake;
use yle_core::agents::PolicySpec;
use yle_core::harness::diagnostic::{evaluate_diagnostic, fixture_family};
use yle_core::harness::export::{probe_rows, ExportOptions};
use yle_core::harness::{cross_play, metrics_table, run_matchup, MatchupConfig};
use yle_core::vec_env::{bench_table, throughput_bench, VecEnvOptions};
use yle_core::{ActionLayout, Encoding, GameConfig, GameState, HintTargetIndexing, MemoryMode, SeatView, Variant};

use crate::protocol::*;
use crate::session::{Outbox, Session};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Binding per seat for sessions created without explicit seats.
    /// Seats beyond the list are played by the greedy agent.
    pub default_seats: Vec<SeatBinding>,
    /// Directory receiving `sessions.jsonl`, one record per finished game.
    pub journal_dir: Option<PathBuf>,
    /// Accept `external:cmd:` and `external:tcp:` policies in requests.
    /// These start processes or open connections on the server host.
    pub allow_external_policies: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            default_seats: vec![SeatBinding::Human, SeatBinding::Policy(PolicySpec::Greedy)],
            journal_dir: None,
            allow_external_policies: false,
        }
    }
}

struct SessionHandle {
    session: Mutex<Session>,
    channels: Vec<broadcast::Sender<Push>>,
}

struct AppState {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    journal_lock: Mutex<()>,
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<Json<T>, Rejection>;

impl IntoResponse for Rejection {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

/// JSON body whose decoding failures become [`Rejection`]s.
struct Body<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = Rejection;

    async fn from_request(req: Request, state: &S) -> Result<Self, Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e @ JsonRejection::JsonDataError(_)) | Err(e @ JsonRejection::JsonSyntaxError(_)) => {
                Err(Rejection::new(RejectCode::BadRequest, e.body_text()))
            }
            Err(e) => Err(Rejection::new(RejectCode::BadRequest, e.body_text())),
        }
    }
}

fn random_hex() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}

fn engine(e: yle_core::Error) -> Rejection {
    Rejection::engine(&e)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Rejection> + Send + 'static) -> Result<T, Rejection> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| Rejection::new(RejectCode::Internal, format!("worker failed: {e}")))?
}

pub fn router(config: ServiceConfig) -> Router {
    let state = Arc::new(AppState { config, sessions: RwLock::new(HashMap::new()), journal_lock: Mutex::new(()) });
    Router::new()
        .route("/healthz", get(health))
        .route("/v1/layout", get(layout))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(session_info))
        .route("/v1/sessions/{id}/join", post(join))
        .route("/v1/sessions/{id}/view", get(view))
        .route("/v1/sessions/{id}/targets", get(targets))
        .route("/v1/sessions/{id}/actions", post(submit))
        .route("/v1/sessions/{id}/journal", get(journal))
        .route("/v1/sessions/{id}/record", get(record))
        .route("/v1/sessions/{id}/ws", get(websocket))
        .route("/v1/eval", post(eval))
        .route("/v1/crossplay", post(crossplay))
        .route("/v1/diagnose", post(diagnose))
        .route("/v1/bench", post(bench))
        .route("/v1/export", post(export))
        .with_state(state)
}

/// Serve on `listener` until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config)).await
}

/// Start a server on an ephemeral loopback port in the background.
pub async fn spawn_local(config: ServiceConfig) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<std::io::Result<()>>)> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    Ok((addr, tokio::spawn(serve(listener, config))))
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), version: SERVICE_VERSION.into() })
}

#[derive(Deserialize)]
struct LayoutQuery {
    variant: Option<Variant>,
    players: Option<usize>,
    indexing: Option<HintTargetIndexing>,
}

async fn layout(Query(q): Query<LayoutQuery>) -> ApiResult<LayoutInfo> {
    let config = GameConfig::new(q.variant.unwrap_or(Variant::ThreeByThree), q.players.unwrap_or(2))
        .map_err(engine)?
        .with_hint_indexing(q.indexing.unwrap_or_default());
    let view = SeatView::new(&GameState::new(config, 0).map_err(engine)?, 0, MemoryMode::Standard);
    let layout = ActionLayout::new(&config);
    Ok(Json(LayoutInfo {
        config,
        layout,
        action_count: layout.count,
        max_episode_length: config.max_episode_length(),
        graph_shape: view.encode(Encoding::Graph).shape(),
        image_shape: view.encode(Encoding::Image).shape(),
    }))
}

impl AppState {
    fn handle(&self, id: &str) -> Result<Arc<SessionHandle>, Rejection> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| Rejection::new(RejectCode::NotFound, format!("no session {id:?}")))
    }

    fn check_policies<'a>(&self, specs: impl IntoIterator<Item = &'a PolicySpec>) -> Result<(), Rejection> {
        if self.config.allow_external_policies {
            return Ok(());
        }
        match specs.into_iter().find(|s| Session::is_external(s)) {
            Some(spec) => Err(Rejection::new(
                RejectCode::PolicyForbidden,
                format!("{spec} is not allowed on this server (external policies are disabled)"),
            )),
            None => Ok(()),
        }
    }

    /// Append a finished record to the journal file, if one is configured.
    fn persist(&self, session: &mut Session) {
        let (Some(dir), Some(record)) = (&self.config.journal_dir, session.take_finished_record()) else { return };
        let _guard = self.journal_lock.lock().expect("journal lock poisoned");
        let path = dir.join("sessions.jsonl");
        let written = std::fs::create_dir_all(dir)
            .and_then(|_| OpenOptions::new().create(true).append(true).open(&path))
            .and_then(|mut f| writeln!(f, "{}", record.to_json_line()));
        if let Err(e) = written {
            tracing::error!("could not append session {} to {}: {e}", session.id(), path.display());
        }
    }
}

fn deliver(handle: &SessionHandle, outbox: Outbox) {
    for (seat, push) in outbox {
        if let Some(tx) = handle.channels.get(seat) {
            // No receiver simply means nobody is listening on that seat.
            let _ = tx.send(push);
        }
    }
}

fn bearer(headers: &HeaderMap) -> Result<String, Rejection> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
        .ok_or_else(|| Rejection::new(RejectCode::Unauthorized, "missing bearer seat token"))
}

async fn create_session(State(app): State<Shared>, Body(req): Body<CreateSession>) -> ApiResult<SessionInfo> {
    let config = GameConfig::new(req.variant.unwrap_or(Variant::ThreeByThree), req.players.unwrap_or(2))
        .map_err(engine)?
        .with_hint_indexing(req.hint_target_indexing.unwrap_or_default());
    let seats: Vec<SeatBinding> = match req.seats {
        Some(seats) => seats,
        None => (0..config.num_players)
            .map(|i| app.config.default_seats.get(i).cloned().unwrap_or(SeatBinding::Policy(PolicySpec::Greedy)))
            .collect(),
    };
    app.check_policies(seats.iter().filter_map(|b| match b {
        SeatBinding::Policy(p) => Some(p),
        SeatBinding::Human => None,
    }))?;
    let seed = req.seed.unwrap_or_else(|| rand::rng().random());
    let id = random_hex();
    let casual = req.casual_memory;
    let app2 = app.clone();
    blocking(move || {
        let (mut session, outbox) = Session::new(id.clone(), config, seed, casual, seats)?;
        app2.persist(&mut session);
        let info = session.info();
        let channels = (0..session.num_seats()).map(|_| broadcast::channel(256).0).collect();
        let handle = Arc::new(SessionHandle { session: Mutex::new(session), channels });
        deliver(&handle, outbox);
        app2.sessions.write().expect("session table poisoned").insert(id, handle);
        Ok(Json(info))
    })
    .await
}

async fn session_info(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult<SessionInfo> {
    let handle = app.handle(&id)?;
    let info = handle.session.lock().expect("session poisoned").info();
    Ok(Json(info))
}

async fn join(State(app): State<Shared>, Path(id): Path<String>, Body(req): Body<JoinRequest>) -> ApiResult<JoinResponse> {
    let handle = app.handle(&id)?;
    let token = random_hex();
    let view = handle.session.lock().expect("session poisoned").join(req.seat, token.clone())?;
    Ok(Json(JoinResponse { session: id, seat: req.seat, token, view }))
}

async fn view(State(app): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<SessionView> {
    let handle = app.handle(&id)?;
    let token = bearer(&headers)?;
    let session = handle.session.lock().expect("session poisoned");
    let seat = session.authenticate(&token)?;
    Ok(Json(session.view(seat)))
}

#[derive(Deserialize)]
struct TargetsQuery {
    card: usize,
}

async fn targets(
    State(app): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<TargetsQuery>,
    headers: HeaderMap,
) -> ApiResult<TargetsResponse> {
    let handle = app.handle(&id)?;
    let token = bearer(&headers)?;
    let session = handle.session.lock().expect("session poisoned");
    let seat = session.authenticate(&token)?;
    Ok(Json(session.targets(seat, q.card)?))
}

async fn submit(
    State(app): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Body(req): Body<SubmitRequest>,
) -> ApiResult<SubmitResponse> {
    let handle = app.handle(&id)?;
    let token = bearer(&headers)?;
    blocking(move || {
        let mut session = handle.session.lock().expect("session poisoned");
        let seat = session.authenticate(&token)?;
        let (reply, outbox) = session.submit(seat, req)?;
        app.persist(&mut session);
        drop(session);
        deliver(&handle, outbox);
        Ok(Json(reply))
    })
    .await
}

async fn journal(State(app): State<Shared>, Path(id): Path<String>) -> ApiResult<Journal> {
    let handle = app.handle(&id)?;
    let journal = handle.session.lock().expect("session poisoned").journal();
    Ok(Json(journal))
}

async fn record(State(app): State<Shared>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, Rejection> {
    let handle = app.handle(&id)?;
    let session = handle.session.lock().expect("session poisoned");
    let value = serde_json::to_value(session.record()?)
        .map_err(|e| Rejection::new(RejectCode::Internal, e.to_string()))?;
    Ok(Json(value))
}

#[derive(Deserialize)]
struct WsQuery {
    token: String,
}

async fn websocket(
    State(app): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<WsQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, Rejection> {
    let handle = app.handle(&id)?;
    let seat = handle.session.lock().expect("session poisoned").authenticate(&q.token)?;
    Ok(ws.on_upgrade(move |socket| push_loop(socket, handle, id, seat)))
}

fn encode(push: &Push) -> Message {
    Message::Text(serde_json::to_string(push).expect("push messages serialize").into())
}

fn current_view(handle: &SessionHandle, seat: usize) -> Push {
    Push::View { view: Box::new(handle.session.lock().expect("session poisoned").view(seat)) }
}

async fn push_loop(socket: WebSocket, handle: Arc<SessionHandle>, id: String, seat: usize) {
    let mut rx = handle.channels[seat].subscribe();
    let (mut sink, mut stream) = socket.split();
    let hello = Push::Hello { version: SERVICE_VERSION.into(), session: id, seat };
    if sink.send(encode(&hello)).await.is_err() || sink.send(encode(&current_view(&handle, seat))).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            pushed = rx.recv() => {
                let push = match pushed {
                    Ok(push) => push,
                    Err(broadcast::error::RecvError::Lagged(_)) => current_view(&handle, seat),
                    Err(broadcast::error::RecvError::Closed) => break,
                };
                if sink.send(encode(&push)).await.is_err() {
                    break;
                }
            }
            incoming = stream.next() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => match serde_json::from_str::<ClientMessage>(&text) {
                        Ok(ClientMessage::Resync) => current_view(&handle, seat),
                        Ok(ClientMessage::Ping) => Push::Pong,
                        Err(e) => {
                            let r = Rejection::new(RejectCode::BadRequest, e.to_string());
                            let text = serde_json::to_string(&r).expect("rejections serialize");
                            if sink.send(Message::Text(text.into())).await.is_err() {
                                break;
                            }
                            continue;
                        }
                    },
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if sink.send(encode(&reply)).await.is_err() {
                    break;
                }
            }
        }
    }
}

async fn eval(State(app): State<Shared>, Body(req): Body<EvalRequest>) -> ApiResult<EvalResponse> {
    app.check_policies(&req.seats)?;
    blocking(move || {
        let config = req.game.config().map_err(engine)?;
        let handshake = Handshake { memory_mode: req.memory, ..Handshake::new(config) };
        let mut seats = req.seats.iter().enumerate().map(|(s, p)| p.build(s, &handshake)).collect::<Result<Vec<_>, _>>().map_err(engine)?;
        let mut setup = MatchupConfig::new(config, req.games, req.seed);
        setup.symmetry = req.symmetry;
        setup.record = req.record;
        let result = run_matchup(&mut seats, &setup).map_err(engine)?;
        let name = result.policies.join(" + ");
        let table = metrics_table(&[(name, result.metrics)]);
        Ok(Json(EvalResponse { result, table }))
    })
    .await
}

async fn crossplay(State(app): State<Shared>, Body(req): Body<CrossPlayRequest>) -> ApiResult<CrossPlayResponse> {
    app.check_policies(&req.pool)?;
    blocking(move || {
        let config = req.game.config().map_err(engine)?;
        let mut setup = MatchupConfig::new(config, req.games, req.seed);
        setup.symmetry = req.symmetry;
        let matrix = cross_play(&req.pool, &setup, &Handshake::new(config)).map_err(engine)?;
        let table = matrix.table();
        Ok(Json(CrossPlayResponse { matrix, table }))
    })
    .await
}

async fn diagnose(State(app): State<Shared>, Body(req): Body<DiagnoseRequest>) -> ApiResult<DiagnoseResponse> {
    app.check_policies([&req.policy])?;
    blocking(move || {
        let scenarios = match req.scenarios {
            Some(s) if s.is_empty() => return Err(Rejection::new(RejectCode::BadRequest, "no scenarios given")),
            Some(s) => s,
            None => fixture_family().map_err(engine)?,
        };
        let config = scenarios[0].config;
        let mut policy = req.policy.build(scenarios[0].seat, &Handshake::new(config)).map_err(engine)?;
        let report = evaluate_diagnostic(policy.as_mut(), &scenarios, req.seed).map_err(engine)?;
        let table = report.table();
        Ok(Json(DiagnoseResponse { report, table }))
    })
    .await
}

async fn bench(Body(req): Body<BenchRequest>) -> ApiResult<BenchResponse> {
    if req.envs.is_empty() {
        return Err(Rejection::new(RejectCode::BadRequest, "no environment counts given"));
    }
    blocking(move || {
        let config = req.game.config().map_err(engine)?;
        let options = VecEnvOptions { observations: req.observations, ..VecEnvOptions::default() };
        let reports = req
            .envs
            .iter()
            .map(|&n| throughput_bench(config, n, req.steps, req.seed, options))
            .collect::<Result<Vec<_>, _>>()
            .map_err(engine)?;
        let table = bench_table(&reports);
        Ok(Json(BenchResponse { reports, table }))
    })
    .await
}

async fn export(State(app): State<Shared>, Body(req): Body<ExportRequest>) -> Result<Response, Rejection> {
    app.check_policies(&req.seats)?;
    let body = blocking(move || {
        let config = req.game.config().map_err(engine)?;
        let handshake = Handshake::new(config);
        let mut seats = req.seats.iter().enumerate().map(|(s, p)| p.build(s, &handshake)).collect::<Result<Vec<_>, _>>().map_err(engine)?;
        let mut setup = MatchupConfig::new(config, req.games, req.seed);
        setup.symmetry = req.symmetry;
        setup.record = true;
        let result = run_matchup(&mut seats, &setup).map_err(engine)?;
        let options = ExportOptions { embed: req.embed };
        let mut out = String::new();
        for record in &result.records {
            for row in probe_rows(record, options).map_err(engine)? {
                out.push_str(&serde_json::to_string(&row).map_err(|e| Rejection::new(RejectCode::Internal, e.to_string()))?);
                out.push('\n');
            }
        }
        Ok(out)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
