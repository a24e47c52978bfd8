//! Async client for the `yle-svc/1` service.
//!
//! [`Client`] wraps the HTTP endpoints one method each and [`PushStream`]
//! follows a seat's WebSocket. Server rejections come back as
//! [`ClientError::Rejected`] carrying the reason code.

use futures::{SinkExt, StreamExt};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio_tungstenite::tungstenite::Message;
use yle_core::harness::EpisodeRecord;
use yle_core::{HintTargetIndexing, Variant};
use yle_service::protocol::*;

pub use yle_service::protocol;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("rejected: {0}")]
    Rejected(Rejection),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response (HTTP {status}): {body}")]
    Unexpected { status: u16, body: String },
    #[error("undecodable message: {0}")]
    Decode(String),
}

impl ClientError {
    /// The server's reason code, if this is a rejection.
    pub fn code(&self) -> Option<RejectCode> {
        match self {
            Self::Rejected(r) => Some(r.code),
            _ => None,
        }
    }
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, for example `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Self { base, http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn read<T: DeserializeOwned>(response: reqwest::Response) -> Result<T> {
        let status = response.status();
        let body = response.text().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        if status.is_success() {
            return serde_json::from_str(&body).map_err(|e| ClientError::Decode(format!("{e}: {body}")));
        }
        match serde_json::from_str::<Rejection>(&body) {
            Ok(r) => Err(ClientError::Rejected(r)),
            Err(_) => Err(ClientError::Unexpected { status: status.as_u16(), body }),
        }
    }

    async fn send<T: DeserializeOwned>(&self, request: reqwest::RequestBuilder) -> Result<T> {
        let response = request.send().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::read(response).await
    }

    async fn get<T: DeserializeOwned>(&self, path: &str, token: Option<&str>) -> Result<T> {
        let mut request = self.http.get(self.url(path));
        if let Some(t) = token {
            request = request.bearer_auth(t);
        }
        self.send(request).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B, token: Option<&str>) -> Result<T> {
        let mut request = self.http.post(self.url(path)).json(body);
        if let Some(t) = token {
            request = request.bearer_auth(t);
        }
        self.send(request).await
    }

    pub async fn health(&self) -> Result<Health> {
        self.get("/healthz", None).await
    }

    pub async fn layout(&self, variant: Variant, players: usize, indexing: HintTargetIndexing) -> Result<LayoutInfo> {
        let indexing = match indexing {
            HintTargetIndexing::Cell => "cell",
            HintTargetIndexing::Card => "card",
        };
        self.get(&format!("/v1/layout?variant={variant}&players={players}&indexing={indexing}"), None).await
    }

    pub async fn create_session(&self, request: &CreateSession) -> Result<SessionInfo> {
        self.post("/v1/sessions", request, None).await
    }

    pub async fn session(&self, session: &str) -> Result<SessionInfo> {
        self.get(&format!("/v1/sessions/{session}"), None).await
    }

    pub async fn join(&self, session: &str, seat: usize) -> Result<JoinResponse> {
        self.post(&format!("/v1/sessions/{session}/join"), &JoinRequest { seat }, None).await
    }

    pub async fn view(&self, session: &str, token: &str) -> Result<SessionView> {
        self.get(&format!("/v1/sessions/{session}/view"), Some(token)).await
    }

    pub async fn targets(&self, session: &str, token: &str, card: usize) -> Result<TargetsResponse> {
        self.get(&format!("/v1/sessions/{session}/targets?card={card}"), Some(token)).await
    }

    pub async fn submit(&self, session: &str, token: &str, request: &SubmitRequest) -> Result<SubmitResponse> {
        self.post(&format!("/v1/sessions/{session}/actions"), request, Some(token)).await
    }

    pub async fn journal(&self, session: &str) -> Result<Journal> {
        self.get(&format!("/v1/sessions/{session}/journal"), None).await
    }

    pub async fn record(&self, session: &str) -> Result<EpisodeRecord> {
        self.get(&format!("/v1/sessions/{session}/record"), None).await
    }

    pub async fn eval(&self, request: &EvalRequest) -> Result<EvalResponse> {
        self.post("/v1/eval", request, None).await
    }

    pub async fn crossplay(&self, request: &CrossPlayRequest) -> Result<CrossPlayResponse> {
        self.post("/v1/crossplay", request, None).await
    }

    pub async fn diagnose(&self, request: &DiagnoseRequest) -> Result<DiagnoseResponse> {
        self.post("/v1/diagnose", request, None).await
    }

    pub async fn bench(&self, request: &BenchRequest) -> Result<BenchResponse> {
        self.post("/v1/bench", request, None).await
    }

    /// Probing rows as JSON lines.
    pub async fn export(&self, request: &ExportRequest) -> Result<String> {
        let response =
            self.http.post(self.url("/v1/export")).json(request).send().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = response.status();
        let body = response.text().await.map_err(|e| ClientError::Transport(e.to_string()))?;
        if status.is_success() {
            return Ok(body);
        }
        match serde_json::from_str::<Rejection>(&body) {
            Ok(r) => Err(ClientError::Rejected(r)),
            Err(_) => Err(ClientError::Unexpected { status: status.as_u16(), body }),
        }
    }

    /// Open the push channel of the seat holding `token`.
    pub async fn subscribe(&self, session: &str, token: &str) -> Result<PushStream> {
        let ws_base = if let Some(rest) = self.base.strip_prefix("https://") {
            format!("wss://{rest}")
        } else {
            format!("ws://{}", self.base.trim_start_matches("http://"))
        };
        let url = format!("{ws_base}/v1/sessions/{session}/ws?token={token}");
        let (socket, _) =
            tokio_tungstenite::connect_async(url.as_str()).await.map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(PushStream { socket })
    }
}

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

/// A seat's stream of [`Push`] messages.
pub struct PushStream {
    socket: Socket,
}

impl PushStream {
    /// The next push, or `None` once the server closed the stream.
    pub async fn next(&mut self) -> Option<Result<Push>> {
        loop {
            match self.socket.next().await? {
                Ok(Message::Text(text)) => {
                    return Some(serde_json::from_str(&text).map_err(|e| ClientError::Decode(format!("{e}: {text}"))));
                }
                Ok(Message::Close(_)) => return None,
                Ok(_) => continue,
                Err(e) => return Some(Err(ClientError::Transport(e.to_string()))),
            }
        }
    }

    async fn send(&mut self, message: ClientMessage) -> Result<()> {
        let text = serde_json::to_string(&message).map_err(|e| ClientError::Decode(e.to_string()))?;
        self.socket.send(Message::Text(text.into())).await.map_err(|e| ClientError::Transport(e.to_string()))
    }

    /// Ask for a fresh view, answered with a [`Push::View`].
    pub async fn resync(&mut self) -> Result<()> {
        self.send(ClientMessage::Resync).await
    }

    pub async fn ping(&mut self) -> Result<()> {
        self.send(ClientMessage::Ping).await
    }

    pub async fn close(mut self) -> Result<()> {
        self.socket.close(None).await.map_err(|e| ClientError::Transport(e.to_string()))
    }
}
