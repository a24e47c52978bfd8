//! Message catalogue of the session service, version `yle-svc/1`.
//!
//! Requests and responses travel as JSON over HTTP. State changes are pushed
//! over a per-seat WebSocket as [`Push`] messages. Messages carry a `type`
//! tag in snake case, like the external-policy wire.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/healthz` | | [`Health`] |
//! | GET | `/v1/layout?variant=3x3&players=2&indexing=cell` | | [`LayoutInfo`] |
//! | POST | `/v1/sessions` | [`CreateSession`] | [`SessionInfo`] |
//! | GET | `/v1/sessions/{id}` | | [`SessionInfo`] |
//! | POST | `/v1/sessions/{id}/join` | [`JoinRequest`] | [`JoinResponse`] |
//! | GET | `/v1/sessions/{id}/view` | | [`SessionView`] |
//! | GET | `/v1/sessions/{id}/targets?card=N` | | [`TargetsResponse`] |
//! | POST | `/v1/sessions/{id}/actions` | [`SubmitRequest`] | [`SubmitResponse`] |
//! | GET | `/v1/sessions/{id}/journal` | | [`Journal`] |
//! | GET | `/v1/sessions/{id}/record` | | `EpisodeRecord` (finished sessions only) |
//! | GET | `/v1/sessions/{id}/ws?token=T` | | stream of [`Push`] |
//! | POST | `/v1/eval` | [`EvalRequest`] | [`EvalResponse`] |
//! | POST | `/v1/crossplay` | [`CrossPlayRequest`] | [`CrossPlayResponse`] |
//! | POST | `/v1/diagnose` | [`DiagnoseRequest`] | [`DiagnoseResponse`] |
//! | POST | `/v1/bench` | [`BenchRequest`] | [`BenchResponse`] |
//! | POST | `/v1/export` | [`ExportRequest`] | probing rows as JSON lines |
//!
//! Seat endpoints take the seat token as `Authorization: Bearer <token>`.
//! The WebSocket takes it as a query parameter because browsers cannot set
//! headers on the upgrade request. Failures are answered with a
//! [`Rejection`] body.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use yle_core::action::ActionLayout;
use yle_core::agents::PolicySpec;
use yle_core::game::ScoreTerms;
use yle_core::harness::diagnostic::{DiagnosticReport, DiagnosticScenario};
use yle_core::harness::{CrossPlayMatrix, MatchupResult};
use yle_core::symmetry::SymmetryMode;
use yle_core::vec_env::BenchReport;
use yle_core::{Action, Cell, Encoding, GameConfig, HintTargetIndexing, MemoryMode, SeatView, Substep, Variant};

pub const SERVICE_VERSION: &str = "yle-svc/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutInfo {
    pub config: GameConfig,
    pub layout: ActionLayout,
    pub action_count: usize,
    pub max_episode_length: usize,
    pub graph_shape: Vec<usize>,
    pub image_shape: Vec<usize>,
}

/// Who plays a seat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SeatBinding {
    Human,
    Policy(PolicySpec),
}

impl FromStr for SeatBinding {
    type Err = yle_core::Error;

    fn from_str(s: &str) -> yle_core::Result<Self> {
        if s == "human" {
            Ok(Self::Human)
        } else {
            s.parse().map(Self::Policy)
        }
    }
}

impl fmt::Display for SeatBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Human => f.write_str("human"),
            Self::Policy(p) => p.fmt(f),
        }
    }
}

impl From<SeatBinding> for String {
    fn from(b: SeatBinding) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for SeatBinding {
    type Error = yle_core::Error;

    fn try_from(s: String) -> yle_core::Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub variant: Option<Variant>,
    #[serde(default)]
    pub players: Option<usize>,
    #[serde(default)]
    pub hint_target_indexing: Option<HintTargetIndexing>,
    /// Deal seed; drawn at random when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Keep every colour a seat has ever peeked visible to it.
    #[serde(default)]
    pub casual_memory: bool,
    /// One binding per seat; the server default fills missing entries.
    #[serde(default)]
    pub seats: Option<Vec<SeatBinding>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Finished,
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatInfo {
    pub seat: usize,
    pub binding: SeatBinding,
    pub joined: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub version: String,
    pub session: String,
    pub config: GameConfig,
    pub casual_memory: bool,
    pub seats: Vec<SeatInfo>,
    pub status: SessionStatus,
    /// Incremented by every accepted action.
    pub state_version: u64,
    pub action_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinRequest {
    pub seat: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinResponse {
    pub session: String,
    pub seat: usize,
    pub token: String,
    pub view: SessionView,
}

/// What the acting seat may do now. Empty for every other seat.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegalSummary {
    pub acting: bool,
    pub end_game: bool,
    pub observe: Vec<usize>,
    /// Cards with at least one legal destination.
    pub move_cards: Vec<usize>,
    pub reveal: Vec<usize>,
    pub place_hints: Vec<usize>,
    pub place_cards: Vec<usize>,
    pub noop: bool,
}

/// Final outcome, shown to every seat once the game is over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameResult {
    pub won: bool,
    pub ended_early: bool,
    pub score: Option<i32>,
    pub terms: ScoreTerms,
    pub complete_clusters: usize,
    pub card_colours: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: String,
    pub state_version: u64,
    pub status: SessionStatus,
    pub view: SeatView,
    pub legal: LegalSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<GameResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetsResponse {
    pub card: usize,
    pub state_version: u64,
    pub targets: Vec<Cell>,
}

/// An action as a structured value or as its index in the action layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionRef {
    Structured { action: Action },
    Index { action_index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitRequest {
    /// The `state_version` of the view the action was chosen from.
    pub state_version: u64,
    #[serde(flatten)]
    pub action: ActionRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub action_index: usize,
    pub action: Action,
    pub view: SessionView,
}

/// One accepted action. Actions never contain colours, so the journal is
/// public while the game runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub step: u32,
    pub seat: usize,
    pub substep: Substep,
    pub action_index: usize,
    pub action: Action,
    /// False for actions played by a scripted seat.
    pub by_human: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Journal {
    pub session: String,
    pub entries: Vec<JournalEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectCode {
    BadRequest,
    Unauthorized,
    NotFound,
    SeatTaken,
    SeatNotHuman,
    OutOfTurn,
    StaleVersion,
    GameOver,
    GameNotOver,
    WrongSubstep,
    IllegalTarget,
    CardLocked,
    RepeatedPeek,
    MoveAvailable,
    IllegalAction,
    PolicyForbidden,
    PolicyFailed,
    Internal,
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::String(name)) => f.write_str(&name),
            _ => write!(f, "{self:?}"),
        }
    }
}

impl RejectCode {
    pub fn http_status(self) -> u16 {
        match self {
            Self::BadRequest => 400,
            Self::Unauthorized => 401,
            Self::PolicyForbidden | Self::SeatNotHuman => 403,
            Self::NotFound => 404,
            Self::SeatTaken | Self::OutOfTurn | Self::StaleVersion | Self::GameOver | Self::GameNotOver => 409,
            Self::WrongSubstep
            | Self::IllegalTarget
            | Self::CardLocked
            | Self::RepeatedPeek
            | Self::MoveAvailable
            | Self::IllegalAction => 422,
            Self::PolicyFailed => 502,
            Self::Internal => 500,
        }
    }

    /// Reason code for an engine rejection.
    pub fn of_engine_error(e: &yle_core::Error) -> Self {
        use yle_core::Error as E;
        match e {
            E::GameOver => Self::GameOver,
            E::InactiveAgent { .. } => Self::OutOfTurn,
            E::WrongSubstep { .. } => Self::WrongSubstep,
            E::IllegalTarget { .. } | E::EmptyCell { .. } | E::OutOfGrid { .. } => Self::IllegalTarget,
            E::LockedCard(_) => Self::CardLocked,
            E::RepeatedPeek(_) => Self::RepeatedPeek,
            E::MoveAvailable => Self::MoveAvailable,
            E::Config(_) | E::Json(_) => Self::BadRequest,
            _ => Self::IllegalAction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "type", rename = "rejection")]
#[error("{code}: {message}")]
pub struct Rejection {
    pub code: RejectCode,
    pub message: String,
}

impl Rejection {
    pub fn new(code: RejectCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn engine(e: &yle_core::Error) -> Self {
        Self::new(RejectCode::of_engine_error(e), e.to_string())
    }
}

/// Server-to-seat WebSocket messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Push {
    Hello { version: String, session: String, seat: usize },
    /// Full seat view; sent on connect, on request and after every change.
    View { view: Box<SessionView> },
    /// `colour` is only present in the message sent to the inspecting seat.
    CardInspected { seat: usize, card: usize, colour: Option<u8> },
    CardMoved { seat: usize, card: usize, to: Cell },
    NoMove { seat: usize },
    HintRevealed { seat: usize, hint: usize, colours: u8 },
    HintPlaced { seat: usize, hint: usize, card: usize },
    TurnPassed { seat: usize },
    GameEnded { result: GameResult },
    Aborted { reason: String },
    Pong,
}

/// Seat-to-server WebSocket messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Resync,
    Ping,
}

fn default_games() -> usize {
    100
}

fn default_variant() -> Variant {
    Variant::ThreeByThree
}

fn default_players() -> usize {
    2
}

/// Game parameters shared by the batch operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_players")]
    pub players: usize,
    #[serde(default)]
    pub hint_target_indexing: HintTargetIndexing,
}

impl Default for GameSpec {
    fn default() -> Self {
        Self { variant: default_variant(), players: default_players(), hint_target_indexing: HintTargetIndexing::Cell }
    }
}

impl GameSpec {
    pub fn config(&self) -> yle_core::Result<GameConfig> {
        Ok(GameConfig::new(self.variant, self.players)?.with_hint_indexing(self.hint_target_indexing))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRequest {
    #[serde(default, flatten)]
    pub game: GameSpec,
    /// One policy per seat.
    pub seats: Vec<PolicySpec>,
    #[serde(default = "default_games")]
    pub games: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub symmetry: SymmetryMode,
    /// Memory mode offered to external policies.
    #[serde(default)]
    pub memory: MemoryMode,
    #[serde(default)]
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResponse {
    pub result: MatchupResult,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossPlayRequest {
    #[serde(default, flatten)]
    pub game: GameSpec,
    pub pool: Vec<PolicySpec>,
    #[serde(default = "default_games")]
    pub games: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub symmetry: SymmetryMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPlayResponse {
    pub matrix: CrossPlayMatrix,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnoseRequest {
    pub policy: PolicySpec,
    /// Scenarios to rank; the built-in fixture family when absent.
    #[serde(default)]
    pub scenarios: Option<Vec<DiagnosticScenario>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseResponse {
    pub report: DiagnosticReport,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRequest {
    #[serde(default, flatten)]
    pub game: GameSpec,
    pub envs: Vec<usize>,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Also build observations every step.
    #[serde(default)]
    pub observations: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResponse {
    pub reports: Vec<BenchReport>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRequest {
    #[serde(default, flatten)]
    pub game: GameSpec,
    pub seats: Vec<PolicySpec>,
    #[serde(default = "default_games")]
    pub games: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub symmetry: SymmetryMode,
    /// Embed each agent's observation in this encoding and memory mode.
    #[serde(default)]
    pub embed: Option<(Encoding, MemoryMode)>,
}
