//! Turn-based game service for live play, plus the batch operations of the
//! evaluation harness, over HTTP and WebSocket.
//!
//! [`protocol`] is the message catalogue and is always available. The
//! `server` feature adds the [`session`] state machine and the axum
//! [`server`].

pub mod protocol;
#[cfg(feature = "server")]
pub mod server;
#[cfg(feature = "server")]
pub mod session;

pub use protocol::SERVICE_VERSION;
#[cfg(feature = "server")]
pub use server::{router, serve, spawn_local, ServiceConfig};
#[cfg(feature = "server")]
pub use session::Session;
