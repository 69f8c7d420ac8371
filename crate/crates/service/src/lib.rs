//! Live two-player sessions over a websocket.
//!
//! Clients connect to `ws://HOST:PORT/session` and exchange the JSON messages
//! in [`messages`]. The server runs the same engine as the headless harness,
//! so a live session leaves a log that replays headlessly.

pub mod messages;
pub mod server;

pub use messages::{input_to_contact, input_to_grip, ClientEnvelope, ClientMessage, EndReason, ServerEnvelope, ServerMessage};
pub use server::{Server, ServiceError, ServiceOptions, ServiceOutcome, SESSION_PATH};
