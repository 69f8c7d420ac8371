//! Device↔host wire format and the emulated link that carries it.

mod codec;
mod transport;

pub use codec::*;
pub use transport::{Transport, TransportConfig, TransportConfigError, TransportStats};
