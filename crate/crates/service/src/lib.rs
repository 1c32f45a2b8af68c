//! Real-time session server that lets a live participant play the
//! pedestrian against the simulated vehicle.
//!
//! Each session owns one paced [`crosswalk_core::Simulation`]. Inputs arrive
//! over a websocket, are queued and applied at the next tick (the latest
//! value is held until replaced), and state snapshots are fanned out to every
//! connected client. Every applied input is logged by tick so that a session
//! can be replayed offline and reproduce the live trace exactly.

pub mod error;
pub mod protocol;
pub mod server;
pub mod session;

pub use error::{Error, Result};
pub use server::{router, serve, AppState, ServiceConfig};
pub use session::{replay, InputRecord, SessionCore};
