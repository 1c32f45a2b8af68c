//! Intention-aware decision-making for an automated vehicle approaching an
//! unsignalized pedestrian crossing.
//!
//! The crate contains the vehicle's rule-based decision logic with
//! intention discounting, three interchangeable pedestrian models (social
//! force, grid MDP, scripted) plus a slot for live input, a deterministic
//! fixed-step simulator, a particle swarm parameter designer and a
//! pattern-search calibrator for the pedestrian models.

pub mod calibration;
pub mod config;
pub mod decision;
pub mod engine;
pub mod error;
pub mod pedestrian;
pub mod scenarios;
pub mod tuner;

pub use config::ScenarioConfig;
pub use decision::{DecisionParams, Mode};
pub use engine::{run, Outcome, Simulation, Trace, TraceRecord};
pub use error::{Error, Result};
