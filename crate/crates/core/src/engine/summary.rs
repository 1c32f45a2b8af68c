//! Scalar figures of merit extracted from a finished trace.

use serde::{Deserialize, Serialize};

use crate::decision::Mode;
use crate::engine::{corridor_violations, Outcome, Trace};
use crate::error::Result;
use crate::tuner::{objective, ObjectiveWeights};

/// Vehicle speed below which it counts as stopped, m/s.
pub const V_STOPPED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingOrder {
    PedestrianFirst,
    VehicleFirst,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub outcome: Outcome,
    pub duration: f64,
    pub min_separation: f64,
    pub min_v_veh: f64,
    pub stop_duration: f64,
    pub stopping_time: f64,
    pub crossing_order: CrossingOrder,
    pub corridor_violations: usize,
    pub objective: f64,
}

/// First time at which `pred` holds on a record.
fn first_time(trace: &Trace, pred: impl Fn(&crate::engine::TraceRecord) -> bool) -> Option<f64> {
    trace.records.iter().find(|r| pred(r)).map(|r| r.t)
}

pub fn crossing_order(trace: &Trace) -> CrossingOrder {
    let ped = first_time(trace, |r| r.flags.ped_crossed);
    let veh = first_time(trace, |r| r.flags.veh_gone_through);
    match (ped, veh) {
        (Some(p), Some(v)) if p <= v => CrossingOrder::PedestrianFirst,
        (Some(_), None) => CrossingOrder::PedestrianFirst,
        (_, Some(_)) => CrossingOrder::VehicleFirst,
        (None, None) => CrossingOrder::None,
    }
}

pub fn summarize(
    trace: &Trace,
    weights: &ObjectiveWeights,
    k_num: f64,
    d_ca: f64,
    l_corridor: f64,
) -> Result<TraceSummary> {
    let dt = trace.dt;
    let count = |f: &dyn Fn(&crate::engine::TraceRecord) -> bool| {
        trace.records.iter().filter(|r| f(r)).count() as f64 * dt
    };
    Ok(TraceSummary {
        outcome: trace.outcome,
        duration: trace.records.len() as f64 * dt,
        min_separation: trace
            .records
            .iter()
            .map(|r| r.separation())
            .fold(f64::INFINITY, f64::min),
        min_v_veh: trace.records.iter().map(|r| r.v_veh).fold(f64::INFINITY, f64::min),
        stop_duration: count(&|r| r.v_veh < V_STOPPED),
        stopping_time: count(&|r| r.mode == Mode::Stopping),
        crossing_order: crossing_order(trace),
        corridor_violations: corridor_violations(&trace.records, d_ca, l_corridor),
        objective: objective(trace, weights, k_num)?,
    })
}

impl TraceSummary {
    pub fn is_timeout(&self) -> bool {
        self.outcome == Outcome::Timeout
    }
}
