//! Transport-independent session state: the paced simulation, its input
//! log and the broadcast decimation rule.

use std::time::Duration;

use crosswalk_core::engine::trace::StateMessage;
use crosswalk_core::pedestrian::{ExternalInput, PedestrianSource};
use crosswalk_core::{ScenarioConfig, Simulation, Trace, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Ack, Hello, InputStatus, Status};

/// Upper bound on the state broadcast rate, messages per wall-clock second.
pub const MAX_BROADCAST_HZ: f64 = 30.0;
/// Largest accepted pace factor.
pub const MAX_PACE: f64 = 1000.0;

/// One applied live input, keyed by the tick at which it first takes effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub tick: u64,
    pub v_ped: f64,
    pub i_ped: f64,
}

#[derive(Debug, Clone)]
pub struct SessionCore {
    id: u64,
    cfg: ScenarioConfig,
    sim: Simulation,
    pace: f64,
    running: bool,
    inputs: Vec<InputRecord>,
}

fn check_pace(pace: f64) -> Result<f64> {
    if pace.is_finite() && pace > 0.0 && pace <= MAX_PACE {
        Ok(pace)
    } else {
        Err(Error::BadRequest(format!("pace must be in (0, {MAX_PACE}], got {pace}")))
    }
}

impl SessionCore {
    /// A new session, paused at t = 0.
    pub fn new(id: u64, cfg: ScenarioConfig, pace: f64) -> Result<Self> {
        let pace = check_pace(pace)?;
        let sim = Simulation::new(cfg.clone())?;
        Ok(Self {
            id,
            cfg,
            sim,
            pace,
            running: false,
            inputs: Vec::new(),
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn model(&self) -> PedestrianSource {
        self.cfg.pedestrian.model
    }

    /// True when the pedestrian is simulated; live inputs are then ignored.
    pub fn is_spectator(&self) -> bool {
        self.model() != PedestrianSource::External
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn is_finished(&self) -> bool {
        self.sim.is_finished()
    }

    pub fn pace(&self) -> f64 {
        self.pace
    }

    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn records(&self) -> &[TraceRecord] {
        self.sim.records()
    }

    pub fn inputs(&self) -> &[InputRecord] {
        &self.inputs
    }

    /// Wall-clock time between ticks at the current pace.
    pub fn period(&self) -> Duration {
        Duration::from_secs_f64(self.cfg.dt / self.pace)
    }

    /// Only every n-th tick is broadcast so the rate stays under the cap.
    pub fn decimation(&self) -> u64 {
        let ticks_per_second = self.pace / self.cfg.dt;
        (ticks_per_second / MAX_BROADCAST_HZ).ceil().max(1.0) as u64
    }

    pub fn set_pace(&mut self, pace: f64) -> Result<()> {
        self.pace = check_pace(pace)?;
        Ok(())
    }

    /// Starts the clock; a finished session stays stopped.
    pub fn start(&mut self) {
        self.running = !self.sim.is_finished();
    }

    pub fn pause(&mut self) {
        self.running = false;
    }

    /// Back to t = 0, paused, with an empty input log.
    pub fn reset(&mut self) -> Result<()> {
        self.sim = Simulation::new(self.cfg.clone())?;
        self.inputs.clear();
        self.running = false;
        Ok(())
    }

    /// Queues a live input. It replaces the held value and is used from the
    /// next computed tick onwards.
    pub fn handle_input(&mut self, v_ped: f64, i_ped: f64, t: Option<f64>) -> Ack {
        let tick = self.sim.tick_index();
        let ack = |status| Ack {
            kind: "ack".into(),
            status,
            tick,
        };
        if self.is_spectator() || self.sim.is_finished() {
            return ack(InputStatus::Ignored);
        }
        let input = ExternalInput { v_ped, i_ped };
        if input.validate().is_err() || t.is_some_and(|t| !t.is_finite()) {
            return ack(InputStatus::Invalid);
        }
        let dt = self.cfg.dt;
        if t.is_some_and(|t| t < self.sim.time() - dt - 1e-9 * dt) {
            return ack(InputStatus::Stale);
        }
        self.sim.set_input(input);
        self.inputs.push(InputRecord { tick, v_ped, i_ped });
        ack(InputStatus::Applied)
    }

    /// Advances one tick. Returns the record and whether it should be broadcast.
    pub fn tick(&mut self) -> Result<Option<(TraceRecord, bool)>> {
        let k = self.sim.tick_index();
        let Some(record) = self.sim.step()? else {
            self.running = false;
            return Ok(None);
        };
        let finished = self.sim.is_finished();
        if finished {
            self.running = false;
        }
        Ok(Some((record, finished || k.is_multiple_of(self.decimation()))))
    }

    /// Latest state, or the state the first tick will report if none ran yet.
    pub fn snapshot(&self) -> Result<StateMessage> {
        if let Some(last) = self.sim.records().last() {
            return Ok(StateMessage::from(last));
        }
        let mut probe = self.sim.clone();
        let record = probe.step()?.expect("a fresh simulation has a first tick");
        Ok(StateMessage::from(&record))
    }

    pub fn hello(&self) -> Hello {
        Hello {
            kind: "hello".into(),
            session: self.id,
            scenario: self.cfg.name.clone(),
            model: self.model(),
            spectator: self.is_spectator(),
            dt: self.cfg.dt,
            pace: self.pace,
        }
    }

    pub fn status(&self) -> Status {
        Status {
            kind: "status".into(),
            t: self.sim.time(),
            tick: self.sim.tick_index(),
            running: self.running,
            finished: self.sim.is_finished(),
            outcome: self.sim.outcome(),
            pace: self.pace,
        }
    }

    pub fn trace_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        crosswalk_core::engine::trace::write_csv(self.sim.records(), &mut out)?;
        Ok(String::from_utf8(out).expect("trace CSV is UTF-8"))
    }
}

/// Re-runs a session offline from its configuration and input log.
pub fn replay(cfg: &ScenarioConfig, inputs: &[InputRecord]) -> Result<Trace> {
    let mut sim = Simulation::new(cfg.clone())?;
    let mut pending = inputs.iter().peekable();
    while !sim.is_finished() {
        let k = sim.tick_index();
        while let Some(rec) = pending.next_if(|r| r.tick <= k) {
            sim.set_input(ExternalInput {
                v_ped: rec.v_ped,
                i_ped: rec.i_ped,
            });
        }
        sim.step()?;
    }
    Ok(sim.into_trace())
}
