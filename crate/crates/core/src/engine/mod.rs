//! Fixed-step simulation of the vehicle, the pedestrian and the decision loop.
//!
//! Per tick: pedestrian command → observation → events → decision →
//! record → vehicle and pedestrian integration. The interaction ends when
//! the vehicle has gone through or the pedestrian has crossed; the run then
//! continues for `run_out` seconds so the vehicle can return to cruise
//! speed. Reaching `t_max` with the interaction still open is a timeout.

pub mod summary;
pub mod trace;

use crate::config::{Geometry, ScenarioConfig};
use crate::decision::{
    self, clamp_accel, DecisionParams, EventFlags, InteractionTracker, Mode,
    PedestrianObservation, VehicleState,
};
use crate::error::Result;
use crate::pedestrian::{ExternalInput, PedestrianDriver, PedestrianState, SharedMdp};

pub use trace::{Outcome, Trace, TraceRecord};

/// Speed cap of the vehicle integrator, m/s.
pub const V_VEH_CAP: f64 = 30.0;

/// Speed above which a vehicle inside the corridor counts as driving through it, m/s.
pub const V_CREEP: f64 = 0.2;

/// Semi-implicit Euler: velocity first (clamped to `[0, V_VEH_CAP]`), then
/// position with the new velocity. The stored acceleration is the clamped command.
pub fn vehicle_step(veh: &VehicleState, a_cmd: f64, dt: f64) -> VehicleState {
    let a = clamp_accel(a_cmd);
    let v = (veh.v_veh + a * dt).clamp(0.0, V_VEH_CAP);
    VehicleState {
        d_veh: veh.d_veh - v * dt,
        v_veh: v,
        a_veh: a,
    }
}

pub fn evaluate_events(
    d_veh: f64,
    d_ped: f64,
    geometry: &Geometry,
    params: &DecisionParams,
) -> EventFlags {
    EventFlags {
        ped_crossed: d_ped >= geometry.crossing_length / 2.0,
        ped_gone_through: d_ped > params.d_ca,
        veh_gone_through: d_veh < -geometry.l_corridor,
        ped_close_to_road: d_ped.abs() < params.d_nz,
        ped_in_collision_area: d_ped.abs() < params.d_ca,
    }
}

/// Time to collision `|d_veh / (v_veh + k_num)|`.
pub fn ttc(d_veh: f64, v_veh: f64, k_num: f64) -> f64 {
    (d_veh / (v_veh + k_num)).abs()
}

/// True when the vehicle is driving through the corridor while it is occupied.
pub fn violates_corridor(r: &TraceRecord, d_ca: f64, l_corridor: f64) -> bool {
    r.d_ped.abs() < d_ca && r.d_veh.abs() < l_corridor && r.v_veh > V_CREEP
}

pub fn corridor_violations(trace: &[TraceRecord], d_ca: f64, l_corridor: f64) -> usize {
    trace
        .iter()
        .filter(|r| violates_corridor(r, d_ca, l_corridor))
        .count()
}

/// A running simulation that can be advanced one tick at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: ScenarioConfig,
    tick: u64,
    veh: VehicleState,
    ped: PedestrianState,
    driver: PedestrianDriver,
    tracker: InteractionTracker,
    interaction_end: Option<f64>,
    records: Vec<TraceRecord>,
    outcome: Option<Outcome>,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        Self::with_mdp(cfg, None)
    }

    /// Like [`Simulation::new`] but reuses an already solved MDP when it matches.
    pub fn with_mdp(cfg: ScenarioConfig, mdp: Option<SharedMdp>) -> Result<Self> {
        cfg.validate()?;
        let ped = cfg.pedestrian_init.state();
        let driver = PedestrianDriver::new(&cfg.pedestrian, &ped, cfg.decision.d_ca, mdp)?;
        Ok(Self {
            veh: VehicleState::new(cfg.vehicle.d_veh0, cfg.vehicle.v_veh0),
            ped,
            driver,
            tracker: InteractionTracker::default(),
            interaction_end: None,
            records: Vec::new(),
            outcome: None,
            tick: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.cfg.dt
    }

    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn driver(&self) -> &PedestrianDriver {
        &self.driver
    }

    /// Feeds a live pedestrian input; returns false for non-external models.
    pub fn set_input(&mut self, input: ExternalInput) -> bool {
        self.driver.set_input(input)
    }

    /// Advances one tick and returns its record, or `None` once finished.
    pub fn step(&mut self) -> Result<Option<TraceRecord>> {
        if self.outcome.is_some() {
            return Ok(None);
        }
        let dt = self.cfg.dt;
        let t = self.time();
        let params = self.cfg.decision;

        let cmd = self.driver.command(t, &self.ped, &self.veh, dt);
        self.ped.v = cmd.v_ped_next;
        self.ped.i = cmd.i_ped_next;

        let obs = PedestrianObservation {
            d_ped: self.ped.d,
            v_ped: self.ped.v,
            i_ped_raw: self.ped.i,
            t_obs: t,
        };
        let events = evaluate_events(self.veh.d_veh, self.ped.d, &self.cfg.geometry, &params);
        let anchor = if self.interaction_end.is_none() {
            self.tracker.update(&obs, &params)
        } else {
            self.tracker.anchor()
        };
        let out = decision::decide(
            &self.veh,
            &obs,
            &params,
            &self.cfg.geometry.safe_cross(),
            anchor,
            &events,
        )?;
        let a = clamp_accel(out.a_veh_des);

        let record = TraceRecord {
            t,
            d_veh: self.veh.d_veh,
            v_veh: self.veh.v_veh,
            a_veh: a,
            d_ped: self.ped.d,
            v_ped: self.ped.v,
            i_raw: self.ped.i,
            i_eff: out.i_ped_eff,
            mode: out.mode,
            flags: events,
        };
        self.records.push(record);

        if out.mode == Mode::Done && self.interaction_end.is_none() {
            self.interaction_end = Some(t);
        }
        let eps = 1e-9 * dt;
        let next_t = (self.tick + 1) as f64 * dt;
        if let Some(end) = self.interaction_end {
            if t + eps >= end + self.cfg.run_out || next_t > self.cfg.t_max + eps {
                self.outcome = Some(Outcome::Completed);
            }
        } else if next_t > self.cfg.t_max + eps {
            self.outcome = Some(Outcome::Timeout);
        }

        self.veh = vehicle_step(&self.veh, a, dt);
        self.ped.d += self.ped.v * dt;
        self.tick += 1;
        Ok(Some(record))
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.step()?.is_some() {}
        Ok(())
    }

    pub fn into_trace(self) -> Trace {
        Trace {
            dt: self.cfg.dt,
            records: self.records,
            outcome: self.outcome.unwrap_or(Outcome::Timeout),
        }
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<Trace> {
    run_with_mdp(cfg, None)
}

pub fn run_with_mdp(cfg: &ScenarioConfig, mdp: Option<SharedMdp>) -> Result<Trace> {
    let mut sim = Simulation::with_mdp(cfg.clone(), mdp)?;
    sim.run_to_end()?;
    Ok(sim.into_trace())
}
