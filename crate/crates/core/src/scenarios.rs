//! Built-in scenario fixtures.
//!
//! The two test scenarios replay the pedestrian behaviour of the published
//! experiments; the calibration pair (`cross_first`, `yield`) drives the
//! pedestrian with a behavioural model and is what the tuner optimizes on.

use crate::config::{Geometry, PedestrianInit, ScenarioConfig, VehicleInit};
use crate::decision::DecisionParams;
use crate::pedestrian::{Breakpoint, PedestrianConfig, PedestrianSource, Script};

/// Initial vehicle distance to the conflict point, m.
pub const D_VEH0: f64 = 40.0;

fn base(name: &str, pedestrian_init: PedestrianInit, pedestrian: PedestrianConfig) -> ScenarioConfig {
    let decision = DecisionParams::default();
    ScenarioConfig {
        name: name.to_string(),
        dt: 0.01,
        t_max: 60.0,
        run_out: 12.0,
        seed: 0,
        geometry: Geometry::default(),
        vehicle: VehicleInit {
            d_veh0: D_VEH0,
            v_veh0: decision.v_veh_d,
        },
        pedestrian_init,
        pedestrian,
        decision,
    }
}

/// Pedestrian walks at a constant 1.5 m/s with intention 0.55 and crosses first.
pub fn scenario_normal() -> ScenarioConfig {
    base(
        "normal",
        PedestrianInit {
            d_ped0: -6.0,
            v_ped0: 1.5,
            i_ped0: 0.55,
        },
        PedestrianConfig::scripted(Script::constant(1.5, 0.55)),
    )
}

/// Pedestrian rushes toward the road, then stops at t = 1.2 s (intention 0.2).
pub fn scenario_unexpected_stop() -> ScenarioConfig {
    let script = Script::new(vec![
        Breakpoint::new(0.0, 2.2, 0.2),
        Breakpoint::new(1.2, 0.0, 0.2),
    ])
    .expect("valid script");
    base(
        "unexpected_stop",
        PedestrianInit {
            d_ped0: -6.0,
            v_ped0: 2.2,
            i_ped0: 0.2,
        },
        PedestrianConfig::scripted(script),
    )
}

/// Pedestrian standing just outside the collision area with intention held
/// at 1.0: a false positive that must not stop the vehicle forever.
pub fn deadlock_probe() -> ScenarioConfig {
    base(
        "deadlock_probe",
        PedestrianInit {
            d_ped0: -2.5,
            v_ped0: 0.0,
            i_ped0: 1.0,
        },
        PedestrianConfig::scripted(Script::constant(0.0, 1.0)),
    )
}

/// Calibration scenario: the pedestrian crosses first and the vehicle waits.
pub fn cross_first(model: PedestrianSource) -> ScenarioConfig {
    base(
        "cross_first",
        PedestrianInit {
            d_ped0: -6.0,
            v_ped0: 1.2,
            i_ped0: 0.7,
        },
        PedestrianConfig::with_model(model),
    )
}

/// Calibration scenario: the pedestrian waits and the vehicle passes first.
pub fn yield_to_vehicle(model: PedestrianSource) -> ScenarioConfig {
    let mut cfg = base(
        "yield",
        PedestrianInit {
            d_ped0: -5.0,
            v_ped0: 1.2,
            i_ped0: 0.2,
        },
        PedestrianConfig::with_model(model),
    );
    cfg.vehicle.d_veh0 = 20.0;
    cfg
}

/// Tuning suite for one pedestrian model: both calibration scenarios at two
/// initial vehicle distances.
pub fn tuning_suite(model: PedestrianSource) -> Vec<ScenarioConfig> {
    let mut suite = Vec::new();
    for scale in [1.0, 1.5] {
        let mut a = cross_first(model);
        a.vehicle.d_veh0 *= scale;
        a.name = format!("cross_first_x{scale}");
        let mut b = yield_to_vehicle(model);
        b.vehicle.d_veh0 *= scale;
        b.name = format!("yield_x{scale}");
        suite.push(a);
        suite.push(b);
    }
    suite
}

/// All named fixtures.
pub fn builtin() -> Vec<ScenarioConfig> {
    vec![
        scenario_normal(),
        scenario_unexpected_stop(),
        deadlock_probe(),
        cross_first(PedestrianSource::Sfm),
        yield_to_vehicle(PedestrianSource::Sfm),
    ]
}

pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    builtin().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        for cfg in builtin() {
            cfg.validate().unwrap();
        }
        for cfg in tuning_suite(PedestrianSource::Mdp) {
            cfg.validate().unwrap();
        }
    }
}
