//! Randomized scripted scenarios shared by the property and acceptance tests.
#![allow(dead_code)]

use crosswalk_core::config::{PedestrianInit, VehicleInit};
use crosswalk_core::pedestrian::{Breakpoint, PedestrianConfig, Script};
use crosswalk_core::{scenarios, DecisionParams, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A pedestrian who walks through, one who approaches and stops short of
/// the road, or one standing at the kerb — each against a vehicle with a
/// random start.
pub fn random_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v_d = DecisionParams::default().v_veh_d;
    let mut cfg = scenarios::scenario_normal();
    cfg.name = format!("random_{seed}");
    cfg.seed = seed;
    cfg.vehicle = VehicleInit {
        d_veh0: rng.gen_range(25.0..60.0),
        v_veh0: rng.gen_range(0.0..=v_d),
    };
    let (init, script) = match rng.gen_range(0..3) {
        0 => {
            let d0 = rng.gen_range(-12.0..-5.0);
            let v = rng.gen_range(0.8..2.5);
            let i = rng.gen_range(0.55..=1.0);
            (PedestrianInit { d_ped0: d0, v_ped0: v, i_ped0: i }, Script::constant(v, i))
        }
        1 => {
            let d0 = rng.gen_range(-12.0..-6.5);
            let v = rng.gen_range(0.8..1.9);
            let i = rng.gen_range(0.0..=0.3);
            let stop_at = rng.gen_range(-6.0..-2.2);
            let t_stop = (stop_at - d0) / v;
            let script = Script::new(vec![Breakpoint::new(0.0, v, i), Breakpoint::new(t_stop, 0.0, i)])
                .expect("valid stopper script");
            (PedestrianInit { d_ped0: d0, v_ped0: v, i_ped0: i }, script)
        }
        _ => {
            let d0 = rng.gen_range(-6.0..-2.2);
            let i = rng.gen_range(0.0..=1.0);
            (PedestrianInit { d_ped0: d0, v_ped0: 0.0, i_ped0: i }, Script::constant(0.0, i))
        }
    };
    cfg.pedestrian_init = init;
    cfg.pedestrian = PedestrianConfig::scripted(script);
    cfg
}
