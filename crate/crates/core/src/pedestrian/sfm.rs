//! One-dimensional social force pedestrian with the vehicle as the only
//! repulsive agent.

use serde::{Deserialize, Serialize};

use crate::decision::VehicleState;
use crate::error::{Error, Result};

use super::{PedestrianCommand, PedestrianSource, PedestrianState, V_PED_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfmParams {
    /// Desired walking speed, m/s.
    pub v0: f64,
    /// Relaxation time, s.
    pub tau: f64,
    /// Vehicle repulsion magnitude at the collision-area radius, m/s².
    pub a_veh: f64,
    /// Repulsion decay length, m.
    pub b_veh: f64,
    /// Target position on the far side, m.
    pub goal: f64,
}

impl Default for SfmParams {
    fn default() -> Self {
        Self {
            v0: 1.3,
            tau: 0.5,
            a_veh: 30.0,
            b_veh: 4.0,
            goal: 6.0,
        }
    }
}

impl SfmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0
            && self.b_veh > 0.0
            && self.a_veh >= 0.0
            && self.v0 > 0.0
            && self.goal.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid social force parameters: {self:?}")))
        }
    }

    pub fn as_vector(&self) -> [f64; 4] {
        [self.v0, self.tau, self.a_veh, self.b_veh]
    }

    pub fn with_vector(&self, x: &[f64; 4]) -> Self {
        Self {
            v0: x[0],
            tau: x[1],
            a_veh: x[2],
            b_veh: x[3],
            ..*self
        }
    }
}

/// Euclidean separation with the vehicle on the path axis and the
/// pedestrian on the crossing axis.
pub fn separation(d_ped: f64, d_veh: f64) -> f64 {
    d_ped.hypot(d_veh)
}

/// Social-force acceleration along the crossing direction.
///
/// `away` is the crossing-axis component of the unit vector pointing from
/// the vehicle to the pedestrian.
pub fn sfm_acceleration(
    v_ped: f64,
    heading_to_goal: f64,
    gap: f64,
    away: f64,
    params: &SfmParams,
    d_ca: f64,
) -> f64 {
    let driving = (params.v0 * heading_to_goal - v_ped) / params.tau;
    let repulsion = if gap.is_finite() {
        params.a_veh * ((d_ca - gap) / params.b_veh).exp() * away
    } else {
        0.0
    };
    driving + repulsion
}

pub fn sfm_step(
    ped: &PedestrianState,
    veh: &VehicleState,
    params: &SfmParams,
    d_ca: f64,
    dt: f64,
) -> PedestrianCommand {
    let gap = separation(ped.d, veh.d_veh);
    let away = if gap > 0.0 { ped.d / gap } else { 0.0 };
    let heading = if ped.d < params.goal { 1.0 } else { 0.0 };
    let acc = sfm_acceleration(ped.v, heading, gap, away, params, d_ca);
    let v_next = (ped.v + acc * dt).clamp(0.0, (2.0 * params.v0).min(V_PED_MAX));
    PedestrianCommand {
        source: PedestrianSource::Sfm,
        v_ped_next: v_next,
        i_ped_next: ped.i,
    }
}
