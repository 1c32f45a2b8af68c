//! Intention-aware decision-making for the vehicle at an unsignalized crossing.
//!
//! Everything here is a pure function of its inputs. The engine owns the
//! interaction anchor and the event flags; this module only evaluates the
//! branch structure and the longitudinal feedback laws.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Lower physical clamp on the commanded acceleration, m/s².
pub const A_MIN: f64 = -4.0;
/// Upper physical clamp on the commanded acceleration, m/s².
pub const A_MAX: f64 = 2.5;

/// Base of the exponential intention discount.
const DISCOUNT_BASE: f64 = 0.9;

/// Raw-intention rise above the anchored value that renews the interaction.
pub const INTENTION_RENEWAL_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedestrianObservation {
    /// Signed distance to the vehicle path centerline, negative on the approach side.
    pub d_ped: f64,
    /// Speed along the crossing direction, positive toward/through the road.
    pub v_ped: f64,
    pub i_ped_raw: f64,
    pub t_obs: f64,
}

impl PedestrianObservation {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("d_ped", self.d_ped)?;
        ensure_finite("v_ped", self.v_ped)?;
        ensure_finite("t_obs", self.t_obs)?;
        if !(0.0..=1.0).contains(&self.i_ped_raw) {
            return Err(Error::Contract(format!(
                "i_ped_raw must lie in [0, 1], got {}",
                self.i_ped_raw
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Distance from the vehicle front to the conflict point; negative once past it.
    pub d_veh: f64,
    pub v_veh: f64,
    pub a_veh: f64,
}

impl VehicleState {
    pub fn new(d_veh: f64, v_veh: f64) -> Self {
        Self {
            d_veh,
            v_veh,
            a_veh: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("d_veh", self.d_veh)?;
        ensure_finite("v_veh", self.v_veh)?;
        ensure_finite("a_veh", self.a_veh)?;
        if self.v_veh < 0.0 {
            return Err(Error::Contract(format!(
                "v_veh must be non-negative, got {}",
                self.v_veh
            )));
        }
        Ok(())
    }
}

/// Tunable parameters of the decision algorithm.
///
/// The first seven fields are the ones the swarm tuner searches over; see
/// [`DecisionParams::TUNED`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionParams {
    pub i_ped_h: f64,
    pub i_ped_l: f64,
    pub v_ped_h: f64,
    pub v_ped_l: f64,
    pub k_veh_acc: f64,
    pub k_veh_dec: f64,
    pub k_disc: f64,
    /// Near-zone radius, m.
    pub d_nz: f64,
    /// Collision-area radius, m.
    pub d_ca: f64,
    /// Desired cruise speed, m/s.
    pub v_veh_d: f64,
    /// Keeps time-to-collision style quotients finite at standstill.
    pub k_num: f64,
}

impl Default for DecisionParams {
    /// Hand-tuned baseline.
    ///
    /// `v_ped_l` is slightly negative so a standing pedestrian with a
    /// mid-range intention falls into the caution band and is released only
    /// once the discounted intention drops below `i_ped_l`.
    fn default() -> Self {
        Self {
            i_ped_h: 0.5,
            i_ped_l: 0.3,
            v_ped_h: 2.0,
            v_ped_l: -0.1,
            k_veh_acc: 0.5,
            k_veh_dec: 1.5,
            k_disc: 0.3,
            d_nz: 4.0,
            d_ca: 2.0,
            v_veh_d: 8.33,
            k_num: 0.01,
        }
    }
}

impl DecisionParams {
    /// Names of the seven tuned parameters, in vector order.
    pub const TUNED: [&'static str; 7] = [
        "i_ped_h",
        "i_ped_l",
        "v_ped_h",
        "v_ped_l",
        "k_veh_acc",
        "k_veh_dec",
        "k_disc",
    ];

    pub fn tuned_vector(&self) -> [f64; 7] {
        [
            self.i_ped_h,
            self.i_ped_l,
            self.v_ped_h,
            self.v_ped_l,
            self.k_veh_acc,
            self.k_veh_dec,
            self.k_disc,
        ]
    }

    /// Copy of `self` with the tuned entries replaced by `x`.
    pub fn with_tuned(&self, x: &[f64; 7]) -> Self {
        Self {
            i_ped_h: x[0],
            i_ped_l: x[1],
            v_ped_h: x[2],
            v_ped_l: x[3],
            k_veh_acc: x[4],
            k_veh_dec: x[5],
            k_disc: x[6],
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("i_ped_h", self.i_ped_h),
            ("i_ped_l", self.i_ped_l),
            ("v_ped_h", self.v_ped_h),
            ("v_ped_l", self.v_ped_l),
            ("k_veh_acc", self.k_veh_acc),
            ("k_veh_dec", self.k_veh_dec),
            ("k_disc", self.k_disc),
            ("d_nz", self.d_nz),
            ("d_ca", self.d_ca),
            ("v_veh_d", self.v_veh_d),
            ("k_num", self.k_num),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        let fail = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.i_ped_l) || !(0.0..=1.0).contains(&self.i_ped_h) {
            return fail("intention thresholds must lie in [0, 1]".into());
        }
        if self.i_ped_l >= self.i_ped_h {
            return fail(format!(
                "i_ped_l ({}) must be below i_ped_h ({})",
                self.i_ped_l, self.i_ped_h
            ));
        }
        if self.v_ped_l >= self.v_ped_h {
            return fail(format!(
                "v_ped_l ({}) must be below v_ped_h ({})",
                self.v_ped_l, self.v_ped_h
            ));
        }
        for (name, value) in [
            ("k_veh_acc", self.k_veh_acc),
            ("k_veh_dec", self.k_veh_dec),
            ("v_veh_d", self.v_veh_d),
            ("k_num", self.k_num),
            ("d_ca", self.d_ca),
        ] {
            if value <= 0.0 {
                return fail(format!("{name} must be strictly positive, got {value}"));
            }
        }
        if self.k_disc < 0.0 {
            return fail(format!("k_disc must be non-negative, got {}", self.k_disc));
        }
        if self.d_ca >= self.d_nz {
            return fail(format!(
                "d_ca ({}) must be smaller than d_nz ({})",
                self.d_ca, self.d_nz
            ));
        }
        Ok(())
    }
}

/// Constants of the safe-crossing gap test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafeCrossConfig {
    /// Length of road the vehicle must cover past the conflict point, m.
    pub l_corridor: f64,
    /// Multiplier (> 1) on the vehicle's clearing time.
    pub sigma: f64,
    /// Pedestrian speed used when the pedestrian is (nearly) standing, m/s.
    pub v_ped_floor: f64,
}

impl Default for SafeCrossConfig {
    fn default() -> Self {
        Self {
            l_corridor: 4.0,
            sigma: 1.5,
            v_ped_floor: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Crossing,
    Stopping,
    Done,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Crossing => "Crossing",
            Mode::Stopping => "Stopping",
            Mode::Done => "Done",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Crossing" => Ok(Mode::Crossing),
            "Stopping" => Ok(Mode::Stopping),
            "Done" => Ok(Mode::Done),
            other => Err(Error::Validation(format!("unknown mode {other:?}"))),
        }
    }
}

/// Scene events the engine evaluates before each decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventFlags {
    pub ped_crossed: bool,
    pub ped_gone_through: bool,
    pub veh_gone_through: bool,
    pub ped_close_to_road: bool,
    pub ped_in_collision_area: bool,
}

/// Every predicate the algorithm looked at on one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Predicates {
    pub can_veh_safe_cross: bool,
    pub ped_in_collision_area: bool,
    pub ped_gone_through: bool,
    pub ped_close_to_road: bool,
    pub ped_crossed: bool,
    pub veh_gone_through: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionOutput {
    pub mode: Mode,
    pub a_veh_des: f64,
    pub predicates: Predicates,
    pub i_ped_eff: f64,
}

/// Start of the current interaction and the raw intention observed then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionAnchor {
    pub t0: f64,
    pub i_at_t0: f64,
}

pub fn is_pedestrian_close_to_road(d_ped: f64, d_nz: f64) -> Result<bool> {
    ensure_finite("d_ped", d_ped)?;
    ensure_finite("d_nz", d_nz)?;
    if d_nz <= 0.0 {
        return Err(Error::Contract(format!("d_nz must be positive, got {d_nz}")));
    }
    Ok(d_ped.abs() < d_nz)
}

pub fn is_pedestrian_in_collision_area(d_ped: f64, d_ca: f64) -> Result<bool> {
    ensure_finite("d_ped", d_ped)?;
    ensure_finite("d_ca", d_ca)?;
    if d_ca <= 0.0 {
        return Err(Error::Contract(format!("d_ca must be positive, got {d_ca}")));
    }
    Ok(d_ped.abs() < d_ca)
}

/// `i0 · 0.9^(k_disc · t_elapsed)`.
pub fn discount_intention(i0: f64, k_disc: f64, t_elapsed: f64) -> Result<f64> {
    ensure_finite("i_ped_t0", i0)?;
    ensure_finite("k_disc", k_disc)?;
    ensure_finite("t_elapsed", t_elapsed)?;
    if !(0.0..=1.0).contains(&i0) {
        return Err(Error::Contract(format!("intention must lie in [0, 1], got {i0}")));
    }
    if t_elapsed < 0.0 {
        return Err(Error::Contract(format!(
            "elapsed time must be non-negative, got {t_elapsed}"
        )));
    }
    if k_disc < 0.0 {
        return Err(Error::Contract(format!("k_disc must be non-negative, got {k_disc}")));
    }
    Ok(i0 * DISCOUNT_BASE.powf(k_disc * t_elapsed))
}

/// Time after which an anchored intention `i0` has decayed to `threshold`.
///
/// `None` when the threshold is never crossed (no decay, or already below).
pub fn discount_crossing_time(i0: f64, threshold: f64, k_disc: f64) -> Option<f64> {
    if k_disc <= 0.0 || threshold <= 0.0 || i0 <= threshold {
        return None;
    }
    Some((threshold / i0).ln() / (k_disc * DISCOUNT_BASE.ln()))
}

/// Feedback law for the given mode. `Done` tracks the cruise speed.
///
/// The result is the raw law; the physical clamp to `[A_MIN, A_MAX]` is
/// applied by the vehicle integrator.
pub fn accel_command(mode: Mode, v_veh: f64, params: &DecisionParams) -> Result<f64> {
    ensure_finite("v_veh", v_veh)?;
    if v_veh < 0.0 {
        return Err(Error::Contract(format!("v_veh must be non-negative, got {v_veh}")));
    }
    Ok(match mode {
        Mode::Crossing | Mode::Done => params.k_veh_acc * (params.v_veh_d - v_veh),
        Mode::Stopping => params.k_veh_dec * (0.0 - v_veh),
    })
}

pub fn clamp_accel(a: f64) -> f64 {
    a.clamp(A_MIN, A_MAX)
}

/// Gap test: does the vehicle, at its current speed, clear the corridor
/// with margin before the pedestrian can reach the collision area?
pub fn can_veh_safe_cross(
    veh: &VehicleState,
    ped: &PedestrianObservation,
    params: &DecisionParams,
    safety: &SafeCrossConfig,
) -> bool {
    if ped.d_ped.abs() < params.d_ca {
        return false;
    }
    let t_veh_clear = (veh.d_veh + safety.l_corridor) / (veh.v_veh + params.k_num);
    let t_ped_arrive =
        (ped.d_ped.abs() - params.d_ca).max(0.0) / ped.v_ped.max(safety.v_ped_floor);
    t_veh_clear * safety.sigma < t_ped_arrive
}

/// Discounted intention used by the decision on this tick.
///
/// Before any interaction the raw value is used. Afterwards the anchored
/// value decays, and never exceeds the current raw reading.
pub fn effective_intention(
    ped: &PedestrianObservation,
    anchor: Option<InteractionAnchor>,
    k_disc: f64,
) -> Result<f64> {
    match anchor {
        None => Ok(ped.i_ped_raw),
        Some(a) => {
            let decayed = discount_intention(a.i_at_t0, k_disc, (ped.t_obs - a.t0).max(0.0))?;
            Ok(decayed.min(ped.i_ped_raw))
        }
    }
}

/// One evaluation of the decision algorithm.
pub fn decide(
    veh: &VehicleState,
    ped: &PedestrianObservation,
    params: &DecisionParams,
    safety: &SafeCrossConfig,
    anchor: Option<InteractionAnchor>,
    events: &EventFlags,
) -> Result<DecisionOutput> {
    params.validate()?;
    veh.validate()?;
    ped.validate()?;
    if let Some(a) = anchor {
        if a.t0 > ped.t_obs {
            return Err(Error::Contract(format!(
                "interaction start {} lies after the observation time {}",
                a.t0, ped.t_obs
            )));
        }
    }

    let i_eff = effective_intention(ped, anchor, params.k_disc)?;
    let predicates = Predicates {
        can_veh_safe_cross: can_veh_safe_cross(veh, ped, params, safety),
        ped_in_collision_area: is_pedestrian_in_collision_area(ped.d_ped, params.d_ca)?,
        ped_gone_through: events.ped_gone_through,
        ped_close_to_road: is_pedestrian_close_to_road(ped.d_ped, params.d_nz)?,
        ped_crossed: events.ped_crossed,
        veh_gone_through: events.veh_gone_through,
    };

    let mode = select_mode(&predicates, ped.v_ped, i_eff, params);
    Ok(DecisionOutput {
        mode,
        a_veh_des: accel_command(mode, veh.v_veh, params)?,
        predicates,
        i_ped_eff: i_eff,
    })
}

fn select_mode(p: &Predicates, v_ped: f64, i_eff: f64, params: &DecisionParams) -> Mode {
    if p.veh_gone_through || p.ped_crossed {
        return Mode::Done;
    }
    if p.can_veh_safe_cross {
        return Mode::Crossing;
    }
    if p.ped_in_collision_area {
        Mode::Stopping
    } else if p.ped_gone_through {
        Mode::Crossing
    } else if p.ped_close_to_road && v_ped > 0.0 {
        Mode::Stopping
    } else if v_ped > params.v_ped_h || i_eff > params.i_ped_h {
        Mode::Stopping
    } else if params.v_ped_l < v_ped
        && v_ped < params.v_ped_h
        && params.i_ped_l < i_eff
        && i_eff < params.i_ped_h
    {
        Mode::Stopping
    } else {
        Mode::Crossing
    }
}

/// Tracks the interaction start used to anchor intention discounting.
///
/// The interaction begins on the first tick the pedestrian is inside the
/// near zone or shows a raw intention at or above `i_ped_l`. A raw
/// intention rising more than [`INTENTION_RENEWAL_STEP`] above the anchored
/// value renews the interaction at the current tick.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InteractionTracker {
    anchor: Option<InteractionAnchor>,
}

impl InteractionTracker {
    pub fn anchor(&self) -> Option<InteractionAnchor> {
        self.anchor
    }

    pub fn update(
        &mut self,
        ped: &PedestrianObservation,
        params: &DecisionParams,
    ) -> Option<InteractionAnchor> {
        let renew = |i_raw: f64| InteractionAnchor {
            t0: ped.t_obs,
            i_at_t0: i_raw,
        };
        match self.anchor {
            None => {
                let close = ped.d_ped.abs() < params.d_nz;
                if close || ped.i_ped_raw >= params.i_ped_l {
                    self.anchor = Some(renew(ped.i_ped_raw));
                }
            }
            Some(a) => {
                if ped.i_ped_raw > a.i_at_t0 + INTENTION_RENEWAL_STEP {
                    self.anchor = Some(renew(ped.i_ped_raw));
                }
            }
        }
        self.anchor
    }
}
