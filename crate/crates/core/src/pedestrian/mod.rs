//! Interchangeable pedestrian motion models.

pub mod mdp;
pub mod scripted;
pub mod sfm;

use serde::{Deserialize, Serialize};

use crate::decision::VehicleState;
use crate::error::{Error, Result};

pub use mdp::{CrossingMdp, MdpGrid, MdpRewards, PedAction, SharedMdp, SolvedCrossingMdp};
pub use scripted::{Breakpoint, Script};
pub use sfm::SfmParams;

/// Physical bound on any emitted pedestrian speed, m/s.
pub const V_PED_MAX: f64 = 3.0;

/// Bellman residual tolerance used whenever a scenario needs a solved MDP.
pub const MDP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub d: f64,
    pub v: f64,
    pub i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PedestrianSource {
    Sfm,
    Mdp,
    Scripted,
    External,
}

impl std::str::FromStr for PedestrianSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sfm" => Ok(Self::Sfm),
            "mdp" => Ok(Self::Mdp),
            "scripted" => Ok(Self::Scripted),
            "external" => Ok(Self::External),
            other => Err(Error::Config(format!("unknown pedestrian model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedestrianCommand {
    pub source: PedestrianSource,
    pub v_ped_next: f64,
    pub i_ped_next: f64,
}

/// Live input for the external (human) pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalInput {
    pub v_ped: f64,
    pub i_ped: f64,
}

impl ExternalInput {
    pub fn validate(&self) -> Result<()> {
        if !self.v_ped.is_finite() || !(0.0..=1.0).contains(&self.i_ped) {
            return Err(Error::Validation(format!("invalid pedestrian input {self:?}")));
        }
        Ok(())
    }
}

/// Pedestrian model selection and parameters as stored in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianConfig {
    pub model: PedestrianSource,
    #[serde(default)]
    pub sfm: SfmParams,
    #[serde(default)]
    pub mdp: CrossingMdp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Script>,
}

impl PedestrianConfig {
    pub fn scripted(script: Script) -> Self {
        Self {
            model: PedestrianSource::Scripted,
            sfm: SfmParams::default(),
            mdp: CrossingMdp::default(),
            script: Some(script),
        }
    }

    pub fn with_model(model: PedestrianSource) -> Self {
        Self {
            model,
            sfm: SfmParams::default(),
            mdp: CrossingMdp::default(),
            script: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.model {
            PedestrianSource::Sfm => self.sfm.validate(),
            PedestrianSource::Mdp => self.mdp.grid.validate(),
            PedestrianSource::Scripted => match &self.script {
                Some(s) => s.validate(),
                None => Err(Error::Config("scripted pedestrian needs a script".into())),
            },
            PedestrianSource::External => Ok(()),
        }
    }
}

/// Stateful model instance stepped by the engine once per tick.
#[derive(Debug, Clone)]
pub enum PedestrianDriver {
    Sfm { params: SfmParams, d_ca: f64 },
    Mdp { model: SharedMdp, next_decision: f64 },
    Scripted(Script),
    External { latest: ExternalInput },
}

impl PedestrianDriver {
    /// Builds the driver; `mdp` reuses an already solved model when given.
    pub fn new(
        cfg: &PedestrianConfig,
        init: &PedestrianState,
        d_ca: f64,
        mdp: Option<SharedMdp>,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.model {
            PedestrianSource::Sfm => Self::Sfm {
                params: cfg.sfm,
                d_ca,
            },
            PedestrianSource::Mdp => {
                let model = match mdp {
                    Some(m) if m.model == cfg.mdp => m,
                    _ => SharedMdp::new(cfg.mdp.solve(MDP_TOL)?),
                };
                Self::Mdp {
                    model,
                    next_decision: 0.0,
                }
            }
            PedestrianSource::Scripted => Self::Scripted(cfg.script.clone().expect("validated")),
            PedestrianSource::External => Self::External {
                latest: ExternalInput {
                    v_ped: init.v,
                    i_ped: init.i,
                },
            },
        })
    }

    pub fn source(&self) -> PedestrianSource {
        match self {
            Self::Sfm { .. } => PedestrianSource::Sfm,
            Self::Mdp { .. } => PedestrianSource::Mdp,
            Self::Scripted(_) => PedestrianSource::Scripted,
            Self::External { .. } => PedestrianSource::External,
        }
    }

    /// Replaces the held input. Ignored by non-external models.
    pub fn set_input(&mut self, input: ExternalInput) -> bool {
        match self {
            Self::External { latest } => {
                *latest = input;
                true
            }
            _ => false,
        }
    }

    /// Speed and intention to hold over `[t, t + dt]`.
    pub fn command(
        &mut self,
        t: f64,
        ped: &PedestrianState,
        veh: &VehicleState,
        dt: f64,
    ) -> PedestrianCommand {
        let cmd = match self {
            Self::Sfm { params, d_ca } => sfm::sfm_step(ped, veh, params, *d_ca, dt),
            Self::Mdp {
                model,
                next_decision,
            } => {
                if t + 1e-9 >= *next_decision {
                    *next_decision = t + model.model.grid.step_dt;
                    mdp::mdp_step(ped, veh, model)
                } else {
                    PedestrianCommand {
                        source: PedestrianSource::Mdp,
                        v_ped_next: ped.v,
                        i_ped_next: ped.i,
                    }
                }
            }
            Self::Scripted(script) => {
                let (v, i) = script.sample(t);
                PedestrianCommand {
                    source: PedestrianSource::Scripted,
                    v_ped_next: v,
                    i_ped_next: i,
                }
            }
            Self::External { latest } => PedestrianCommand {
                source: PedestrianSource::External,
                v_ped_next: latest.v_ped,
                i_ped_next: latest.i_ped,
            },
        };
        PedestrianCommand {
            v_ped_next: cmd.v_ped_next.clamp(0.0, V_PED_MAX),
            i_ped_next: cmd.i_ped_next.clamp(0.0, 1.0),
            ..cmd
        }
    }
}
