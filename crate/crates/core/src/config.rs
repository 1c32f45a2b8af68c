//! Scenario configuration, stored as TOML.
//!
//! Any field can be overridden from the command line with dotted keys, e.g.
//! `decision.k_disc=0` or `pedestrian.model="sfm"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decision::{DecisionParams, SafeCrossConfig};
use crate::error::{Error, Result};
use crate::pedestrian::{PedestrianConfig, PedestrianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Road length the vehicle must cover past the conflict point, m.
    pub l_corridor: f64,
    /// Full crossing length; the pedestrian has crossed at half of it, m.
    pub crossing_length: f64,
    /// Safety factor of the gap test.
    pub sigma: f64,
    /// Speed floor for standing pedestrians in the gap test, m/s.
    pub v_ped_floor: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        let s = SafeCrossConfig::default();
        Self {
            l_corridor: s.l_corridor,
            crossing_length: 6.0,
            sigma: s.sigma,
            v_ped_floor: s.v_ped_floor,
        }
    }
}

impl Geometry {
    pub fn safe_cross(&self) -> SafeCrossConfig {
        SafeCrossConfig {
            l_corridor: self.l_corridor,
            sigma: self.sigma,
            v_ped_floor: self.v_ped_floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleInit {
    pub d_veh0: f64,
    pub v_veh0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianInit {
    pub d_ped0: f64,
    pub v_ped0: f64,
    pub i_ped0: f64,
}

impl PedestrianInit {
    pub fn state(&self) -> PedestrianState {
        PedestrianState {
            d: self.d_ped0,
            v: self.v_ped0,
            i: self.i_ped0,
        }
    }
}

fn default_dt() -> f64 {
    0.01
}
fn default_t_max() -> f64 {
    60.0
}
fn default_run_out() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Simulated time kept after the interaction ends, s.
    #[serde(default = "default_run_out")]
    pub run_out: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geometry: Geometry,
    pub vehicle: VehicleInit,
    pub pedestrian_init: PedestrianInit,
    pub pedestrian: PedestrianConfig,
    #[serde(default)]
    pub decision: DecisionParams,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.run_out >= 0.0 && self.run_out.is_finite()) {
            return bad(format!("run_out must be non-negative, got {}", self.run_out));
        }
        if !(self.vehicle.d_veh0 > 0.0 && self.vehicle.d_veh0.is_finite()) {
            return bad(format!("d_veh0 must be positive, got {}", self.vehicle.d_veh0));
        }
        if !(self.vehicle.v_veh0 >= 0.0 && self.vehicle.v_veh0.is_finite()) {
            return bad(format!("v_veh0 must be non-negative, got {}", self.vehicle.v_veh0));
        }
        let p = &self.pedestrian_init;
        if !p.d_ped0.is_finite() || !p.v_ped0.is_finite() || !(0.0..=1.0).contains(&p.i_ped0) {
            return bad(format!("invalid pedestrian initial state {p:?}"));
        }
        let g = &self.geometry;
        if !(g.l_corridor > 0.0 && g.sigma > 1.0 && g.v_ped_floor > 0.0) {
            return bad(format!("invalid geometry {g:?}"));
        }
        self.decision.validate()?;
        if g.crossing_length / 2.0 <= self.decision.d_ca {
            return bad(format!(
                "half the crossing length ({}) must exceed d_ca ({})",
                g.crossing_length / 2.0,
                self.decision.d_ca
            ));
        }
        self.pedestrian.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides to it.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

/// Applies one `dotted.key=value` override. The value is parsed as a TOML
/// value and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override {item:?} has an empty key")));
    }
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path {key:?} crosses a non-table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Parameter file as written by the tuner and read back by `--params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub decision: DecisionParams,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<DecisionParams> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let file: ParamsFile = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        file.decision.validate()?;
        Ok(file.decision)
    }

    pub fn to_toml_string(params: &DecisionParams) -> String {
        toml::to_string(&ParamsFile { decision: *params }).expect("params serialize")
    }
}
