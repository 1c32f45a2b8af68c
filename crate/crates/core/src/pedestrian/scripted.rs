use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Breakpoint times closer than this to the query time count as reached.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    pub t: f64,
    pub v_ped: f64,
    pub i_ped: f64,
}

impl Breakpoint {
    pub fn new(t: f64, v_ped: f64, i_ped: f64) -> Self {
        Self { t, v_ped, i_ped }
    }
}

/// Piecewise-constant pedestrian speed and intention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Script {
    breakpoints: Vec<Breakpoint>,
}

impl Script {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        let script = Self { breakpoints };
        script.validate()?;
        Ok(script)
    }

    pub fn constant(v_ped: f64, i_ped: f64) -> Self {
        Self {
            breakpoints: vec![Breakpoint::new(0.0, v_ped, i_ped)],
        }
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() {
            return Err(Error::Config("script must have at least one breakpoint".into()));
        }
        for w in self.breakpoints.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Config(format!(
                    "script breakpoints must be strictly increasing in t ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        for b in &self.breakpoints {
            if !b.t.is_finite() || !b.v_ped.is_finite() {
                return Err(Error::Config("script values must be finite".into()));
            }
            if !(0.0..=1.0).contains(&b.i_ped) {
                return Err(Error::Config(format!(
                    "script intention {} outside [0, 1]",
                    b.i_ped
                )));
            }
        }
        Ok(())
    }

    /// `(v_ped, i_ped)` of the latest breakpoint at or before `t`; the first
    /// breakpoint before the script starts.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        let idx = self
            .breakpoints
            .partition_point(|b| b.t <= t + TIME_EPS)
            .saturating_sub(1);
        let b = self.breakpoints[idx];
        (b.v_ped, b.i_ped)
    }
}
