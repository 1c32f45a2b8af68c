//! Particle swarm design of the decision parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::decision::{discount_crossing_time, DecisionParams};
use crate::engine::{self, Trace};
use crate::error::{Error, Result};
use crate::pedestrian::{PedestrianSource, SharedMdp, MDP_TOL};

/// Added to a candidate's cost for every scenario that times out.
pub const P_DEADLOCK: f64 = 1e4;
/// Added for every scenario in which the vehicle drives through an occupied corridor.
pub const P_COLLISION: f64 = 1e4;
/// Lower bound on the time to collision when forming its inverse, s.
const TTC_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 1.0,
            k3: 5.0,
            k4: 0.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("k1", self.k1), ("k2", self.k2), ("k3", self.k3), ("k4", self.k4)] {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::Config(format!("weight {name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Per-tick integrand of the design objective.
///
/// `k1·t + k2·a_max(t)² − k3·|d_min| + k4/TTC(t)` where `a_max(t)` is the
/// running maximum of `|a_veh|` and `d_min` the smallest separation of the
/// whole run.
pub fn integrand(trace: &Trace, weights: &ObjectiveWeights, k_num: f64) -> Result<Vec<f64>> {
    if trace.records.is_empty() {
        return Err(Error::Contract("objective of an empty trace".into()));
    }
    let d_min = trace
        .records
        .iter()
        .map(|r| r.separation())
        .fold(f64::INFINITY, f64::min);
    let mut a_max: f64 = 0.0;
    Ok(trace
        .records
        .iter()
        .map(|r| {
            a_max = a_max.max(r.a_veh.abs());
            let mut value = weights.k1 * r.t + weights.k2 * a_max * a_max - weights.k3 * d_min.abs();
            if weights.k4 != 0.0 {
                value += weights.k4 / engine::ttc(r.d_veh, r.v_veh, k_num).max(TTC_FLOOR);
            }
            value
        })
        .collect())
}

/// Rectangle-rule integral of per-tick values.
pub fn integrate(values: &[f64], dt: f64) -> f64 {
    values.iter().sum::<f64>() * dt
}

pub fn objective(trace: &Trace, weights: &ObjectiveWeights, k_num: f64) -> Result<f64> {
    Ok(integrate(&integrand(trace, weights, k_num)?, trace.dt))
}

/// Scenarios plus their pre-solved MDPs, so candidates do not re-solve them.
#[derive(Debug, Clone)]
pub struct Suite {
    scenarios: Vec<ScenarioConfig>,
    mdps: Vec<Option<SharedMdp>>,
}

impl Suite {
    pub fn new(scenarios: Vec<ScenarioConfig>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Config("scenario suite is empty".into()));
        }
        let mut mdps: Vec<Option<SharedMdp>> = Vec::with_capacity(scenarios.len());
        for cfg in &scenarios {
            cfg.validate()?;
            let solved = if cfg.pedestrian.model == PedestrianSource::Mdp {
                let reuse = mdps.iter().flatten().find(|m| m.model == cfg.pedestrian.mdp).cloned();
                Some(match reuse {
                    Some(m) => m,
                    None => SharedMdp::new(cfg.pedestrian.mdp.solve(MDP_TOL)?),
                })
            } else {
                None
            };
            mdps.push(solved);
        }
        Ok(Self { scenarios, mdps })
    }

    pub fn scenarios(&self) -> &[ScenarioConfig] {
        &self.scenarios
    }

    /// Runs every scenario with `params` installed.
    pub fn run(&self, params: &DecisionParams) -> Result<Vec<Trace>> {
        self.scenarios
            .iter()
            .zip(&self.mdps)
            .map(|(cfg, mdp)| {
                let mut cfg = cfg.clone();
                cfg.decision = *params;
                engine::run_with_mdp(&cfg, mdp.clone())
            })
            .collect()
    }
}

/// Summed objective over the suite, with deadlock and collision penalties.
/// Invalid candidates and failed simulations cost `+∞`.
pub fn evaluate_params(candidate: &DecisionParams, suite: &Suite, weights: &ObjectiveWeights) -> f64 {
    if candidate.validate().is_err() {
        return f64::INFINITY;
    }
    let traces = match suite.run(candidate) {
        Ok(t) => t,
        Err(_) => return f64::INFINITY,
    };
    let mut cost = 0.0;
    let horizon = suite.scenarios.iter().map(|c| c.t_max).fold(f64::INFINITY, f64::min);
    if !discount_resolves_within(candidate, horizon) {
        cost += P_DEADLOCK;
    }
    for (trace, cfg) in traces.iter().zip(&suite.scenarios) {
        match objective(trace, weights, candidate.k_num) {
            Ok(j) => cost += j,
            Err(_) => return f64::INFINITY,
        }
        if trace.is_timeout() {
            cost += P_DEADLOCK;
        }
        if engine::corridor_violations(&trace.records, candidate.d_ca, cfg.geometry.l_corridor) > 0 {
            cost += P_COLLISION;
        }
    }
    cost
}

/// True when a stationary pedestrian holding full intention is discounted
/// below `i_ped_l` within `horizon` seconds; otherwise such a pedestrian
/// would deadlock the vehicle in any scenario of that length.
pub fn discount_resolves_within(params: &DecisionParams, horizon: f64) -> bool {
    discount_crossing_time(1.0, params.i_ped_l, params.k_disc).is_some_and(|t| t <= horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub low: f64,
    pub high: f64,
}

impl Bound {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }
}

/// Search box for the seven tuned parameters, keyed like [`DecisionParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBounds {
    pub i_ped_h: Bound,
    pub i_ped_l: Bound,
    pub v_ped_h: Bound,
    pub v_ped_l: Bound,
    pub k_veh_acc: Bound,
    pub k_veh_dec: Bound,
    pub k_disc: Bound,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            i_ped_h: Bound::new(0.3, 0.95),
            i_ped_l: Bound::new(0.05, 0.5),
            v_ped_h: Bound::new(1.0, 2.5),
            v_ped_l: Bound::new(-0.5, 0.5),
            k_veh_acc: Bound::new(0.4, 2.0),
            k_veh_dec: Bound::new(0.8, 3.0),
            k_disc: Bound::new(0.05, 1.5),
        }
    }
}

impl ParamBounds {
    pub fn as_array(&self) -> [Bound; 7] {
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
}

fn default_swarm() -> usize {
    30
}
fn default_iters() -> usize {
    100
}
fn default_w() -> f64 {
    0.7
}
fn default_c() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoConfig {
    #[serde(default = "default_swarm")]
    pub swarm_size: usize,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_w")]
    pub inertia: f64,
    #[serde(default = "default_c")]
    pub c1: f64,
    #[serde(default = "default_c")]
    pub c2: f64,
    #[serde(default)]
    pub bounds: ParamBounds,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: default_swarm(),
            max_iters: default_iters(),
            inertia: default_w(),
            c1: default_c(),
            c2: default_c(),
            bounds: ParamBounds::default(),
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config("swarm_size must be at least 2".into()));
        }
        validate_bounds(&self.bounds.as_array())?;
        for (name, v) in [("inertia", self.inertia), ("c1", self.c1), ("c2", self.c2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

fn validate_bounds(bounds: &[Bound]) -> Result<()> {
    for (k, b) in bounds.iter().enumerate() {
        if !(b.low.is_finite() && b.high.is_finite() && b.low < b.high) {
            return Err(Error::Config(format!(
                "bound {k} must satisfy low < high, got [{}, {}]",
                b.low, b.high
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    /// Global best cost after initialization and after every iteration.
    pub history: Vec<f64>,
}

/// Index of the smallest cost; the lowest index wins ties.
fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &c) in costs.iter().enumerate().skip(1) {
        if c < costs[best] {
            best = k;
        }
    }
    best
}

/// Global-best PSO over a box.
///
/// Random draws happen sequentially on the calling thread; only the cost
/// evaluations run in parallel, so results do not depend on scheduling.
pub fn pso_minimize<F>(
    swarm_size: usize,
    max_iters: usize,
    inertia: f64,
    c1: f64,
    c2: f64,
    bounds: &[Bound],
    seed: u64,
    cost: F,
) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if swarm_size == 0 {
        return Err(Error::Config("swarm must not be empty".into()));
    }
    validate_bounds(bounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = bounds.len();
    let v_max: Vec<f64> = bounds.iter().map(|b| b.high - b.low).collect();

    let positions: Vec<Vec<f64>> = (0..swarm_size)
        .map(|_| bounds.iter().map(|b| rng.gen_range(b.low..b.high)).collect())
        .collect();
    let costs: Vec<f64> = positions.par_iter().map(|x| cost(x)).collect();
    let mut swarm: Vec<Particle> = positions
        .into_iter()
        .zip(costs)
        .map(|(x, c)| Particle {
            velocity: vec![0.0; dim],
            best_position: x.clone(),
            position: x,
            best_cost: c,
        })
        .collect();

    let pbest_costs: Vec<f64> = swarm.iter().map(|p| p.best_cost).collect();
    let g = argmin(&pbest_costs);
    let mut gbest = swarm[g].best_position.clone();
    let mut gbest_cost = swarm[g].best_cost;
    let mut history = vec![gbest_cost];

    for _ in 0..max_iters {
        for p in swarm.iter_mut() {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = inertia * p.velocity[d]
                    + c1 * r1 * (p.best_position[d] - p.position[d])
                    + c2 * r2 * (gbest[d] - p.position[d]);
                p.velocity[d] = v.clamp(-v_max[d], v_max[d]);
                p.position[d] = (p.position[d] + p.velocity[d]).clamp(bounds[d].low, bounds[d].high);
            }
        }
        let costs: Vec<f64> = swarm.par_iter().map(|p| cost(&p.position)).collect();
        for (p, c) in swarm.iter_mut().zip(costs) {
            if c < p.best_cost {
                p.best_cost = c;
                p.best_position = p.position.clone();
            }
        }
        let pbest_costs: Vec<f64> = swarm.iter().map(|p| p.best_cost).collect();
        let g = argmin(&pbest_costs);
        if swarm[g].best_cost < gbest_cost {
            gbest_cost = swarm[g].best_cost;
            gbest = swarm[g].best_position.clone();
        }
        history.push(gbest_cost);
    }
    Ok(PsoResult {
        best_position: gbest,
        best_cost: gbest_cost,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_params: DecisionParams,
    pub best_cost: f64,
    pub baseline_cost: f64,
    pub history: Vec<f64>,
}

/// Designs the seven tuned parameters of `base` against `suite`.
pub fn pso_run(
    cfg: &PsoConfig,
    suite: &Suite,
    weights: &ObjectiveWeights,
    base: &DecisionParams,
) -> Result<TuneResult> {
    cfg.validate()?;
    weights.validate()?;
    let to_params = |x: &[f64]| {
        let arr: [f64; 7] = x.try_into().expect("seven tuned parameters");
        base.with_tuned(&arr)
    };
    let result = pso_minimize(
        cfg.swarm_size,
        cfg.max_iters,
        cfg.inertia,
        cfg.c1,
        cfg.c2,
        &cfg.bounds.as_array(),
        cfg.seed,
        |x| evaluate_params(&to_params(x), suite, weights),
    )?;
    Ok(TuneResult {
        best_params: to_params(&result.best_position),
        best_cost: result.best_cost,
        baseline_cost: evaluate_params(base, suite, weights),
        history: result.history,
    })
}

/// Tuning run description as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub weights: ObjectiveWeights,
    /// Scenario files forming the suite; empty selects the built-in suite.
    #[serde(default)]
    pub scenarios: Vec<std::path::PathBuf>,
}

impl TuningConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.pso.validate()?;
        cfg.weights.validate()?;
        Ok(cfg)
    }
}

/// Root-mean-square difference of two series; the shorter one is held at its
/// last value so both cover the longer run.
pub fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    if n == 0 {
        return 0.0;
    }
    let at = |x: &[f64], k: usize| x.get(k).or(x.last()).copied().unwrap_or(0.0);
    let sum: f64 = (0..n).map(|k| (at(a, k) - at(b, k)).powi(2)).sum();
    (sum / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    /// RMS difference of the vehicle speed traces, m/s.
    pub rms_v_veh: f64,
    pub timeout_a: bool,
    pub timeout_b: bool,
}

/// Runs two parameter sets on the same scenarios and compares the vehicle speed traces.
pub fn compare_designs(
    a: &DecisionParams,
    b: &DecisionParams,
    scenarios: &[ScenarioConfig],
) -> Result<Vec<ComparisonRow>> {
    scenarios
        .iter()
        .map(|cfg| {
            let run_with = |p: &DecisionParams| {
                let mut c = cfg.clone();
                c.decision = *p;
                engine::run(&c)
            };
            let (ta, tb) = (run_with(a)?, run_with(b)?);
            let speeds = |t: &Trace| t.records.iter().map(|r| r.v_veh).collect::<Vec<_>>();
            Ok(ComparisonRow {
                scenario: cfg.name.clone(),
                rms_v_veh: rms_difference(&speeds(&ta), &speeds(&tb)),
                timeout_a: ta.is_timeout(),
                timeout_b: tb.is_timeout(),
            })
        })
        .collect()
}
