//! Least-squares adaptation of the pedestrian models to observed trajectories.
//!
//! Trajectories are CSV files with the columns `traj_id,t,d_ped,v_ped,label`.
//! A model is rolled out from each trajectory's first sample against a
//! reference vehicle chosen by the label, and the squared velocity residual
//! is minimized by a bounded compass (pattern) search.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::decision::{DecisionParams, VehicleState};
use crate::engine::{self, vehicle_step};
use crate::error::{Error, Result};
use crate::pedestrian::{
    CrossingMdp, PedestrianConfig, PedestrianDriver, PedestrianSource, PedestrianState, SfmParams,
    SharedMdp, MDP_TOL,
};
use crate::tuner::Bound;

pub const CSV_HEADER: [&str; 5] = ["traj_id", "t", "d_ped", "v_ped", "label"];

/// Relative tolerance on sample spacing.
const DT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioLabel {
    CrossFirst,
    Yield,
}

impl ScenarioLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CrossFirst => "cross_first",
            Self::Yield => "yield",
        }
    }
}

impl std::str::FromStr for ScenarioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cross_first" => Ok(Self::CrossFirst),
            "yield" => Ok(Self::Yield),
            other => Err(Error::Validation(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub label: ScenarioLabel,
    pub dt: f64,
    pub t: Vec<f64>,
    pub d_ped: Vec<f64>,
    pub v_ped: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Checks ordering and uniform spacing, and fills in `dt`.
    fn finish(mut self) -> Result<Self> {
        if self.t.len() < 2 {
            return Err(Error::Validation(format!(
                "trajectory {:?} needs at least two samples",
                self.id
            )));
        }
        let dt = self.t[1] - self.t[0];
        for w in self.t.windows(2) {
            let step = w[1] - w[0];
            if step <= 0.0 {
                return Err(Error::Validation(format!(
                    "trajectory {:?} is not time-sorted at t = {}",
                    self.id, w[1]
                )));
            }
            if (step - dt).abs() > DT_REL_TOL * dt.max(1.0) {
                return Err(Error::Validation(format!(
                    "trajectory {:?} has non-uniform dt at t = {}",
                    self.id, w[1]
                )));
            }
        }
        self.dt = dt;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub trajectories: Vec<Trajectory>,
    pub source: String,
}

#[derive(Debug, Deserialize)]
struct Row {
    traj_id: String,
    t: f64,
    d_ped: f64,
    v_ped: f64,
    label: String,
}

impl TrajectoryDataset {
    pub fn n_samples(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    /// Parses CSV rows, grouping them by `traj_id` in order of first appearance.
    pub fn parse<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header_ok = match reader.headers() {
            Ok(h) => h.iter().eq(CSV_HEADER.iter().copied()),
            Err(_) => false,
        };
        if !header_ok {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {}", CSV_HEADER.join(",")),
            });
        }
        let mut groups: Vec<Trajectory> = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let label: ScenarioLabel = row.label.parse()?;
            for (name, v) in [("t", row.t), ("d_ped", row.d_ped), ("v_ped", row.v_ped)] {
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "trajectory {:?}: {name} is not finite",
                        row.traj_id
                    )));
                }
            }
            let slot = match groups.iter().position(|g| g.id == row.traj_id) {
                Some(k) => k,
                None => {
                    groups.push(Trajectory {
                        id: row.traj_id.clone(),
                        label,
                        dt: 0.0,
                        t: Vec::new(),
                        d_ped: Vec::new(),
                        v_ped: Vec::new(),
                    });
                    groups.len() - 1
                }
            };
            let g = &mut groups[slot];
            if g.label != label {
                return Err(Error::Validation(format!(
                    "trajectory {:?} mixes labels",
                    row.traj_id
                )));
            }
            g.t.push(row.t);
            g.d_ped.push(row.d_ped);
            g.v_ped.push(row.v_ped);
        }
        if groups.is_empty() {
            return Err(Error::Validation(format!("{source}: no trajectories")));
        }
        let trajectories = groups.into_iter().map(Trajectory::finish).collect::<Result<_>>()?;
        Ok(Self {
            trajectories,
            source: source.to_string(),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(CSV_HEADER).map_err(io)?;
        for tr in &self.trajectories {
            for k in 0..tr.len() {
                w.write_record([
                    tr.id.clone(),
                    tr.t[k].to_string(),
                    tr.d_ped[k].to_string(),
                    tr.v_ped[k].to_string(),
                    tr.label.as_str().to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_trajectories(path: &Path) -> Result<TrajectoryDataset> {
    let file = std::fs::File::open(path)?;
    TrajectoryDataset::parse(file, &path.display().to_string())
}

/// Open-loop vehicle the pedestrian reacts to during a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VehicleContext {
    Absent,
    /// Starts at `d_veh0` with `v_veh0` and brakes at a constant `decel` ≥ 0.
    Kinematic { d_veh0: f64, v_veh0: f64, decel: f64 },
}

impl VehicleContext {
    fn initial(&self) -> VehicleState {
        match *self {
            Self::Absent => VehicleState::new(f64::INFINITY, 0.0),
            Self::Kinematic { d_veh0, v_veh0, .. } => VehicleState::new(d_veh0, v_veh0),
        }
    }

    fn step(&self, veh: &VehicleState, dt: f64) -> VehicleState {
        match *self {
            Self::Absent => *veh,
            Self::Kinematic { decel, .. } => vehicle_step(veh, -decel, dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutContext {
    pub cross_first: VehicleContext,
    #[serde(rename = "yield")]
    pub yield_: VehicleContext,
    pub d_ca: f64,
}

impl Default for RolloutContext {
    fn default() -> Self {
        let v = DecisionParams::default().v_veh_d;
        Self {
            cross_first: VehicleContext::Kinematic {
                d_veh0: 40.0,
                v_veh0: v,
                decel: 1.2,
            },
            yield_: VehicleContext::Kinematic {
                d_veh0: 20.0,
                v_veh0: v,
                decel: 0.0,
            },
            d_ca: DecisionParams::default().d_ca,
        }
    }
}

impl RolloutContext {
    pub fn vehicle(&self, label: ScenarioLabel) -> VehicleContext {
        match label {
            ScenarioLabel::CrossFirst => self.cross_first,
            ScenarioLabel::Yield => self.yield_,
        }
    }

    /// The same vehicle absent for every label.
    pub fn absent() -> Self {
        Self {
            cross_first: VehicleContext::Absent,
            yield_: VehicleContext::Absent,
            ..Self::default()
        }
    }
}

/// Simulated pedestrian positions and speeds, `n` samples from `init`.
pub fn rollout(
    model: &PedestrianConfig,
    solved: Option<SharedMdp>,
    init: PedestrianState,
    vehicle: &VehicleContext,
    d_ca: f64,
    dt: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut driver = PedestrianDriver::new(model, &init, d_ca, solved)?;
    let mut ped = init;
    let mut veh = vehicle.initial();
    let mut d = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        d.push(ped.d);
        v.push(ped.v);
        if k + 1 == n {
            break;
        }
        let cmd = driver.command(k as f64 * dt, &ped, &veh, dt);
        ped.v = cmd.v_ped_next;
        ped.i = cmd.i_ped_next;
        ped.d += ped.v * dt;
        veh = vehicle.step(&veh, dt);
    }
    Ok((d, v))
}

/// Residual sum of squares of the model's speed against every sample.
pub fn velocity_rss(
    dataset: &TrajectoryDataset,
    model: &PedestrianConfig,
    solved: Option<SharedMdp>,
    ctx: &RolloutContext,
) -> Result<f64> {
    let mut rss = 0.0;
    for tr in &dataset.trajectories {
        let init = PedestrianState {
            d: tr.d_ped[0],
            v: tr.v_ped[0],
            i: 0.0,
        };
        let (_, v) = rollout(model, solved.clone(), init, &ctx.vehicle(tr.label), ctx.d_ca, tr.dt, tr.len())?;
        rss += v.iter().zip(&tr.v_ped).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(rss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSearchConfig {
    /// Times the step is re-expanded from the incumbent after converging.
    pub restarts: usize,
    /// Initial step as a fraction of each bound's width.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evals: usize,
}

impl Default for PatternSearchConfig {
    fn default() -> Self {
        Self {
            restarts: 7,
            initial_step: 0.25,
            min_step: 1e-9,
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub cost: f64,
    pub evals: usize,
}

/// Bounded compass search in coordinates normalized to the unit box.
///
/// Each poll evaluates all `2n` neighbours in parallel and moves to the best
/// strict improvement (lowest index on ties); a successful poll doubles the
/// step, a failed one halves it. Never returns a worse cost than `x0`.
pub fn pattern_search<F>(cost: F, x0: &[f64], bounds: &[Bound], cfg: &PatternSearchConfig) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if x0.len() != bounds.len() || x0.is_empty() {
        return Err(Error::Contract("start point and bounds differ in length".into()));
    }
    for b in bounds {
        if !(b.low.is_finite() && b.high.is_finite() && b.low < b.high) {
            return Err(Error::Config(format!("invalid bound [{}, {}]", b.low, b.high)));
        }
    }
    let to_x = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(bounds)
            .map(|(&u, b)| b.low + u * (b.high - b.low))
            .collect()
    };
    let mut u: Vec<f64> = x0
        .iter()
        .zip(bounds)
        .map(|(&x, b)| ((x - b.low) / (b.high - b.low)).clamp(0.0, 1.0))
        .collect();
    // Normalizing may perturb the start in the last bits; the caller's point
    // is kept as a candidate so the result is never worse than it.
    let mut best_x = x0.to_vec();
    let mut best = cost(x0);
    let mut evals = 1;
    let mut current = if to_x(&u) == best_x {
        best
    } else {
        evals += 1;
        cost(&to_x(&u))
    };
    if current < best {
        best = current;
        best_x = to_x(&u);
    }
    let n = u.len();
    for _ in 0..=cfg.restarts {
        let mut step = cfg.initial_step;
        while step >= cfg.min_step && evals < cfg.max_evals {
            let polls: Vec<Vec<f64>> = (0..2 * n)
                .map(|k| {
                    let mut p = u.clone();
                    let dir = if k % 2 == 0 { 1.0 } else { -1.0 };
                    p[k / 2] = (p[k / 2] + dir * step).clamp(0.0, 1.0);
                    p
                })
                .collect();
            let costs: Vec<f64> = polls.par_iter().map(|p| cost(&to_x(p))).collect();
            evals += costs.len();
            let mut pick = None;
            for (k, &c) in costs.iter().enumerate() {
                if c < current && pick.is_none_or(|j: usize| c < costs[j]) {
                    pick = Some(k);
                }
            }
            match pick {
                Some(k) => {
                    u = polls[k].clone();
                    current = costs[k];
                    step = (step * 2.0).min(cfg.initial_step);
                }
                None => step *= 0.5,
            }
            if current < best {
                best = current;
                best_x = to_x(&u);
            }
        }
    }
    Ok(SearchResult {
        x: best_x,
        cost: best,
        evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfmBounds {
    pub v0: Bound,
    pub tau: Bound,
    pub a_veh: Bound,
    pub b_veh: Bound,
}

impl Default for SfmBounds {
    fn default() -> Self {
        Self {
            v0: Bound::new(0.3, 2.5),
            tau: Bound::new(0.1, 3.0),
            a_veh: Bound::new(0.0, 100.0),
            b_veh: Bound::new(0.2, 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardBounds {
    pub goal: Bound,
    pub proximity: Bound,
    pub step_cost: Bound,
}

impl Default for RewardBounds {
    fn default() -> Self {
        Self {
            goal: Bound::new(0.0, 50.0),
            proximity: Bound::new(0.0, 200.0),
            step_cost: Bound::new(0.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(default)]
    pub context: RolloutContext,
    #[serde(default)]
    pub search: PatternSearchConfig,
    #[serde(default)]
    pub sfm_bounds: SfmBounds,
    #[serde(default)]
    pub reward_bounds: RewardBounds,
}

fn require_samples(dataset: &TrajectoryDataset) -> Result<()> {
    if dataset.n_samples() == 0 {
        return Err(Error::Contract("calibration needs a non-empty dataset".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfmFit {
    pub params: SfmParams,
    pub rss: f64,
    pub init_rss: f64,
}

pub fn fit_sfm(dataset: &TrajectoryDataset, init: &SfmParams, cfg: &CalibrationConfig) -> Result<SfmFit> {
    require_samples(dataset)?;
    init.validate()?;
    let eval = |x: &[f64]| -> f64 {
        let params = init.with_vector(&[x[0], x[1], x[2], x[3]]);
        if params.validate().is_err() {
            return f64::INFINITY;
        }
        let model = PedestrianConfig {
            sfm: params,
            ..PedestrianConfig::with_model(PedestrianSource::Sfm)
        };
        velocity_rss(dataset, &model, None, &cfg.context).unwrap_or(f64::INFINITY)
    };
    let b = &cfg.sfm_bounds;
    let result = pattern_search(eval, &init.as_vector(), &[b.v0, b.tau, b.a_veh, b.b_veh], &cfg.search)?;
    let x = &result.x;
    Ok(SfmFit {
        params: init.with_vector(&[x[0], x[1], x[2], x[3]]),
        rss: result.cost,
        init_rss: eval(&init.as_vector()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpFit {
    pub model: CrossingMdp,
    pub rss: f64,
    pub init_rss: f64,
}

/// Fits the reward coefficients; the grid of `template` stays fixed.
pub fn fit_mdp(dataset: &TrajectoryDataset, template: &CrossingMdp, cfg: &CalibrationConfig) -> Result<MdpFit> {
    require_samples(dataset)?;
    template.grid.validate()?;
    let candidate = |x: &[f64]| CrossingMdp {
        grid: template.grid,
        rewards: template.rewards.with_vector(&[x[0], x[1], x[2]]),
    };
    let eval = |x: &[f64]| -> f64 {
        let model = candidate(x);
        let Ok(solved) = model.solve(MDP_TOL) else {
            return f64::INFINITY;
        };
        let cfg_model = PedestrianConfig {
            mdp: model,
            ..PedestrianConfig::with_model(PedestrianSource::Mdp)
        };
        velocity_rss(dataset, &cfg_model, Some(SharedMdp::new(solved)), &cfg.context).unwrap_or(f64::INFINITY)
    };
    let b = &cfg.reward_bounds;
    let x0 = template.rewards.as_vector();
    let result = pattern_search(eval, &x0, &[b.goal, b.proximity, b.step_cost], &cfg.search)?;
    Ok(MdpFit {
        model: candidate(&result.x),
        rss: result.cost,
        init_rss: eval(&x0),
    })
}

/// Rolls `model` out for each label from a shared start and packages the result.
pub fn generate_reference(
    model: &PedestrianConfig,
    start: PedestrianState,
    ctx: &RolloutContext,
    dt: f64,
    n: usize,
) -> Result<TrajectoryDataset> {
    let solved = match model.model {
        PedestrianSource::Mdp => Some(SharedMdp::new(model.mdp.solve(MDP_TOL)?)),
        _ => None,
    };
    let mut trajectories = Vec::new();
    for label in [ScenarioLabel::CrossFirst, ScenarioLabel::Yield] {
        let (d, v) = rollout(model, solved.clone(), start, &ctx.vehicle(label), ctx.d_ca, dt, n)?;
        trajectories.push(Trajectory {
            id: format!("{}_{}", model_name(model.model), label.as_str()),
            label,
            dt,
            t: (0..n).map(|k| k as f64 * dt).collect(),
            d_ped: d,
            v_ped: v,
        });
    }
    Ok(TrajectoryDataset {
        trajectories,
        source: "generated".into(),
    })
}

fn model_name(source: PedestrianSource) -> &'static str {
    match source {
        PedestrianSource::Sfm => "sfm",
        PedestrianSource::Mdp => "mdp",
        PedestrianSource::Scripted => "scripted",
        PedestrianSource::External => "external",
    }
}

/// Pedestrian start shared by the generated model references.
pub const REFERENCE_START: PedestrianState = PedestrianState {
    d: -6.0,
    v: 1.2,
    i: 0.0,
};
pub const REFERENCE_DT: f64 = 0.01;
pub const REFERENCE_SAMPLES: usize = 600;

/// The first `samples` ticks of a simulated scenario as a single trajectory.
pub fn trajectory_from_scenario(
    cfg: &ScenarioConfig,
    id: &str,
    label: ScenarioLabel,
    samples: usize,
) -> Result<Trajectory> {
    let trace = engine::run(cfg)?;
    if trace.records.len() < samples {
        return Err(Error::Contract(format!(
            "scenario ran {} ticks, {samples} requested",
            trace.records.len()
        )));
    }
    let records = &trace.records[..samples];
    Ok(Trajectory {
        id: id.to_string(),
        label,
        dt: cfg.dt,
        t: records.iter().map(|r| r.t).collect(),
        d_ped: records.iter().map(|r| r.d_ped).collect(),
        v_ped: records.iter().map(|r| r.v_ped).collect(),
    })
}

/// Named reference datasets shipped under `data/reference`.
pub fn reference_datasets() -> Result<Vec<(&'static str, TrajectoryDataset)>> {
    let scenario = trajectory_from_scenario(
        &crate::scenarios::scenario_normal(),
        "scenario_normal",
        ScenarioLabel::CrossFirst,
        REFERENCE_SAMPLES,
    )?;
    let ctx = RolloutContext::default();
    let sfm = generate_reference(
        &PedestrianConfig::with_model(PedestrianSource::Sfm),
        REFERENCE_START,
        &ctx,
        REFERENCE_DT,
        REFERENCE_SAMPLES,
    )?;
    let mdp = generate_reference(
        &PedestrianConfig::with_model(PedestrianSource::Mdp),
        REFERENCE_START,
        &ctx,
        REFERENCE_DT,
        REFERENCE_SAMPLES,
    )?;
    Ok(vec![
        (
            "scenario_normal.csv",
            TrajectoryDataset {
                trajectories: vec![scenario],
                source: "generated".into(),
            },
        ),
        ("sfm_reference.csv", sfm),
        ("mdp_reference.csv", mdp),
    ])
}

/// Writes the reference datasets into `dir`.
pub fn write_reference_files(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, data) in reference_datasets()? {
        data.write_csv(std::fs::File::create(dir.join(name))?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_make_one_trajectory() {
        let csv = "traj_id,t,d_ped,v_ped,label\na,0,-5,1,yield\na,0.1,-4.9,1,yield\n";
        let d = TrajectoryDataset::parse(csv.as_bytes(), "mem").unwrap();
        assert_eq!(d.trajectories.len(), 1);
        assert_eq!(d.trajectories[0].len(), 2);
        assert!((d.trajectories[0].dt - 0.1).abs() < 1e-12);
    }

    #[test]
    fn decreasing_time_rejected() {
        let csv = "traj_id,t,d_ped,v_ped,label\na,0.1,-5,1,yield\na,0,-4.9,1,yield\n";
        assert!(matches!(
            TrajectoryDataset::parse(csv.as_bytes(), "mem"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn non_uniform_dt_rejected() {
        let csv = "traj_id,t,d_ped,v_ped,label\na,0,-5,1,yield\na,0.1,-4.9,1,yield\na,0.3,-4.7,1,yield\n";
        assert!(matches!(
            TrajectoryDataset::parse(csv.as_bytes(), "mem"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "traj_id,t,d_ped,v_ped,label\na,0,-5,1,yield\na,zero,-4.9,1,yield\n";
        match TrajectoryDataset::parse(csv.as_bytes(), "mem") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_headerless_inputs_rejected() {
        assert!(TrajectoryDataset::parse("".as_bytes(), "mem").is_err());
        assert!(matches!(
            TrajectoryDataset::parse("traj_id,t,d_ped,v_ped,label\n".as_bytes(), "mem"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            TrajectoryDataset::parse("a,b\n1,2\n".as_bytes(), "mem"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn pattern_search_finds_quadratic_minimum() {
        let bounds = [Bound::new(-5.0, 5.0), Bound::new(-5.0, 5.0)];
        let f = |x: &[f64]| (x[0] - 1.25).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let r = pattern_search(f, &[4.0, 4.0], &bounds, &PatternSearchConfig::default()).unwrap();
        assert!(r.cost < 1e-12, "{r:?}");
    }

    #[test]
    fn pattern_search_never_worse_than_start() {
        let bounds = [Bound::new(0.0, 1.0)];
        let r = pattern_search(|_| 1.0, &[0.3], &bounds, &PatternSearchConfig::default()).unwrap();
        assert_eq!(r.x, vec![0.3]);
        assert_eq!(r.cost, 1.0);
    }

    #[test]
    fn empty_dataset_is_a_contract_error() {
        let d = TrajectoryDataset {
            trajectories: vec![],
            source: "mem".into(),
        };
        assert!(matches!(
            fit_sfm(&d, &SfmParams::default(), &CalibrationConfig::default()),
            Err(Error::Contract(_))
        ));
    }
}
