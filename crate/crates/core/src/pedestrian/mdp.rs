//! Markov decision process pedestrian.
//!
//! [`Mdp`] is a small generic finite MDP with a value-iteration solver.
//! [`CrossingMdp`] builds one over (position, speed, vehicle time gap) and
//! its solved policy drives the simulated pedestrian.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decision::VehicleState;
use crate::error::{Error, Result};

use super::{PedestrianCommand, PedestrianSource, PedestrianState};

/// Values closer than this are treated as equal when picking the greedy action.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    /// Successor distribution per `state * n_actions + action`.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Immediate reward per `state * n_actions + action`.
    pub rewards: Vec<f64>,
    /// Terminal states carry a fixed value and are never backed up.
    pub terminal: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    /// Max-norm Bellman residual after each sweep.
    pub residuals: Vec<f64>,
}

impl Mdp {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states * self.n_actions;
        if self.transitions.len() != n || self.rewards.len() != n {
            return Err(Error::Config("transition/reward tables have the wrong size".into()));
        }
        if self.terminal.len() != self.n_states {
            return Err(Error::Config("terminal table has the wrong size".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("rewards must be finite".into()));
        }
        for row in &self.transitions {
            let mass: f64 = row.iter().map(|&(_, p)| p).sum();
            if row.iter().any(|&(s, p)| s >= self.n_states || p < 0.0) || (mass - 1.0).abs() > 1e-9 {
                return Err(Error::Config("transition rows must be distributions over states".into()));
            }
        }
        Ok(())
    }

    fn q_value(&self, values: &[f64], s: usize, a: usize) -> f64 {
        let idx = s * self.n_actions + a;
        let future: f64 = self.transitions[idx].iter().map(|&(s2, p)| p * values[s2]).sum();
        self.rewards[idx] + self.gamma * future
    }

    /// Greedy action, ties going to the lowest action index.
    fn greedy(&self, values: &[f64], s: usize) -> (usize, f64) {
        let mut best = (0, self.q_value(values, s, 0));
        for a in 1..self.n_actions {
            let q = self.q_value(values, s, a);
            if q > best.1 + TIE_EPS {
                best = (a, q);
            }
        }
        best
    }

    /// Value iteration until the max-norm residual drops below `tol`.
    pub fn solve(&self, tol: f64, max_iters: usize) -> Result<MdpSolution> {
        self.validate()?;
        let mut values: Vec<f64> = self.terminal.iter().map(|t| t.unwrap_or(0.0)).collect();
        let mut residuals = Vec::new();
        for _ in 0..max_iters {
            let next: Vec<f64> = (0..self.n_states)
                .map(|s| match self.terminal[s] {
                    Some(v) => v,
                    None => self.greedy(&values, s).1,
                })
                .collect();
            let residual = next
                .iter()
                .zip(&values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            values = next;
            residuals.push(residual);
            if residual < tol {
                let policy = (0..self.n_states).map(|s| self.greedy(&values, s).0).collect();
                return Ok(MdpSolution {
                    values,
                    policy,
                    residuals,
                });
            }
        }
        Err(Error::Solver(format!(
            "value iteration did not reach tolerance {tol} within {max_iters} sweeps"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PedAction {
    Accelerate,
    Hold,
    Decelerate,
    Wait,
}

impl PedAction {
    /// Fixed order, which is also the tie-break order.
    pub const ALL: [PedAction; 4] = [
        PedAction::Accelerate,
        PedAction::Hold,
        PedAction::Decelerate,
        PedAction::Wait,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpGrid {
    /// Position of the first bin, m.
    pub d_first: f64,
    /// Position spacing between bins, m.
    pub d_spacing: f64,
    pub n_positions: usize,
    /// Speed increment per action, m/s; speed bins are `0, dv, .., (n-1)·dv`.
    pub dv: f64,
    pub n_speeds: usize,
    /// Time-gap bin centres in seconds; one extra "far" bin follows them.
    pub gap_centers: [f64; 4],
    /// Gaps at or above this are "far", s.
    pub gap_far: f64,
    /// Seconds between pedestrian decisions.
    pub step_dt: f64,
    /// Reaching this position ends the crossing, m.
    pub goal_d: f64,
    /// Collision-area radius used by the proximity penalty, m.
    pub d_ca: f64,
    /// Distance past the conflict point at which the vehicle has cleared the crossing, m.
    pub l_corridor: f64,
}

impl Default for MdpGrid {
    fn default() -> Self {
        Self {
            d_first: -8.4,
            d_spacing: 0.6,
            n_positions: 20,
            dv: 0.5,
            n_speeds: 5,
            gap_centers: [0.5, 1.5, 2.5, 3.5],
            gap_far: 4.0,
            step_dt: 0.5,
            goal_d: 3.0,
            d_ca: 2.0,
            l_corridor: 4.0,
        }
    }
}

impl MdpGrid {
    pub const N_GAPS: usize = 5;
    pub const FAR: usize = 4;

    pub fn n_states(&self) -> usize {
        self.n_positions * self.n_speeds * Self::N_GAPS
    }

    pub fn index(&self, pos: usize, speed: usize, gap: usize) -> usize {
        (pos * self.n_speeds + speed) * Self::N_GAPS + gap
    }

    pub fn unindex(&self, s: usize) -> (usize, usize, usize) {
        let gap = s % Self::N_GAPS;
        let rest = s / Self::N_GAPS;
        (rest / self.n_speeds, rest % self.n_speeds, gap)
    }

    pub fn position(&self, pos: usize) -> f64 {
        self.d_first + self.d_spacing * pos as f64
    }

    pub fn speed(&self, speed: usize) -> f64 {
        self.dv * speed as f64
    }

    pub fn is_goal(&self, pos: usize) -> bool {
        self.position(pos) >= self.goal_d - 1e-9
    }

    /// Nearest bin on a uniform grid, exact midpoints going to the lower index.
    fn nearest(value: f64, first: f64, spacing: f64, n: usize) -> usize {
        let x = ((value - first) / spacing).clamp(0.0, (n - 1) as f64);
        let lo = x.floor();
        // Midpoints within rounding noise count as ties.
        let idx = if x - lo > 0.5 + 1e-9 { lo + 1.0 } else { lo };
        (idx as usize).min(n - 1)
    }

    pub fn position_bin(&self, d: f64) -> usize {
        Self::nearest(d, self.d_first, self.d_spacing, self.n_positions)
    }

    pub fn speed_bin(&self, v: f64) -> usize {
        Self::nearest(v, 0.0, self.dv, self.n_speeds)
    }

    pub fn gap_bin(&self, gap: f64) -> usize {
        if !gap.is_finite() || gap >= self.gap_far {
            return Self::FAR;
        }
        let c = &self.gap_centers;
        let spacing = c[1] - c[0];
        Self::nearest(gap, c[0], spacing, c.len())
    }

    /// Linear interpolation weights of `value` over a uniform grid (clamped).
    fn interpolate(value: f64, first: f64, spacing: f64, n: usize) -> [(usize, f64); 2] {
        let x = ((value - first) / spacing).clamp(0.0, (n - 1) as f64);
        let lo = x.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let w = x - lo as f64;
        [(lo, 1.0 - w), (hi, w)]
    }

    fn next_gaps(&self, gap: usize) -> [(usize, f64); 2] {
        if gap == Self::FAR {
            return [(Self::FAR, 1.0), (Self::FAR, 0.0)];
        }
        let g = self.gap_centers[gap] - self.step_dt;
        if g <= 0.0 {
            return [(Self::FAR, 1.0), (Self::FAR, 0.0)];
        }
        let c = &self.gap_centers;
        Self::interpolate(g, c[0], c[1] - c[0], c.len())
    }

    fn apply(&self, speed: usize, action: PedAction) -> usize {
        match action {
            PedAction::Accelerate => (speed + 1).min(self.n_speeds - 1),
            PedAction::Hold => speed,
            PedAction::Decelerate => speed.saturating_sub(1),
            PedAction::Wait => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n_positions >= 2
            && self.n_speeds >= 2
            && self.d_spacing > 0.0
            && self.dv > 0.0
            && self.step_dt > 0.0
            && self.d_ca > 0.0
            && self.l_corridor >= 0.0
            && self.gap_centers.windows(2).all(|w| w[1] > w[0])
            && self.gap_far > self.gap_centers[3];
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid MDP grid: {self:?}")))
        }
    }
}

/// Reward coefficients of the crossing MDP; these are what calibration fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpRewards {
    pub goal: f64,
    /// Penalty for being inside the collision area while the vehicle gap is short.
    pub proximity: f64,
    pub step_cost: f64,
    /// Gaps below this count as short, s.
    pub short_gap: f64,
    pub gamma: f64,
}

impl Default for MdpRewards {
    fn default() -> Self {
        Self {
            goal: 10.0,
            proximity: 50.0,
            step_cost: 0.1,
            short_gap: 1.0,
            gamma: 0.95,
        }
    }
}

impl MdpRewards {
    pub fn as_vector(&self) -> [f64; 3] {
        [self.goal, self.proximity, self.step_cost]
    }

    pub fn with_vector(&self, x: &[f64; 3]) -> Self {
        Self {
            goal: x[0],
            proximity: x[1],
            step_cost: x[2],
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingMdp {
    #[serde(default)]
    pub grid: MdpGrid,
    #[serde(default)]
    pub rewards: MdpRewards,
}

impl CrossingMdp {
    pub fn build(&self) -> Result<Mdp> {
        let g = &self.grid;
        g.validate()?;
        let n_actions = PedAction::ALL.len();
        let n = g.n_states();
        let mut transitions = Vec::with_capacity(n * n_actions);
        let mut rewards = Vec::with_capacity(n * n_actions);
        let mut terminal = vec![None; n];
        let short = |gap: usize| gap != MdpGrid::FAR && g.gap_centers[gap] < self.rewards.short_gap;

        for s in 0..n {
            let (pos, speed, gap) = g.unindex(s);
            if g.is_goal(pos) {
                terminal[s] = Some(0.0);
            }
            for action in PedAction::ALL {
                let speed2 = g.apply(speed, action);
                let d2 = g.position(pos) + g.speed(speed2) * g.step_dt;
                let positions =
                    MdpGrid::interpolate(d2, g.d_first, g.d_spacing, g.n_positions);
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(4);
                let mut reward = -self.rewards.step_cost;
                for &(p2, wp) in &positions {
                    for &(gap2, wg) in &g.next_gaps(gap) {
                        let w = wp * wg;
                        if w == 0.0 {
                            continue;
                        }
                        let s2 = g.index(p2, speed2, gap2);
                        match row.iter_mut().find(|(t, _)| *t == s2) {
                            Some(e) => e.1 += w,
                            None => row.push((s2, w)),
                        }
                        if g.is_goal(p2) {
                            reward += w * self.rewards.goal;
                        }
                        if g.position(p2).abs() < g.d_ca && (short(gap) || short(gap2)) {
                            reward -= w * self.rewards.proximity;
                        }
                    }
                }
                transitions.push(row);
                rewards.push(reward);
            }
        }
        Ok(Mdp {
            n_states: n,
            n_actions,
            gamma: self.rewards.gamma,
            transitions,
            rewards,
            terminal,
        })
    }

    pub fn solve(&self, tol: f64) -> Result<SolvedCrossingMdp> {
        let solution = self.build()?.solve(tol, 10_000)?;
        let mut policy: Vec<PedAction> =
            solution.policy.iter().map(|&a| PedAction::ALL[a]).collect();
        for (s, action) in policy.iter_mut().enumerate() {
            if self.grid.is_goal(self.grid.unindex(s).0) {
                *action = PedAction::Wait;
            }
        }
        Ok(SolvedCrossingMdp {
            model: *self,
            values: solution.values,
            policy,
            residuals: solution.residuals,
        })
    }
}

/// Solved crossing MDP; immutable, shared across simulations via `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedCrossingMdp {
    pub model: CrossingMdp,
    pub values: Vec<f64>,
    pub policy: Vec<PedAction>,
    pub residuals: Vec<f64>,
}

pub type SharedMdp = Arc<SolvedCrossingMdp>;

/// Time until the vehicle front reaches the conflict point: zero while the
/// vehicle occupies the crossing, infinite once it has cleared it or when it
/// is (nearly) standing.
pub fn vehicle_time_gap(veh: &VehicleState, l_corridor: f64) -> f64 {
    if veh.d_veh < -l_corridor || veh.v_veh < 0.1 {
        f64::INFINITY
    } else {
        veh.d_veh.max(0.0) / veh.v_veh
    }
}

impl SolvedCrossingMdp {
    pub fn state_of(&self, ped: &PedestrianState, veh: &VehicleState) -> usize {
        let g = &self.model.grid;
        let mut pos = g.position_bin(ped.d);
        // Rounding into the goal bin does not count as arriving.
        if g.is_goal(pos) && ped.d < g.goal_d && pos > 0 {
            pos -= 1;
        }
        g.index(
            pos,
            g.speed_bin(ped.v),
            g.gap_bin(vehicle_time_gap(veh, g.l_corridor)),
        )
    }

    pub fn action(&self, ped: &PedestrianState, veh: &VehicleState) -> PedAction {
        if ped.d >= self.model.grid.goal_d {
            return PedAction::Wait;
        }
        self.policy[self.state_of(ped, veh)]
    }
}

/// One pedestrian decision: discretize, look up the policy, apply the speed change.
pub fn mdp_step(
    ped: &PedestrianState,
    veh: &VehicleState,
    model: &SolvedCrossingMdp,
) -> PedestrianCommand {
    let g = &model.model.grid;
    let action = model.action(ped, veh);
    let speed = g.apply(g.speed_bin(ped.v), action);
    PedestrianCommand {
        source: PedestrianSource::Mdp,
        v_ped_next: g.speed(speed),
        i_ped_next: ped.i,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_goal() -> Mdp {
        // state 1 is an absorbing goal worth 1; state 0 moves there under every action
        Mdp {
            n_states: 2,
            n_actions: 2,
            gamma: 0.9,
            transitions: vec![vec![(1, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)]],
            rewards: vec![0.0; 4],
            terminal: vec![None, Some(1.0)],
        }
    }

    #[test]
    fn one_step_backup() {
        let sol = two_state_goal().solve(1e-12, 100).unwrap();
        assert!((sol.values[0] - 0.9).abs() < 1e-12);
        assert_eq!(sol.values[1], 1.0);
    }

    #[test]
    fn zero_rewards_give_zero_values_and_first_action() {
        let mdp = Mdp {
            n_states: 3,
            n_actions: 3,
            gamma: 0.9,
            transitions: (0..9).map(|k| vec![((k + 1) % 3, 1.0)]).collect(),
            rewards: vec![0.0; 9],
            terminal: vec![None; 3],
        };
        let sol = mdp.solve(1e-9, 100).unwrap();
        assert!(sol.values.iter().all(|&v| v == 0.0));
        assert!(sol.policy.iter().all(|&a| a == 0));
    }

    #[test]
    fn non_convergence_is_a_solver_error() {
        let mut mdp = two_state_goal();
        mdp.gamma = 0.999;
        mdp.terminal = vec![None, None];
        mdp.rewards = vec![1.0; 4];
        assert!(matches!(mdp.solve(1e-12, 5), Err(Error::Solver(_))));
    }

    #[test]
    fn rejects_bad_gamma() {
        let mut mdp = two_state_goal();
        mdp.gamma = 1.0;
        assert!(mdp.solve(1e-6, 10).is_err());
    }

    #[test]
    fn nearest_bin_ties_go_low() {
        let g = MdpGrid::default();
        // midway between -8.4 and -7.8
        assert_eq!(g.position_bin(-8.1), 0);
        assert_eq!(g.position_bin(-8.09), 1);
        assert_eq!(g.speed_bin(0.25), 0);
        assert_eq!(g.speed_bin(0.26), 1);
        assert_eq!(g.gap_bin(1.0), 0);
        assert_eq!(g.gap_bin(4.0), MdpGrid::FAR);
        assert_eq!(g.position_bin(-100.0), 0);
        assert_eq!(g.position_bin(100.0), g.n_positions - 1);
    }

    #[test]
    fn crossing_mdp_rows_are_distributions() {
        let mdp = CrossingMdp::default().build().unwrap();
        mdp.validate().unwrap();
        assert_eq!(mdp.n_states, 20 * 5 * 5);
    }

    #[test]
    fn goal_cell_waits() {
        let solved = CrossingMdp::default().solve(1e-9).unwrap();
        let ped = PedestrianState { d: 3.0, v: 1.0, i: 0.5 };
        let cmd = mdp_step(&ped, &VehicleState::new(30.0, 8.0), &solved);
        assert_eq!(cmd.v_ped_next, 0.0);
    }

    #[test]
    fn walks_on_when_vehicle_far_and_waits_for_close_vehicle() {
        let solved = CrossingMdp::default().solve(1e-9).unwrap();
        let mid = PedestrianState { d: -0.6, v: 1.0, i: 0.5 };
        let far = VehicleState::new(100.0, 8.0);
        assert_eq!(solved.action(&mid, &far), PedAction::Accelerate);

        let curb = PedestrianState { d: -2.4, v: 0.0, i: 0.5 };
        let close = VehicleState::new(12.0, 8.0);
        assert_eq!(mdp_step(&curb, &close, &solved).v_ped_next, 0.0);
    }

    #[test]
    fn residuals_are_non_increasing() {
        let solved = CrossingMdp::default().solve(1e-10).unwrap();
        for w in solved.residuals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} then {}", w[0], w[1]);
        }
    }
}
