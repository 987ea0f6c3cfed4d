//! Reference evolution of `i eps d/dr chi = g(r) H(r) chi` with `eps = 1/t_f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{solve_ode, OdeSpec};
use crate::schedule::Schedule;
use crate::state::State2;
use crate::C64;

/// Default number of uniformly spaced `r` samples for trajectories.
pub const DEFAULT_GRID_POINTS: usize = 501;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub r: f64,
    pub s: f64,
    pub state: State2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub schedule: Schedule,
    pub t_f: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn from_states(schedule: &Schedule, t_f: f64, grid: &[f64], states: Vec<State2>) -> Self {
        let rows = grid
            .iter()
            .zip(states)
            .map(|(&r, state)| TrajectoryRow { r, s: schedule.s_at(r), state })
            .collect();
        Self { schedule: *schedule, t_f, rows }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|row| row.r).collect()
    }
}

pub fn uniform_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidInput("a grid needs at least two points".into()));
    }
    let m = (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { 1.0 } else { i as f64 / m }).collect())
}

/// Checks that a grid is strictly increasing from exactly 0 to exactly 1.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
        return Err(Error::InvalidInput("grid must start at 0 and end at 1".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn check_tf(t_f: f64) -> Result<()> {
    if t_f > 0.0 && t_f.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "t_f", value: t_f })
    }
}

fn propagate(schedule: &Schedule, t_f: f64, spec: &OdeSpec, output: &[f64]) -> Result<Vec<State2>> {
    check_tf(t_f)?;
    let problem = *schedule.problem();
    let y0 = problem.initial_state().to_array();
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |r: f64, y: &[C64; 2]| {
        let h = problem.hamiltonian_at(r);
        let c = minus_i * (t_f * schedule.g_at(r));
        [c * (y[0] * h[0][0] + y[1] * h[0][1]), c * (y[0] * h[1][0] + y[1] * h[1][1])]
    };
    let out = solve_ode(rhs, y0, (0.0, 1.0), spec, output)?;
    Ok(out.into_iter().map(State2::from_array).collect())
}

pub fn evolve_exact(schedule: &Schedule, t_f: f64, grid: &[f64], spec: &OdeSpec) -> Result<Trajectory> {
    validate_grid(grid)?;
    let states = propagate(schedule, t_f, spec, grid)?;
    Ok(Trajectory::from_states(schedule, t_f, grid, states))
}

/// State at `r = 1` only; cheaper than a full trajectory.
pub fn final_state_exact(schedule: &Schedule, t_f: f64, spec: &OdeSpec) -> Result<State2> {
    Ok(propagate(schedule, t_f, spec, &[1.0])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twolevel::TwoLevelProblem;
    use approx::assert_abs_diff_eq;

    fn sched(n: u32, alpha: u8) -> Schedule {
        Schedule::new(TwoLevelProblem::new(n).unwrap(), alpha).unwrap()
    }

    #[test]
    fn first_row_is_initial_state() {
        let s = sched(3, 2);
        let traj = evolve_exact(&s, 7.0, &uniform_grid(11).unwrap(), &OdeSpec::default()).unwrap();
        assert_eq!(traj.rows[0].state, s.problem().initial_state());
        assert_eq!(traj.rows[0].s, 0.0);
        assert_abs_diff_eq!(traj.rows[10].s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn norm_is_preserved() {
        for alpha in 0..4 {
            let s = sched(1, alpha);
            let traj = evolve_exact(&s, 50.0, &uniform_grid(101).unwrap(), &OdeSpec::default()).unwrap();
            for row in &traj.rows {
                assert_abs_diff_eq!(row.state.norm(), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn final_state_matches_trajectory_end() {
        let s = sched(4, 1);
        let spec = OdeSpec::default();
        let traj = evolve_exact(&s, 30.0, &uniform_grid(21).unwrap(), &spec).unwrap();
        let fin = final_state_exact(&s, 30.0, &spec).unwrap();
        let last = traj.rows.last().unwrap().state;
        assert_abs_diff_eq!((fin.psi - last.psi).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((fin.phi - last.phi).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = sched(2, 0);
        let spec = OdeSpec::default();
        assert!(evolve_exact(&s, -1.0, &[0.0, 1.0], &spec).is_err());
        assert!(evolve_exact(&s, 1.0, &[0.0, 0.5], &spec).is_err());
        assert!(evolve_exact(&s, 1.0, &[0.0, 0.6, 0.4, 1.0], &spec).is_err());
    }
}
