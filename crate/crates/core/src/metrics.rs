//! Populations, trace distances and their time averages.
//!
//! None of these clip or normalize: approximate states may have norm other
//! than one and populations above one.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::exact::Trajectory;
use crate::schedule::Schedule;
use crate::state::State2;
use crate::twolevel::TwoLevelProblem;
use crate::C64;

/// `|psi|^2`.
pub fn pop_marked(state: &State2) -> f64 {
    state.psi.norm_sqr()
}

/// `1/2 || v v^dag - w w^dag ||_1` for possibly unnormalized `v`, `w`.
///
/// The difference has eigenvalues `lambda_pm` with
/// `lambda_+ + lambda_- = |v|^2 - |w|^2` and
/// `lambda_+ lambda_- = -(|v|^2 |w|^2 - |<v,w>|^2)`, so the trace norm is
/// `sqrt((|v|^2 - |w|^2)^2 + 4 |v_1 w_2 - v_2 w_1|^2)`; the Lagrange identity
/// for the Gram determinant avoids cancellation for nearly equal states.
pub fn trace_distance(v: &State2, w: &State2) -> f64 {
    let a = v.norm_sqr();
    let b = w.norm_sqr();
    let cross = (v.psi * w.phi - v.phi * w.psi).norm_sqr();
    0.5 * ((a - b).powi(2) + 4.0 * cross).sqrt()
}

/// Instantaneous ground state of `H(r)`.
pub fn adiabatic_state(problem: &TwoLevelProblem, r: f64) -> Result<State2> {
    check_unit("r", r)?;
    let v = problem.eigensystem(r)?.v_gs;
    Ok(State2::new(C64::new(v[0], 0.0), C64::new(v[1], 0.0)))
}

pub fn adiabatic_trajectory(schedule: &Schedule, t_f: f64, grid: &[f64]) -> Result<Trajectory> {
    crate::exact::validate_grid(grid)?;
    let states = grid
        .iter()
        .map(|&r| adiabatic_state(schedule.problem(), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::from_states(schedule, t_f, grid, states))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub r: f64,
    pub s: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub rows: Vec<DistanceRow>,
    /// `(1/t_f) int_0^{t_f} D dt = int_0^1 D(r) g(r) dr`.
    pub average: f64,
}

/// Composite Simpson rule on an arbitrary increasing grid; an odd number of
/// intervals closes with one trapezoid.
pub fn simpson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (h0, h1) = (xs[i + 1] - xs[i], xs[i + 2] - xs[i + 1]);
        let hs = h0 + h1;
        total += hs / 6.0
            * (ys[i] * (2.0 - h1 / h0) + ys[i + 1] * hs * hs / (h0 * h1) + ys[i + 2] * (2.0 - h0 / h1));
        i += 2;
    }
    if i + 1 < n {
        total += 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
    }
    total
}

pub fn distance_series(a: &Trajectory, b: &Trajectory, schedule: &Schedule) -> Result<DistanceSeries> {
    if a.rows.len() != b.rows.len() || a.rows.iter().zip(&b.rows).any(|(x, y)| x.r != y.r) {
        return Err(Error::GridMismatch);
    }
    let rows: Vec<DistanceRow> = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| DistanceRow { r: x.r, s: x.s, distance: trace_distance(&x.state, &y.state) })
        .collect();
    let rs: Vec<f64> = rows.iter().map(|row| row.r).collect();
    let weighted: Vec<f64> = rows.iter().map(|row| row.distance * schedule.g_at(row.r)).collect();
    let average = simpson(&rs, &weighted);
    Ok(DistanceSeries { rows, average })
}

pub fn time_avg_distance(a: &Trajectory, b: &Trajectory, schedule: &Schedule) -> Result<f64> {
    Ok(distance_series(a, b, schedule)?.average)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::uniform_grid;
    use approx::assert_abs_diff_eq;

    fn st(a: (f64, f64), b: (f64, f64)) -> State2 {
        State2::new(C64::new(a.0, a.1), C64::new(b.0, b.1))
    }

    #[test]
    fn population_examples() {
        let init = TwoLevelProblem::new(2).unwrap().initial_state();
        assert_abs_diff_eq!(pop_marked(&init), 0.25, epsilon = 1e-15);
        assert_eq!(pop_marked(&st((1.0, 0.0), (0.0, 0.0))), 1.0);
        assert_eq!(pop_marked(&st((1.2, 0.0), (0.0, 0.0))), 1.44);
    }

    #[test]
    fn trace_distance_examples() {
        let v = st((0.3, -0.2), (0.1, 0.9));
        assert_eq!(trace_distance(&v, &v), 0.0);
        assert_abs_diff_eq!(trace_distance(&st((1.0, 0.0), (0.0, 0.0)), &st((0.0, 0.0), (1.0, 0.0))), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&st((1.0, 0.0), (0.0, 0.0)), &st((0.0, 0.0), (0.5, 0.0))), 0.625, epsilon = 1e-15);
    }

    #[test]
    fn adiabatic_examples() {
        let p = TwoLevelProblem::new(1).unwrap();
        let end = adiabatic_state(&p, 1.0).unwrap();
        assert_abs_diff_eq!(end.psi.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(end.phi.re, 0.0, epsilon = 1e-15);
        let start = adiabatic_state(&p, 0.0).unwrap();
        assert_abs_diff_eq!((start.psi - p.initial_state().psi).norm(), 0.0, epsilon = 1e-15);
        let mid = pop_marked(&adiabatic_state(&p, 0.5).unwrap());
        assert!(mid > 0.5 && mid < 1.0);
    }

    #[test]
    fn simpson_is_exact_for_quadratics_on_uneven_grids() {
        let xs = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0, 1.3];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 3.0 * x * x).collect();
        let xs6 = &xs[..5];
        let exact = |b: f64| b - b * b + b * b * b;
        assert_abs_diff_eq!(simpson(xs6, &ys[..5]), exact(0.9), epsilon = 1e-14);
        assert!((simpson(&xs, &ys) - exact(1.3)).abs() < 1e-2);
    }

    #[test]
    fn average_of_constant_distance_is_the_constant() {
        let s = Schedule::new(TwoLevelProblem::new(3).unwrap(), 2).unwrap();
        let grid = uniform_grid(2001).unwrap();
        let a = Trajectory::from_states(&s, 1.0, &grid, vec![st((1.0, 0.0), (0.0, 0.0)); grid.len()]);
        let b = Trajectory::from_states(&s, 1.0, &grid, vec![st((0.6, 0.0), (0.8, 0.0)); grid.len()]);
        let d = trace_distance(&a.rows[0].state, &b.rows[0].state);
        assert_abs_diff_eq!(time_avg_distance(&a, &b, &s).unwrap(), d, epsilon = 1e-8);
        assert_eq!(time_avg_distance(&a, &a, &s).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let s = Schedule::new(TwoLevelProblem::new(1).unwrap(), 0).unwrap();
        let a = adiabatic_trajectory(&s, 1.0, &uniform_grid(11).unwrap()).unwrap();
        let b = adiabatic_trajectory(&s, 1.0, &uniform_grid(12).unwrap()).unwrap();
        assert_eq!(time_avg_distance(&a, &b, &s), Err(Error::GridMismatch));
    }
}
