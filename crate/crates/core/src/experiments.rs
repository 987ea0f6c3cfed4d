//! Sweeps over `t_f` and `n`: final populations, threshold times, scaling
//! fits and trajectory comparisons for every solver backend.
//!
//! Independent cells run on the rayon pool; results are collected in input
//! order, so output does not depend on the number of workers.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{evolve_exact, final_state_exact, uniform_grid, Trajectory};
use crate::hj::{assemble_hj, HjOrder, HjProfile};
use crate::metrics::{adiabatic_state, adiabatic_trajectory, distance_series, pop_marked};
use crate::numerics::{fit_line, LineFit, OdeSpec};
use crate::schedule::Schedule;
use crate::state::State2;
use crate::twolevel::TwoLevelProblem;
use crate::wkb::{assemble, WkbOrder, WkbProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Wkb0,
    Wkb1,
    Rwkb0,
    Hj0,
    Hj1,
    Adiabatic,
}

impl Backend {
    pub const ALL: [Backend; 7] =
        [Backend::Exact, Backend::Wkb0, Backend::Wkb1, Backend::Rwkb0, Backend::Hj0, Backend::Hj1, Backend::Adiabatic];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Wkb0 => "wkb0",
            Backend::Wkb1 => "wkb1",
            Backend::Rwkb0 => "rwkb0",
            Backend::Hj0 => "hj0",
            Backend::Hj1 => "hj1",
            Backend::Adiabatic => "adiabatic",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown backend '{s}'")))
    }
}

/// Solver settings shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub ode: OdeSpec,
    pub grid_points: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { ode: OdeSpec::default(), grid_points: crate::exact::DEFAULT_GRID_POINTS }
    }
}

enum Engine {
    Exact(OdeSpec),
    Wkb(Arc<WkbProfile>, WkbOrder, bool),
    Hj(Arc<HjProfile>, HjOrder),
    Adiabatic,
}

/// A backend bound to one schedule, with its `t_f`-independent data cached.
pub struct Model {
    schedule: Schedule,
    backend: Backend,
    engine: Engine,
}

impl Model {
    pub fn new(schedule: Schedule, backend: Backend, settings: &SolverSettings) -> Self {
        let wkb = |order, renorm| Engine::Wkb(Arc::new(WkbProfile::new(schedule)), order, renorm);
        let hj = |order| Engine::Hj(Arc::new(HjProfile::new(schedule)), order);
        let engine = match backend {
            Backend::Exact => Engine::Exact(settings.ode),
            Backend::Wkb0 => wkb(WkbOrder::Zeroth, false),
            Backend::Wkb1 => wkb(WkbOrder::First, false),
            Backend::Rwkb0 => wkb(WkbOrder::Zeroth, true),
            Backend::Hj0 => hj(HjOrder::Zeroth),
            Backend::Hj1 => hj(HjOrder::First),
            Backend::Adiabatic => Engine::Adiabatic,
        };
        Self { schedule, backend, engine }
    }

    pub fn for_problem(n: u32, alpha: u8, backend: Backend, settings: &SolverSettings) -> Result<Self> {
        let schedule = Schedule::new(TwoLevelProblem::new(n)?, alpha)?;
        Ok(Self::new(schedule, backend, settings))
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn final_state(&self, t_f: f64) -> Result<State2> {
        crate::exact::check_tf(t_f)?;
        match &self.engine {
            Engine::Exact(spec) => final_state_exact(&self.schedule, t_f, spec),
            Engine::Wkb(profile, order, renorm) => {
                let sol = assemble(profile, t_f, *order)?;
                let sol = if *renorm { sol.renormalized() } else { sol };
                sol.evaluate(1.0)
            }
            Engine::Hj(profile, order) => assemble_hj(profile, t_f, *order)?.evaluate(1.0),
            Engine::Adiabatic => adiabatic_state(self.schedule.problem(), 1.0),
        }
    }

    /// Final marked-state population `p_GS(t_f)`.
    pub fn p_gs(&self, t_f: f64) -> Result<f64> {
        Ok(pop_marked(&self.final_state(t_f)?))
    }

    pub fn trajectory(&self, t_f: f64, grid: &[f64]) -> Result<Trajectory> {
        match &self.engine {
            Engine::Exact(spec) => evolve_exact(&self.schedule, t_f, grid, spec),
            Engine::Wkb(profile, order, renorm) => {
                let sol = assemble(profile, t_f, *order)?;
                let sol = if *renorm { sol.renormalized() } else { sol };
                sol.trajectory(grid)
            }
            Engine::Hj(profile, order) => assemble_hj(profile, t_f, *order)?.trajectory(grid),
            Engine::Adiabatic => {
                crate::exact::check_tf(t_f)?;
                adiabatic_trajectory(&self.schedule, t_f, grid)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgsRow {
    pub t_f: f64,
    pub p_gs: Option<f64>,
    /// `None` on success, otherwise the error message for this row.
    pub error: Option<String>,
}

pub fn pgs_vs_tf(model: &Model, t_fs: &[f64]) -> Vec<PgsRow> {
    t_fs.par_iter()
        .map(|&t_f| match model.p_gs(t_f) {
            Ok(p) => PgsRow { t_f, p_gs: Some(p), error: None },
            Err(e) => PgsRow { t_f, p_gs: None, error: Some(e.to_string()) },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub p_th: f64,
    /// First point of the geometric `t_f` grid.
    pub t_min: f64,
    /// Scan budget: no grid point beyond this is evaluated.
    pub t_max: f64,
    pub ratio: f64,
    /// The candidate must stay above `p_th` up to this multiple of itself.
    pub horizon_factor: f64,
    /// Bisection stops when `hi / lo - 1` is below this.
    pub rel_width: f64,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self { p_th: 0.95, t_min: 1e-2, t_max: 1e6, ratio: 1.05, horizon_factor: 3.0, rel_width: 1e-3 }
    }
}

impl ThresholdSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_th > 0.0
            && self.p_th < 1.0
            && self.t_min > 0.0
            && self.t_max > self.t_min
            && self.ratio > 1.0
            && self.horizon_factor >= 1.0
            && self.rel_width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("threshold settings out of range".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStatus {
    /// Last crossing found and verified up to the horizon.
    Converged,
    /// The scan budget ran out before the horizon could be verified.
    NonMonotoneTail,
    /// Already above `p_th` at the first grid point.
    BelowScanFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub n: u32,
    pub alpha: u8,
    pub backend: Backend,
    pub p_th: f64,
    pub t_f_th: f64,
    pub horizon_factor: f64,
    pub spec: ThresholdSpec,
    pub status: ThresholdStatus,
    pub evaluations: usize,
}

/// Grid points evaluated together; fixed so results do not depend on the
/// size of the worker pool.
const SCAN_CHUNK: usize = 16;

/// Smallest `t_f` beyond which `p_GS` stays above `p_th`, located as the last
/// down-crossing on a geometric grid and refined by bisection.
pub fn threshold_time(model: &Model, spec: &ThresholdSpec) -> Result<ThresholdResult> {
    spec.validate()?;
    let t_at = |k: usize| spec.t_min * spec.ratio.powi(k as i32);
    let mut last_bad: Option<usize> = None;
    let mut any_above = false;
    let mut evaluations = 0;
    let mut verified = false;
    let mut k0 = 0;
    'scan: loop {
        let ks: Vec<usize> = (k0..k0 + SCAN_CHUNK).take_while(|&k| t_at(k) <= spec.t_max).collect();
        if ks.is_empty() {
            break;
        }
        let ps = ks.par_iter().map(|&k| model.p_gs(t_at(k))).collect::<Result<Vec<_>>>()?;
        for (&k, &p) in ks.iter().zip(&ps) {
            evaluations += 1;
            if p > spec.p_th {
                any_above = true;
                let candidate = last_bad.map_or(0, |b| b + 1);
                if t_at(k) >= spec.horizon_factor * t_at(candidate) {
                    verified = true;
                    break 'scan;
                }
            } else {
                last_bad = Some(k);
            }
        }
        k0 += SCAN_CHUNK;
    }
    if !any_above || last_bad.is_some_and(|b| t_at(b + 1) > spec.t_max) {
        return Err(Error::NotReached { t_max: spec.t_max });
    }
    let (t_f_th, status) = match last_bad {
        None => (spec.t_min, ThresholdStatus::BelowScanFloor),
        Some(b) => {
            let (mut lo, mut hi) = (t_at(b), t_at(b + 1));
            while hi / lo - 1.0 > spec.rel_width {
                let mid = (lo * hi).sqrt();
                evaluations += 1;
                if model.p_gs(mid)? > spec.p_th {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (hi, if verified { ThresholdStatus::Converged } else { ThresholdStatus::NonMonotoneTail })
        }
    };
    let schedule = model.schedule();
    Ok(ThresholdResult {
        n: schedule.problem().n(),
        alpha: schedule.alpha(),
        backend: model.backend(),
        p_th: spec.p_th,
        t_f_th,
        horizon_factor: spec.horizon_factor,
        spec: *spec,
        status,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub alpha: u8,
    pub backend: Backend,
    pub ns: Vec<u32>,
    pub t_f_ths: Vec<f64>,
    pub thresholds: Vec<ThresholdResult>,
    /// Line through `(n, log2 t_f_th)`; the slope is `c` in `O(2^{c n})`.
    pub fit: LineFit,
}

pub fn scaling_fit(
    alpha: u8,
    backend: Backend,
    ns: &[u32],
    spec: &ThresholdSpec,
    settings: &SolverSettings,
) -> Result<ScalingResult> {
    if ns.len() < 3 {
        return Err(Error::InvalidInput("a scaling fit needs at least three problem sizes".into()));
    }
    let thresholds = ns
        .par_iter()
        .map(|&n| threshold_time(&Model::for_problem(n, alpha, backend, settings)?, spec))
        .collect::<Result<Vec<_>>>()?;
    let t_f_ths: Vec<f64> = thresholds.iter().map(|t| t.t_f_th).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = t_f_ths.iter().map(|t| t.log2()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(ScalingResult { alpha, backend, ns: ns.to_vec(), t_f_ths, thresholds, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub backend: Backend,
    pub r: f64,
    pub s: f64,
    pub state: State2,
    pub pop_marked: f64,
    pub norm: f64,
    pub trace_dist_vs_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n: u32,
    pub alpha: u8,
    pub t_f: f64,
    pub backends: Vec<Backend>,
    /// Backend-major: all grid points of the first backend, then the next.
    pub rows: Vec<CompareRow>,
    /// Time-averaged trace distance to the exact trajectory, per backend.
    pub averages: Vec<f64>,
}

/// Samples each backend on a shared uniform grid and measures it against
/// the exact trajectory, which is always computed as the reference.
pub fn compare_trajectories(
    n: u32,
    alpha: u8,
    t_f: f64,
    backends: &[Backend],
    settings: &SolverSettings,
) -> Result<Comparison> {
    if backends.is_empty() {
        return Err(Error::InvalidInput("no backends requested".into()));
    }
    let schedule = Schedule::new(TwoLevelProblem::new(n)?, alpha)?;
    let grid = uniform_grid(settings.grid_points)?;
    let exact = evolve_exact(&schedule, t_f, &grid, &settings.ode)?;
    let trajectories = backends
        .par_iter()
        .map(|&b| match b {
            Backend::Exact => Ok(exact.clone()),
            _ => Model::new(schedule, b, settings).trajectory(t_f, &grid),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(backends.len() * grid.len());
    let mut averages = Vec::with_capacity(backends.len());
    for (&backend, traj) in backends.iter().zip(&trajectories) {
        let series = distance_series(traj, &exact, &schedule)?;
        averages.push(series.average);
        for (row, d) in traj.rows.iter().zip(&series.rows) {
            rows.push(CompareRow {
                backend,
                r: row.r,
                s: row.s,
                state: row.state,
                pop_marked: pop_marked(&row.state),
                norm: row.state.norm(),
                trace_dist_vs_exact: d.distance,
            });
        }
    }
    Ok(Comparison { n, alpha, t_f, backends: backends.to_vec(), rows, averages })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_names_round_trip() {
        for b in Backend::ALL {
            assert_eq!(b.name().parse::<Backend>().unwrap(), b);
        }
        assert!("wkb2".parse::<Backend>().is_err());
    }

    #[test]
    fn exact_populations_are_probabilities() {
        let model = Model::for_problem(3, 1, Backend::Exact, &SolverSettings::default()).unwrap();
        for row in pgs_vs_tf(&model, &[0.5, 3.0, 20.0, 80.0]) {
            let p = row.p_gs.unwrap();
            assert!((0.0..=1.0 + 1e-9).contains(&p));
        }
    }

    #[test]
    fn failing_rows_are_marked() {
        let model = Model::for_problem(2, 0, Backend::Wkb0, &SolverSettings::default()).unwrap();
        let rows = pgs_vs_tf(&model, &[10.0, -1.0]);
        assert!(rows[0].error.is_none());
        assert!(rows[1].p_gs.is_none() && rows[1].error.is_some());
    }

    #[test]
    fn threshold_for_single_qubit() {
        let model = Model::for_problem(1, 0, Backend::Exact, &SolverSettings::default()).unwrap();
        let res = threshold_time(&model, &ThresholdSpec::default()).unwrap();
        assert_eq!(res.status, ThresholdStatus::Converged);
        assert!(res.t_f_th.is_finite() && res.t_f_th > 0.0);
        let spec = ThresholdSpec::default();
        assert!(model.p_gs(res.t_f_th * 1.01).unwrap() > spec.p_th || model.p_gs(res.t_f_th * 1.2).unwrap() > spec.p_th);
    }

    #[test]
    fn adiabatic_backend_is_always_above() {
        let model = Model::for_problem(4, 2, Backend::Adiabatic, &SolverSettings::default()).unwrap();
        let res = threshold_time(&model, &ThresholdSpec::default()).unwrap();
        assert_eq!(res.status, ThresholdStatus::BelowScanFloor);
        assert_eq!(res.t_f_th, ThresholdSpec::default().t_min);
    }

    #[test]
    fn unreachable_threshold_is_reported() {
        let model = Model::for_problem(6, 0, Backend::Exact, &SolverSettings::default()).unwrap();
        let spec = ThresholdSpec { t_max: 5.0, ..ThresholdSpec::default() };
        assert!(matches!(threshold_time(&model, &spec), Err(Error::NotReached { .. })));
    }

    #[test]
    fn comparison_rows_are_backend_major() {
        let settings = SolverSettings { grid_points: 21, ..SolverSettings::default() };
        let cmp = compare_trajectories(1, 0, 10.0, &[Backend::Adiabatic, Backend::Exact], &settings).unwrap();
        assert_eq!(cmp.rows.len(), 42);
        assert!(cmp.rows[..21].iter().all(|r| r.backend == Backend::Adiabatic));
        assert!(cmp.rows[21..].iter().all(|r| r.trace_dist_vs_exact == 0.0));
        assert_eq!(cmp.averages[1], 0.0);
        assert!(compare_trajectories(1, 0, 10.0, &[], &settings).is_err());
    }
}
