//! Adiabatic expansion in `eps = 1/t_f` around the instantaneous ground
//! state of `g(r) H(r)`, truncated after one or two correction terms.
//!
//! With the ground state `v_gs = (cos theta, sin theta)` and
//! `v_gs' = theta' v_exc`:
//!
//! * `chi1(r) = i theta' / (g Delta) v_exc`
//! * `f1(r) = i int_0^r theta'^2 / (g Delta)`
//! * `chi2(r) = i / (g Delta) (f1 theta' + <v_exc, d chi1 / dr>) v_exc`
//!
//! and the states are `e^{-i t_f int g E_gs} (v_gs + eps chi1)` and
//! `e^{-i t_f int g E_gs} ((1 + eps f1) v_gs + eps chi1 + eps^2 chi2)`.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Result};
use crate::exact::{check_tf, validate_grid, Trajectory};
use crate::numerics::{integrate, QuadratureSpec};
use crate::schedule::Schedule;
use crate::state::State2;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const CACHE_INTERVALS: usize = 1024;

/// Step of the central difference for `d chi1 / dr`.
pub const DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HjOrder {
    Zeroth,
    First,
}

/// `chi1(r)`, orthogonal to the ground state.
pub fn hj_chi1_perp(schedule: &Schedule, r: f64) -> Result<[C64; 2]> {
    check_unit("r", r)?;
    Ok(chi1_at(schedule, r))
}

/// Scalar factor `i theta' / (g Delta)` of `chi1` along `v_exc`.
fn chi1_coefficient(schedule: &Schedule, r: f64) -> C64 {
    let p = schedule.problem();
    I * (p.eigen_angle_derivative_at(r) / (schedule.g_at(r) * p.gap_at(r)))
}

fn excited(theta: f64) -> [f64; 2] {
    [-theta.sin(), theta.cos()]
}

fn chi1_at(schedule: &Schedule, r: f64) -> [C64; 2] {
    let c = chi1_coefficient(schedule, r);
    let e = excited(schedule.problem().eigen_angle_at(r));
    [c * e[0], c * e[1]]
}

/// Cached ingredients of the expansion that do not depend on `t_f`.
pub struct HjProfile {
    schedule: Schedule,
    quadrature: QuadratureSpec,
    f1_nodes: OnceLock<Result<Vec<f64>>>,
}

impl std::fmt::Debug for HjProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HjProfile").field("schedule", &self.schedule).finish_non_exhaustive()
    }
}

impl HjProfile {
    pub const DEFAULT_QUADRATURE: QuadratureSpec =
        QuadratureSpec { abs_tol: 1e-13, rel_tol: 1e-13, max_subdivisions: 2000 };

    pub fn new(schedule: Schedule) -> Self {
        Self { schedule, quadrature: Self::DEFAULT_QUADRATURE, f1_nodes: OnceLock::new() }
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn f1_integrand(&self) -> impl Fn(f64) -> f64 + '_ {
        move |q| {
            let p = self.schedule.problem();
            let tp = p.eigen_angle_derivative_at(q);
            tp * tp / (self.schedule.g_at(q) * p.gap_at(q))
        }
    }

    fn nodes(&self) -> Result<&Vec<f64>> {
        self.f1_nodes
            .get_or_init(|| {
                let f = self.f1_integrand();
                let mut nodes = Vec::with_capacity(CACHE_INTERVALS + 1);
                nodes.push(0.0);
                let mut acc = 0.0;
                for j in 0..CACHE_INTERVALS {
                    let a = j as f64 / CACHE_INTERVALS as f64;
                    let b = (j + 1) as f64 / CACHE_INTERVALS as f64;
                    acc += integrate(&f, a, b, &self.quadrature)?.value;
                    nodes.push(acc);
                }
                Ok(nodes)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `f1(r)`; purely imaginary.
    pub fn f1(&self, r: f64) -> Result<C64> {
        check_unit("r", r)?;
        self.f1_at(r)
    }

    fn f1_at(&self, r: f64) -> Result<C64> {
        let nodes = self.nodes()?;
        let j = ((r * CACHE_INTERVALS as f64).floor() as usize).min(CACHE_INTERVALS - 1);
        let a = j as f64 / CACHE_INTERVALS as f64;
        let value = if r == a {
            nodes[j]
        } else if r == 1.0 {
            nodes[CACHE_INTERVALS]
        } else {
            nodes[j] + integrate(self.f1_integrand(), a, r, &self.quadrature)?.value
        };
        Ok(I * value)
    }

    pub fn chi1_perp(&self, r: f64) -> Result<[C64; 2]> {
        check_unit("r", r)?;
        Ok(chi1_at(&self.schedule, r))
    }

    /// `<v_exc(r), d chi1 / dr (r)>` by central differences with one
    /// Richardson step.
    pub fn chi1_derivative_projection(&self, r: f64) -> Result<C64> {
        check_unit("r", r)?;
        Ok(self.projection_at(r))
    }

    fn projection_at(&self, r: f64) -> C64 {
        let p = self.schedule.problem();
        let theta = p.eigen_angle_at(r);
        // <v_exc(r), v_exc(q)> = cos(theta(q) - theta(r)).
        let along = |q: f64| chi1_coefficient(&self.schedule, q) * (p.eigen_angle_at(q) - theta).cos();
        let central = |h: f64| (along(r + h) - along(r - h)) / (2.0 * h);
        let h = DERIVATIVE_STEP;
        (central(0.5 * h) * 4.0 - central(h)) / 3.0
    }

    pub fn chi2_perp(&self, r: f64) -> Result<[C64; 2]> {
        check_unit("r", r)?;
        self.chi2_at(r)
    }

    fn chi2_at(&self, r: f64) -> Result<[C64; 2]> {
        let p = self.schedule.problem();
        let theta = p.eigen_angle_at(r);
        let gd = self.schedule.g_at(r) * p.gap_at(r);
        let c = I / gd * (self.f1_at(r)? * p.eigen_angle_derivative_at(r) + self.projection_at(r));
        let e = excited(theta);
        Ok([c * e[0], c * e[1]])
    }
}

#[derive(Debug, Clone)]
pub struct HjSolution {
    profile: Arc<HjProfile>,
    order: HjOrder,
    t_f: f64,
}

pub fn assemble_hj(profile: &Arc<HjProfile>, t_f: f64, order: HjOrder) -> Result<HjSolution> {
    check_tf(t_f)?;
    Ok(HjSolution { profile: Arc::clone(profile), order, t_f })
}

impl HjSolution {
    pub fn order(&self) -> HjOrder {
        self.order
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn evaluate(&self, r: f64) -> Result<State2> {
        check_unit("r", r)?;
        let schedule = &self.profile.schedule;
        let p = schedule.problem();
        let eps = 1.0 / self.t_f;
        // int_0^r g E_gs = (s - int g Delta) / 2.
        let dynamical = 0.5 * (schedule.s_at(r) - schedule.gap_integral_at(r));
        let phase = (-I * (self.t_f * dynamical)).exp();
        let theta = p.eigen_angle_at(r);
        let gs = [theta.cos(), theta.sin()];
        let chi1 = chi1_at(schedule, r);
        let out: [C64; 2] = match self.order {
            HjOrder::Zeroth => std::array::from_fn(|i| phase * (chi1[i] * eps + gs[i])),
            HjOrder::First => {
                let f1 = self.profile.f1_at(r)?;
                let chi2 = self.profile.chi2_at(r)?;
                std::array::from_fn(|i| {
                    phase * ((f1 * eps + 1.0) * gs[i] + chi1[i] * eps + chi2[i] * (eps * eps))
                })
            }
        };
        Ok(State2::from_array(out))
    }

    pub fn trajectory(&self, grid: &[f64]) -> Result<Trajectory> {
        validate_grid(grid)?;
        let states = grid.iter().map(|&r| self.evaluate(r)).collect::<Result<Vec<_>>>()?;
        Ok(Trajectory::from_states(&self.profile.schedule, self.t_f, grid, states))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twolevel::TwoLevelProblem;
    use approx::assert_abs_diff_eq;

    fn sched(n: u32, alpha: u8) -> Schedule {
        Schedule::new(TwoLevelProblem::new(n).unwrap(), alpha).unwrap()
    }

    fn ground(s: &Schedule, r: f64) -> [f64; 2] {
        s.problem().eigensystem(r).unwrap().v_gs
    }

    fn overlap(v: [f64; 2], w: [C64; 2]) -> C64 {
        w[0] * v[0] + w[1] * v[1]
    }

    #[test]
    fn corrections_are_orthogonal_to_ground_state() {
        let s = sched(1, 0);
        let profile = HjProfile::new(s);
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            let gs = ground(&s, r);
            assert!(overlap(gs, hj_chi1_perp(&s, r).unwrap()).norm() < 1e-15);
            assert!(overlap(gs, profile.chi2_perp(r).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn chi1_at_midpoint() {
        let s = sched(1, 0);
        let chi = hj_chi1_perp(&s, 0.5).unwrap();
        let norm = (chi[0].norm_sqr() + chi[1].norm_sqr()).sqrt();
        let tp = s.problem().eigen_angle_derivative(0.5).unwrap();
        assert!(norm > 0.0 && norm.is_finite());
        assert_abs_diff_eq!(norm, tp.abs() / 0.5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn f1_is_imaginary_and_starts_at_zero() {
        let profile = HjProfile::new(sched(1, 0));
        assert_eq!(profile.f1(0.0).unwrap(), C64::new(0.0, 0.0));
        for i in 0..=20 {
            let f = profile.f1(i as f64 / 20.0).unwrap();
            assert_eq!(f.re, 0.0);
            assert!(f.im >= 0.0);
        }
        assert!(profile.f1(1.0).unwrap().im > 0.0);
    }

    #[test]
    fn zeroth_order_starts_near_initial_state() {
        let s = sched(2, 1);
        let profile = Arc::new(HjProfile::new(s));
        let sol = assemble_hj(&profile, 40.0, HjOrder::Zeroth).unwrap();
        let st = sol.evaluate(0.0).unwrap();
        let init = s.problem().initial_state();
        // Off by the eps chi1(0) correction only.
        let chi = hj_chi1_perp(&s, 0.0).unwrap();
        assert_abs_diff_eq!((st.psi - init.psi - chi[0] / 40.0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((st.phi - init.phi - chi[1] / 40.0).norm(), 0.0, epsilon = 1e-15);
    }
}
