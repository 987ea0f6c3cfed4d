//! Quasi-adiabatic WKB solutions at orders zero and one.
//!
//! Each amplitude is a combination of two branches
//! `e^{theta_pm / eps} (y0_pm + eps y1_pm)` with eikonal phases
//! `theta_pm' = -(i g / 2)(1 pm Delta)`. The zeroth-order amplitudes come in
//! two shapes: one vanishes linearly at `r = 1` (`psi_0^+`, `phi_0^-`), the
//! other stays finite (`psi_0^-`, `phi_0^+`). The first-order correction is
//! `y1 = w y0` with `w' = -sigma i B / (g Delta)`, where
//! `B = L' + L^2 + (1/(1-r) - g'/g) L` and `L = y0'/y0`.
//!
//! `w` is accumulated on a fixed grid of 1025 nodes, refined by adaptive
//! quadrature from the nearest node. For the vanishing shape `w'` has a
//! double pole `sigma i / (g(1) (1-r)^2)` at `r = 1`; it is integrated in
//! closed form and only the regular remainder goes through quadrature.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::exact::{check_tf, validate_grid, Trajectory};
use crate::numerics::{integrate, QuadratureSpec};
use crate::schedule::Schedule;
use crate::state::State2;
use crate::twolevel::TwoLevelProblem;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Intervals in the first-order node grid.
const CACHE_INTERVALS: usize = 1024;

/// The remainder of the vanishing-shape integrand is integrated up to
/// `1 - ENDPOINT_CLAMP`; `(1-r) w` is faded linearly to zero beyond it.
pub const ENDPOINT_CLAMP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    fn index(self) -> usize {
        match self {
            Branch::Plus => 0,
            Branch::Minus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Amplitude {
    /// Marked-state amplitude.
    Psi,
    /// Amplitude on the complement of the marked state.
    Phi,
}

impl Amplitude {
    pub const BOTH: [Amplitude; 2] = [Amplitude::Psi, Amplitude::Phi];

    fn index(self) -> usize {
        match self {
            Amplitude::Psi => 0,
            Amplitude::Phi => 1,
        }
    }
}

/// Shape of a zeroth-order amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransportKind {
    /// `(1-r) / sqrt(sqrt(K+1) Delta F)`; zero at `r = 1`.
    Vanishing,
    /// `sqrt(F / (sqrt(K+1) Delta))`; finite and nonzero on `[0, 1]`.
    Regular,
}

impl TransportKind {
    pub fn of(branch: Branch, amplitude: Amplitude) -> Self {
        match (amplitude, branch) {
            (Amplitude::Psi, Branch::Plus) | (Amplitude::Phi, Branch::Minus) => TransportKind::Vanishing,
            _ => TransportKind::Regular,
        }
    }

    fn index(self) -> usize {
        match self {
            TransportKind::Vanishing => 0,
            TransportKind::Regular => 1,
        }
    }
}

/// Integration constants of the branch amplitudes, indexed
/// `[amplitude][branch]` (`Psi`/`Phi`, `Plus`/`Minus`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkbConstants {
    /// Multiplier of the unit-constant zeroth-order amplitude.
    pub scale: [[f64; 2]; 2],
    /// `w(0) = y1(0) / y0(0)`.
    pub first_order_origin: [[C64; 2]; 2],
}

impl Default for WkbConstants {
    fn default() -> Self {
        Self { scale: [[1.0; 2]; 2], first_order_origin: [[C64::new(0.0, 0.0); 2]; 2] }
    }
}

impl WkbConstants {
    /// Constants for `K = 1` that make every amplitude equal 1 at `r = 0`
    /// and reproduce the rational closed forms
    /// `w = pm i (P pm 6 Delta) / (12 (1-r) Delta^3)` for `psi` and
    /// `w = pm i (P mp 6 Delta) / (12 (1-r) Delta^3)` for `phi`, with
    /// `P = 16r^4 - 40r^3 + 42r^2 - 17r + 5` and linear schedule.
    pub fn qubit_closed_form() -> Self {
        let v = 2f64.powf(0.75);
        let reg = 2f64.powf(-0.25);
        let big = C64::new(0.0, 11.0 / 12.0);
        let small = C64::new(0.0, 1.0 / 12.0);
        Self {
            scale: [[v, reg], [reg, v]],
            first_order_origin: [[big, small], [-small, -big]],
        }
    }

    fn scale_of(&self, branch: Branch, amplitude: Amplitude) -> f64 {
        self.scale[amplitude.index()][branch.index()]
    }

    fn origin_of(&self, branch: Branch, amplitude: Amplitude) -> C64 {
        self.first_order_origin[amplitude.index()][branch.index()]
    }
}

/// `theta_pm(r) = -(i/2) int_0^r g (1 pm Delta)`; purely imaginary.
pub fn eikonal_theta(schedule: &Schedule, branch: Branch, r: f64) -> Result<C64> {
    check_unit("r", r)?;
    Ok(theta_at(schedule, branch, r))
}

fn theta_at(schedule: &Schedule, branch: Branch, r: f64) -> C64 {
    let phase = schedule.s_at(r) + branch.sign() * schedule.gap_integral_at(r);
    C64::new(0.0, -0.5 * phase)
}

/// Zeroth-order amplitude with unit integration constant. Independent of
/// the schedule.
pub fn transport_zeroth(problem: &TwoLevelProblem, branch: Branch, amplitude: Amplitude, r: f64) -> Result<f64> {
    check_unit("r", r)?;
    Ok(Transport(problem).y0(TransportKind::of(branch, amplitude), r))
}

/// `y0' / y0` of the zeroth-order amplitude. The vanishing shape has a
/// simple pole at `r = 1`, reported as [`Error::Singularity`].
pub fn transport_log_deriv(problem: &TwoLevelProblem, branch: Branch, amplitude: Amplitude, r: f64) -> Result<f64> {
    check_unit("r", r)?;
    let kind = TransportKind::of(branch, amplitude);
    if kind == TransportKind::Vanishing && r == 1.0 {
        return Err(Error::Singularity { r });
    }
    Ok(Transport(problem).log_deriv(kind, r))
}

/// Closed-form pieces of the zeroth-order amplitudes.
struct Transport<'a>(&'a TwoLevelProblem);

impl Transport<'_> {
    /// `F = K(2r-1) + (K+1) Delta + 1`, rationalised for `r < 1/2`.
    fn f(&self, r: f64) -> f64 {
        let p = self.0;
        let k = p.kf();
        let d = p.gap_at(r);
        if r >= 0.5 {
            k * (2.0 * r - 1.0) + (k + 1.0) * d + 1.0
        } else {
            1.0 + (2.0 * k + 1.0 - 4.0 * k * r * (1.0 - r)) / ((k + 1.0) * d + k * (1.0 - 2.0 * r))
        }
    }

    /// Vanishing amplitude divided by `1 - r`.
    fn reduced(&self, r: f64) -> f64 {
        let k = self.0.kf();
        1.0 / ((k + 1.0).sqrt() * self.0.gap_at(r) * self.f(r)).sqrt()
    }

    fn y0(&self, kind: TransportKind, r: f64) -> f64 {
        match kind {
            TransportKind::Vanishing => (1.0 - r) * self.reduced(r),
            TransportKind::Regular => {
                let k = self.0.kf();
                (self.f(r) / ((k + 1.0).sqrt() * self.0.gap_at(r))).sqrt()
            }
        }
    }

    /// Regular shape: `L = -h N` with `h = K / ((K+1) Delta^2 (1+Delta))`
    /// and `N = 2r - 1 - Delta`. Returns `(h, N, N / (1-r), N')`, each free of
    /// cancellation on its side of `r = 1/2`.
    fn regular_parts(&self, r: f64) -> (f64, f64, f64, f64) {
        let p = self.0;
        let k = p.kf();
        let d = p.gap_at(r);
        let u = 1.0 - r;
        let h = k / ((k + 1.0) * d * d * (1.0 + d));
        if r > 0.5 {
            let s = 2.0 * r - 1.0 + d;
            let n_over_u = -4.0 * r / ((k + 1.0) * s);
            let dn = 2.0 * (2.0 * k + 1.0 - 4.0 * k * r * u)
                / ((k + 1.0) * d * ((k + 1.0) * d + k * (2.0 * r - 1.0)));
            (h, n_over_u * u, n_over_u, dn)
        } else {
            let n = 2.0 * r - 1.0 - d;
            (h, n, n / u, 2.0 - p.gap_derivative_at(r))
        }
    }

    fn log_deriv(&self, kind: TransportKind, r: f64) -> f64 {
        let p = self.0;
        let d = p.gap_at(r);
        match kind {
            TransportKind::Vanishing => -0.5 * (p.gap_derivative_at(r) / d + (1.0 + d) / (d * (1.0 - r))),
            TransportKind::Regular => {
                let (h, n, _, _) = self.regular_parts(r);
                -h * n
            }
        }
    }

    /// `B = L' + L^2 + (1/(1-r) - g'/g) L` for `r < 1`.
    fn b_coefficient(&self, schedule: &Schedule, kind: TransportKind, r: f64) -> f64 {
        let gl = schedule.log_derivative_at(r);
        match kind {
            TransportKind::Vanishing => {
                let u = 1.0 - r;
                let (c0, c1, c2) = self.vanishing_coefficients(gl, r);
                c0 / (u * u) + c1 / u + c2
            }
            TransportKind::Regular => self.regular_b(gl, r),
        }
    }

    /// Writes `(1-r)^2 B = c0 + (1-r) c1 + (1-r)^2 c2` for the vanishing shape.
    fn vanishing_coefficients(&self, gl: f64, r: f64) -> (f64, f64, f64) {
        let prob = self.0;
        let d = prob.gap_at(r);
        let dp = prob.gap_derivative_at(r);
        let p = dp / d;
        let q = (1.0 + d) / d;
        let dq = -dp / (d * d);
        let dp_ratio = prob.gap_second_derivative_at(r) / d - p * p;
        let c0 = 0.25 * q * q - q;
        let c1 = -0.5 * dq + 0.5 * p * q - 0.5 * p + 0.5 * gl * q;
        let c2 = -0.5 * dp_ratio + 0.25 * p * p + 0.5 * gl * p;
        (c0, c1, c2)
    }

    fn regular_b(&self, gl: f64, r: f64) -> f64 {
        let prob = self.0;
        let d = prob.gap_at(r);
        let dp = prob.gap_derivative_at(r);
        let (h, n, n_over_u, dn) = self.regular_parts(r);
        let l = -h * n;
        let dl = -h * (dn - n * dp * (2.0 + 3.0 * d) / (d * (1.0 + d)));
        dl + l * l - h * n_over_u - gl * l
    }

    /// `Im[w' - i / (g(1) (1-r)^2)]` on the plus branch of the vanishing
    /// shape. The double pole cancels analytically: with `eta = 1 - Delta`,
    /// `c0 / (g Delta) + 1/g(1) = p_alpha(eta) / (4 c Delta^(3-alpha))` for a
    /// small polynomial `p_alpha` vanishing at `eta = 0`.
    fn vanishing_remainder(&self, schedule: &Schedule, r: f64) -> f64 {
        let u = 1.0 - r;
        let d = self.0.gap_at(r);
        let gd = schedule.g_at(r) * d;
        let (_, c1, c2) = self.vanishing_coefficients(schedule.log_derivative_at(r), r);
        let eta = 2.0 * self.0.ground_energy_at(r);
        let (poly, m) = match schedule.alpha() {
            0 => (eta * (-4.0 + eta * (9.0 - 4.0 * eta)), 3),
            1 => (eta * eta, 2),
            2 => (eta * (4.0 - 3.0 * eta), 1),
            _ => (eta * (8.0 - 3.0 * eta), 0),
        };
        let pole = poly / (4.0 * schedule.c_alpha() * d.powi(m));
        -((pole + u * c1 / gd) / (u * u) + c2 / gd)
    }

    /// `Im w'` on the plus branch of the regular shape.
    fn regular_rate(&self, schedule: &Schedule, r: f64) -> f64 {
        -self.regular_b(schedule.log_derivative_at(r), r) / (schedule.g_at(r) * self.0.gap_at(r))
    }
}

/// Cumulative first-order integrals on the node grid, plus branch.
struct FirstOrderCache {
    /// `[Vanishing, Regular]`; node `j` holds the integral up to `j / 1024`
    /// (the last vanishing node stops at `1 - ENDPOINT_CLAMP`).
    cumulative: [Vec<f64>; 2],
}

/// Everything about the WKB solutions that does not depend on `t_f`.
pub struct WkbProfile {
    schedule: Schedule,
    constants: WkbConstants,
    quadrature: QuadratureSpec,
    first_order: OnceLock<Result<FirstOrderCache>>,
}

impl std::fmt::Debug for WkbProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WkbProfile")
            .field("schedule", &self.schedule)
            .field("constants", &self.constants)
            .field("quadrature", &self.quadrature)
            .finish_non_exhaustive()
    }
}

impl WkbProfile {
    /// Quadrature settings for the first-order integrals.
    pub const DEFAULT_QUADRATURE: QuadratureSpec =
        QuadratureSpec { abs_tol: 1e-13, rel_tol: 1e-13, max_subdivisions: 2000 };

    pub fn new(schedule: Schedule) -> Self {
        Self::with_constants(schedule, WkbConstants::default(), Self::DEFAULT_QUADRATURE)
    }

    pub fn with_constants(schedule: Schedule, constants: WkbConstants, quadrature: QuadratureSpec) -> Self {
        Self { schedule, constants, quadrature, first_order: OnceLock::new() }
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn constants(&self) -> &WkbConstants {
        &self.constants
    }

    fn transport(&self) -> Transport<'_> {
        Transport(self.schedule.problem())
    }

    /// Zeroth-order amplitude including its integration constant.
    pub fn zeroth_order(&self, branch: Branch, amplitude: Amplitude, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.zeroth_at(branch, amplitude, r))
    }

    fn zeroth_at(&self, branch: Branch, amplitude: Amplitude, r: f64) -> f64 {
        self.constants.scale_of(branch, amplitude) * self.transport().y0(TransportKind::of(branch, amplitude), r)
    }

    /// `w'(r) = d/dr (y1 / y0)` for `r < 1`.
    pub fn first_order_rate(&self, branch: Branch, amplitude: Amplitude, r: f64) -> Result<C64> {
        check_unit("r", r)?;
        let kind = TransportKind::of(branch, amplitude);
        if r == 1.0 && kind == TransportKind::Vanishing {
            return Err(Error::Singularity { r });
        }
        Ok(self.rate_at(branch, kind, r))
    }

    fn rate_at(&self, branch: Branch, kind: TransportKind, r: f64) -> C64 {
        let b = self.transport().b_coefficient(&self.schedule, kind, r);
        let gd = self.schedule.g_at(r) * self.schedule.problem().gap_at(r);
        C64::new(0.0, -branch.sign() * b / gd)
    }

    /// First-order correction `y1(r)`, including `y1(1)` as the limit of
    /// `w y0`.
    pub fn first_order(&self, branch: Branch, amplitude: Amplitude, r: f64) -> Result<C64> {
        check_unit("r", r)?;
        self.first_at(branch, amplitude, r)
    }

    fn first_at(&self, branch: Branch, amplitude: Amplitude, r: f64) -> Result<C64> {
        let kind = TransportKind::of(branch, amplitude);
        let sigma = branch.sign();
        let w0 = self.constants.origin_of(branch, amplitude);
        let scale = self.constants.scale_of(branch, amplitude);
        let tr = self.transport();
        match kind {
            TransportKind::Regular => {
                let acc = self.accumulated(kind, r)?;
                Ok(tr.y0(kind, r) * scale * (w0 + I * (sigma * acc)))
            }
            TransportKind::Vanishing => {
                let u = 1.0 - r;
                let rc = r.min(1.0 - ENDPOINT_CLAMP);
                let acc = self.accumulated(kind, rc)?;
                let pole = I * (sigma * (1.0 - u) / self.schedule.c_alpha());
                Ok(tr.reduced(r) * scale * ((w0 + I * (sigma * acc)) * u + pole))
            }
        }
    }

    fn integrand(&self, kind: TransportKind) -> impl Fn(f64) -> f64 + '_ {
        move |q| match kind {
            TransportKind::Vanishing => self.transport().vanishing_remainder(&self.schedule, q),
            TransportKind::Regular => self.transport().regular_rate(&self.schedule, q),
        }
    }

    fn cache(&self) -> Result<&FirstOrderCache> {
        self.first_order
            .get_or_init(|| {
                let mut cumulative = [Vec::new(), Vec::new()];
                for kind in [TransportKind::Vanishing, TransportKind::Regular] {
                    let f = self.integrand(kind);
                    let nodes = &mut cumulative[kind.index()];
                    nodes.reserve(CACHE_INTERVALS + 1);
                    nodes.push(0.0);
                    let mut acc = 0.0;
                    for j in 0..CACHE_INTERVALS {
                        let a = j as f64 / CACHE_INTERVALS as f64;
                        let mut b = (j + 1) as f64 / CACHE_INTERVALS as f64;
                        if kind == TransportKind::Vanishing && j + 1 == CACHE_INTERVALS {
                            b = 1.0 - ENDPOINT_CLAMP;
                        }
                        acc += integrate(&f, a, b, &self.quadrature)?.value;
                        nodes.push(acc);
                    }
                }
                Ok(FirstOrderCache { cumulative })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Plus-branch integral of the (pole-free part of the) first-order rate
    /// from 0 to `r`.
    fn accumulated(&self, kind: TransportKind, r: f64) -> Result<f64> {
        let nodes = &self.cache()?.cumulative[kind.index()];
        let j = ((r * CACHE_INTERVALS as f64).floor() as usize).min(CACHE_INTERVALS - 1);
        let a = j as f64 / CACHE_INTERVALS as f64;
        let top = if kind == TransportKind::Vanishing { 1.0 - ENDPOINT_CLAMP } else { 1.0 };
        if r == a {
            return Ok(nodes[j]);
        }
        if r == top {
            return Ok(nodes[CACHE_INTERVALS]);
        }
        Ok(nodes[j] + integrate(self.integrand(kind), a, r, &self.quadrature)?.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WkbOrder {
    Zeroth,
    First,
}

/// A WKB approximant for one `t_f`, with coefficients fixed by the initial
/// conditions `chi(0) = (1/sqrt(K+1), sqrt(K/(K+1)))`, `chi'(0) = 0`.
#[derive(Debug, Clone)]
pub struct WkbSolution {
    profile: Arc<WkbProfile>,
    order: WkbOrder,
    t_f: f64,
    /// `[amplitude][branch]`: `(A_psi, B_psi), (A_phi, B_phi)`.
    coefficients: [[C64; 2]; 2],
    renormalized: bool,
}

/// Solves for the branch coefficients at the given `t_f`.
pub fn assemble(profile: &Arc<WkbProfile>, t_f: f64, order: WkbOrder) -> Result<WkbSolution> {
    check_tf(t_f)?;
    let eps = 1.0 / t_f;
    let schedule = &profile.schedule;
    let init = schedule.problem().initial_state();
    let g0 = schedule.g_at(0.0);
    let tr = profile.transport();
    let mut coefficients = [[C64::new(0.0, 0.0); 2]; 2];
    for amplitude in Amplitude::BOTH {
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for branch in Branch::BOTH {
            let kind = TransportKind::of(branch, amplitude);
            let y0 = profile.zeroth_at(branch, amplitude, 0.0);
            let dy0 = y0 * tr.log_deriv(kind, 0.0);
            let (y1, dy1) = match order {
                WkbOrder::Zeroth => (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
                WkbOrder::First => {
                    let w0 = profile.constants.origin_of(branch, amplitude);
                    let dw = profile.rate_at(branch, kind, 0.0);
                    (w0 * y0, dw * y0 + w0 * dy0)
                }
            };
            let value = y1 * eps + y0;
            let dtheta = C64::new(0.0, -0.5 * g0 * (1.0 + branch.sign()));
            let c = branch.index();
            m[0][c] = value;
            m[1][c] = dtheta / eps * value + dy0 + dy1 * eps;
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let size = (m[0][0] * m[1][1]).norm() + (m[0][1] * m[1][0]).norm();
        if !(det.norm() > 1e-14 * size) {
            return Err(Error::SingularSystem);
        }
        let v = match amplitude {
            Amplitude::Psi => init.psi,
            Amplitude::Phi => init.phi,
        };
        coefficients[amplitude.index()] = [v * m[1][1] / det, -v * m[1][0] / det];
    }
    Ok(WkbSolution { profile: Arc::clone(profile), order, t_f, coefficients, renormalized: false })
}

impl WkbSolution {
    pub fn order(&self) -> WkbOrder {
        self.order
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn profile(&self) -> &Arc<WkbProfile> {
        &self.profile
    }

    /// `[amplitude][branch]` coefficients.
    pub fn coefficients(&self) -> [[C64; 2]; 2] {
        self.coefficients
    }

    pub fn is_renormalized(&self) -> bool {
        self.renormalized
    }

    /// The same approximant divided by its own norm at every `r`.
    pub fn renormalized(mut self) -> Self {
        self.renormalized = true;
        self
    }

    pub fn evaluate(&self, r: f64) -> Result<State2> {
        check_unit("r", r)?;
        let eps = 1.0 / self.t_f;
        let schedule = &self.profile.schedule;
        let phases = [theta_at(schedule, Branch::Plus, r), theta_at(schedule, Branch::Minus, r)]
            .map(|th| (th * self.t_f).exp());
        let mut out = [C64::new(0.0, 0.0); 2];
        for amplitude in Amplitude::BOTH {
            let mut acc = C64::new(0.0, 0.0);
            for branch in Branch::BOTH {
                let y0 = self.profile.zeroth_at(branch, amplitude, r);
                let y = match self.order {
                    WkbOrder::Zeroth => C64::new(y0, 0.0),
                    WkbOrder::First => self.profile.first_at(branch, amplitude, r)? * eps + y0,
                };
                acc += self.coefficients[amplitude.index()][branch.index()] * phases[branch.index()] * y;
            }
            out[amplitude.index()] = acc;
        }
        let state = State2::from_array(out);
        Ok(if self.renormalized { state.normalized() } else { state })
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
    use approx::assert_abs_diff_eq;

    fn sched(n: u32, alpha: u8) -> Schedule {
        Schedule::new(TwoLevelProblem::new(n).unwrap(), alpha).unwrap()
    }

    #[test]
    fn theta_examples() {
        let s = sched(2, 2);
        for b in Branch::BOTH {
            assert_eq!(eikonal_theta(&s, b, 0.0).unwrap(), C64::new(0.0, 0.0));
        }
        let sum = eikonal_theta(&s, Branch::Plus, 0.7).unwrap() + eikonal_theta(&s, Branch::Minus, 0.7).unwrap();
        assert_abs_diff_eq!(sum.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sum.im, -s.s(0.7).unwrap(), epsilon = 1e-14);

        let th = eikonal_theta(&sched(1, 0), Branch::Minus, 1.0).unwrap();
        assert_eq!(th.re, 0.0);
        assert_abs_diff_eq!(th.im, -0.094194, epsilon = 1e-6);
    }

    #[test]
    fn transport_examples() {
        let p3 = TwoLevelProblem::new(2).unwrap();
        assert_eq!(transport_zeroth(&p3, Branch::Plus, Amplitude::Psi, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(transport_zeroth(&p3, Branch::Minus, Amplitude::Psi, 0.0).unwrap(), 1.0, epsilon = 1e-15);

        let q = WkbProfile::with_constants(sched(1, 0), WkbConstants::qubit_closed_form(), WkbProfile::DEFAULT_QUADRATURE);
        for b in Branch::BOTH {
            for a in Amplitude::BOTH {
                assert_abs_diff_eq!(q.zeroth_order(b, a, 0.0).unwrap(), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn log_derivative_examples() {
        let p1 = TwoLevelProblem::new(1).unwrap();
        assert_abs_diff_eq!(transport_log_deriv(&p1, Branch::Minus, Amplitude::Psi, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(transport_log_deriv(&p1, Branch::Plus, Amplitude::Psi, 0.0).unwrap(), -0.5, epsilon = 1e-15);
        assert!(matches!(
            transport_log_deriv(&p1, Branch::Plus, Amplitude::Psi, 1.0),
            Err(Error::Singularity { .. })
        ));
        assert_eq!(transport_log_deriv(&p1, Branch::Minus, Amplitude::Psi, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_shapes_mirror_psi_shapes() {
        let p = TwoLevelProblem::new(3).unwrap();
        for r in [0.0, 0.3, 0.8] {
            assert_eq!(
                transport_log_deriv(&p, Branch::Plus, Amplitude::Phi, r).unwrap(),
                transport_log_deriv(&p, Branch::Minus, Amplitude::Psi, r).unwrap()
            );
            assert_eq!(
                transport_log_deriv(&p, Branch::Minus, Amplitude::Phi, r).unwrap(),
                transport_log_deriv(&p, Branch::Plus, Amplitude::Psi, r).unwrap()
            );
        }
    }

    #[test]
    fn first_order_vanishes_at_origin_by_default() {
        let profile = WkbProfile::new(sched(3, 1));
        for b in Branch::BOTH {
            for a in Amplitude::BOTH {
                assert_eq!(profile.first_order(b, a, 0.0).unwrap(), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn assembled_solution_matches_initial_state() {
        for order in [WkbOrder::Zeroth, WkbOrder::First] {
            let profile = Arc::new(WkbProfile::new(sched(2, 2)));
            let sol = assemble(&profile, 30.0, order).unwrap();
            let s0 = sol.evaluate(0.0).unwrap();
            assert_abs_diff_eq!(s0.psi.re, 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(s0.phi.re, 3f64.sqrt() / 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s0.psi.im, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s0.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn renormalized_solution_has_unit_norm() {
        let profile = Arc::new(WkbProfile::new(sched(6, 3)));
        let sol = assemble(&profile, 60.0, WkbOrder::Zeroth).unwrap().renormalized();
        for i in 0..=50 {
            assert_abs_diff_eq!(sol.evaluate(i as f64 / 50.0).unwrap().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vanishing_remainder_matches_rate_minus_pole() {
        for alpha in 0..4 {
            let s = sched(4, alpha);
            let profile = WkbProfile::new(s);
            let tr = profile.transport();
            for r in [0.1, 0.45, 0.8, 0.97] {
                let full = profile.rate_at(Branch::Plus, TransportKind::Vanishing, r).im;
                let pole = 1.0 / (s.c_alpha() * (1.0 - r).powi(2));
                let rem = tr.vanishing_remainder(&s, r);
                assert_abs_diff_eq!(rem, full - pole, epsilon = 1e-9 * full.abs().max(1.0));
            }
        }
    }

    #[test]
    fn remainder_is_bounded_at_the_endpoint() {
        for alpha in 0..4 {
            let s = sched(5, alpha);
            let tr = Transport(s.problem());
            let a = tr.vanishing_remainder(&s, 1.0 - 1e-4);
            let b = tr.vanishing_remainder(&s, 1.0 - 1e-7);
            assert!(a.is_finite() && b.is_finite());
            assert_abs_diff_eq!(a, b, epsilon = 1e-2 * a.abs().max(1.0));
        }
    }
}
