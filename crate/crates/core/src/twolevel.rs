//! The Grover Hamiltonian restricted to `span{|m>, |m_perp>}`.
//!
//! Everything is a pure function of `r = t / t_f` in `[0, 1]`. The checked
//! public functions return [`Error::Domain`] outside that interval; the
//! `*_at` variants are crate-internal and extend analytically to a small
//! neighbourhood, which finite-difference stencils near the endpoints rely on.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::state::State2;
use crate::C64;

/// Largest supported qubit count; keeps `K = 2^n - 1` exact in an `f64`.
pub const MAX_QUBITS: u32 = 52;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoLevelProblem {
    n: u32,
    k: u64,
}

/// Eigen-decomposition of `H(r)`. Eigenvectors are real and the ground
/// state is `(cos theta, sin theta)` with `theta` continuous in `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub e_gs: f64,
    pub e_exc: f64,
    pub v_gs: [f64; 2],
    pub v_exc: [f64; 2],
}

impl TwoLevelProblem {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        Ok(Self { n, k: (1u64 << n) - 1 })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    pub fn hamiltonian(&self, r: f64) -> Result<[[f64; 2]; 2]> {
        check_unit("r", r)?;
        Ok(self.hamiltonian_at(r))
    }

    pub fn gap(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.gap_at(r))
    }

    pub fn gap_derivative(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.gap_derivative_at(r))
    }

    pub fn eigensystem(&self, r: f64) -> Result<Spectrum> {
        check_unit("r", r)?;
        let theta = self.eigen_angle_at(r);
        let e_gs = self.ground_energy_at(r);
        Ok(Spectrum {
            e_gs,
            e_exc: 1.0 - e_gs,
            v_gs: [theta.cos(), theta.sin()],
            v_exc: [-theta.sin(), theta.cos()],
        })
    }

    /// Angle `theta(r)` of the ground state `(cos theta, sin theta)`.
    pub fn eigen_angle(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.eigen_angle_at(r))
    }

    /// `d theta / dr`; the ground state moves as `v_gs' = theta' v_exc`.
    pub fn eigen_angle_derivative(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.eigen_angle_derivative_at(r))
    }

    pub fn initial_state(&self) -> State2 {
        let kp1 = self.kf() + 1.0;
        State2::new(
            C64::new(1.0 / kp1.sqrt(), 0.0),
            C64::new((self.kf() / kp1).sqrt(), 0.0),
        )
    }

    pub(crate) fn hamiltonian_at(&self, r: f64) -> [[f64; 2]; 2] {
        let k = self.kf();
        let kp1 = k + 1.0;
        let u = 1.0 - r;
        let off = -u * k.sqrt() / kp1;
        [[u * k / kp1, off], [off, (1.0 + r * k) / kp1]]
    }

    /// `dH/dr`, independent of `r`.
    #[cfg(test)]
    pub(crate) fn hamiltonian_derivative(&self) -> [[f64; 2]; 2] {
        let k = self.kf();
        let kp1 = k + 1.0;
        [[-k / kp1, k.sqrt() / kp1], [k.sqrt() / kp1, k / kp1]]
    }

    pub(crate) fn gap_at(&self, r: f64) -> f64 {
        let k = self.kf();
        let x = r - 0.5;
        ((1.0 + 4.0 * k * x * x) / (k + 1.0)).sqrt()
    }

    pub(crate) fn gap_derivative_at(&self, r: f64) -> f64 {
        let k = self.kf();
        2.0 * k * (2.0 * r - 1.0) / ((k + 1.0) * self.gap_at(r))
    }

    pub(crate) fn gap_second_derivative_at(&self, r: f64) -> f64 {
        let k = self.kf();
        let d = self.gap_at(r);
        let dp = self.gap_derivative_at(r);
        (4.0 * k / (k + 1.0) - dp * dp) / d
    }

    /// `(1 - Delta) / 2`, written without cancellation near the endpoints.
    pub(crate) fn ground_energy_at(&self, r: f64) -> f64 {
        let k = self.kf();
        2.0 * k * r * (1.0 - r) / ((k + 1.0) * (1.0 + self.gap_at(r)))
    }

    pub(crate) fn eigen_angle_at(&self, r: f64) -> f64 {
        let h = self.hamiltonian_at(r);
        let e = self.ground_energy_at(r);
        let k = self.kf();
        // Two parallel null vectors of H - e; take the better conditioned one.
        // d - e is written out to avoid cancelling 1 against K/(K+1).
        let d_minus_e = (1.0 + r * k) / (k + 1.0) - e;
        let a = (d_minus_e, -h[0][1]);
        let b = (-h[0][1], h[0][0] - e);
        let (x, y) = if a.0.hypot(a.1) >= b.0.hypot(b.1) { a } else { b };
        y.atan2(x)
    }

    /// `theta' = -<v_exc|H'|v_gs> / Delta`, which simplifies to
    /// `-sqrt(K) / ((K+1) Delta^2)` with no cancellation for large `K`.
    pub(crate) fn eigen_angle_derivative_at(&self, r: f64) -> f64 {
        let kf = self.kf();
        let gap = self.gap_at(r);
        -kf.sqrt() / ((kf + 1.0) * gap * gap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn angle_derivative_matches_projection_form() {
        for n in 1..=6 {
            let p = TwoLevelProblem::new(n).unwrap();
            let hp = p.hamiltonian_derivative();
            for i in 0..=20 {
                let r = i as f64 / 20.0;
                let sp = p.eigensystem(r).unwrap();
                let (g, e) = (sp.v_gs, sp.v_exc);
                let m: f64 = (0..2).map(|a| (0..2).map(|b| e[a] * hp[a][b] * g[b]).sum::<f64>()).sum();
                assert_abs_diff_eq!(p.eigen_angle_derivative(r).unwrap(), -m / p.gap(r).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_zero_qubits() {
        assert!(TwoLevelProblem::new(0).is_err());
        assert!(TwoLevelProblem::new(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let p1 = TwoLevelProblem::new(1).unwrap();
        let h = p1.hamiltonian(0.5).unwrap();
        assert_abs_diff_eq!(h[0][0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(h[0][1], -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(h[1][1], 0.75, epsilon = 1e-15);

        let p2 = TwoLevelProblem::new(2).unwrap();
        let h = p2.hamiltonian(0.0).unwrap();
        assert_abs_diff_eq!(h[0][0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(h[0][1], -(3f64.sqrt()) / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h[1][1], 0.25, epsilon = 1e-15);

        let h = p2.hamiltonian(1.0).unwrap();
        assert_eq!(h, [[0.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn gap_examples() {
        let p1 = TwoLevelProblem::new(1).unwrap();
        assert_abs_diff_eq!(p1.gap(0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p1.gap(0.5).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        for n in 1..=30 {
            let p = TwoLevelProblem::new(n).unwrap();
            assert_abs_diff_eq!(p.gap(0.5).unwrap(), 2f64.powf(-(n as f64) / 2.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn gap_derivative_examples() {
        let p1 = TwoLevelProblem::new(1).unwrap();
        assert_eq!(p1.gap_derivative(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(p1.gap_derivative(0.0).unwrap(), -1.0, epsilon = 1e-15);
        let p2 = TwoLevelProblem::new(2).unwrap();
        assert_abs_diff_eq!(p2.gap_derivative(1.0).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn eigensystem_examples() {
        let p = TwoLevelProblem::new(3).unwrap();
        let s = p.eigensystem(1.0).unwrap();
        assert_abs_diff_eq!(s.e_gs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.e_exc, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.v_gs[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.v_gs[1], 0.0, epsilon = 1e-15);

        let p1 = TwoLevelProblem::new(1).unwrap();
        let s = p1.eigensystem(0.0).unwrap();
        assert_abs_diff_eq!(s.e_gs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.v_gs[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.v_gs[1], 0.5f64.sqrt(), epsilon = 1e-15);

        let p4 = TwoLevelProblem::new(4).unwrap();
        let s = p4.eigensystem(0.5).unwrap();
        assert_abs_diff_eq!(s.e_exc - s.e_gs, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn ground_state_at_start_is_initial_state() {
        for n in [1, 5, 20, 40] {
            let p = TwoLevelProblem::new(n).unwrap();
            let s = p.eigensystem(0.0).unwrap();
            let init = p.initial_state();
            assert_abs_diff_eq!(s.v_gs[0], init.psi.re, epsilon = 1e-15);
            assert_abs_diff_eq!(s.v_gs[1], init.phi.re, epsilon = 1e-15);
        }
    }

    #[test]
    fn initial_state_examples() {
        let cases = [(1, 0.5f64.sqrt(), 0.5f64.sqrt()), (2, 0.5, 3f64.sqrt() / 2.0), (4, 0.25, 15f64.sqrt() / 4.0)];
        for (n, psi, phi) in cases {
            let s = TwoLevelProblem::new(n).unwrap().initial_state();
            assert_abs_diff_eq!(s.psi.re, psi, epsilon = 1e-15);
            assert_abs_diff_eq!(s.phi.re, phi, epsilon = 1e-15);
            assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn domain_errors() {
        let p = TwoLevelProblem::new(2).unwrap();
        assert!(matches!(p.gap(1.5), Err(Error::Domain { .. })));
        assert!(p.hamiltonian(-0.1).is_err());
        assert!(p.eigensystem(f64::NAN).is_err());
    }
}
