//! Explicit Dormand–Prince 8(5,3) integrator for small complex systems.
//!
//! Steps are clipped so that every requested output point is hit exactly;
//! no interpolation is involved. Step size follows a PI controller on the
//! combined 5th/3rd-order error estimate.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::dop853_tableau::{A, B, C, E3, E5, STAGES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-11, rel_tol: 1e-11, initial_step: None, max_steps: 50_000_000 }
    }
}

impl OdeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) || self.max_steps == 0 {
            return Err(Error::InvalidInput("ODE tolerances and step budget must be positive".into()));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput("initial step must be positive".into()));
            }
        }
        Ok(())
    }
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 6.0;
const BETA: f64 = 0.04;
const EXPONENT: f64 = 1.0 / 8.0 - 0.2 * BETA;

fn scaled_rms<const N: usize>(v: &[C64; N], scale: &[f64; N]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(x, s)| (x.norm() / s).powi(2)).sum();
    (s / N as f64).sqrt()
}

fn axpy<const N: usize>(y: &[C64; N], h: f64, k: &[C64; N]) -> [C64; N] {
    let mut out = *y;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += ki * h;
    }
    out
}

fn initial_step<const N: usize, F>(rhs: &mut F, t0: f64, y0: &[C64; N], f0: &[C64; N], span: f64, spec: &OdeSpec) -> f64
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    let scale: [f64; N] = std::array::from_fn(|i| spec.abs_tol + y0[i].norm() * spec.rel_tol);
    let d0 = scaled_rms(y0, &scale);
    let d1 = scaled_rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let y1 = axpy(y0, h0, f0);
    let f1 = rhs(t0 + h0, &y1);
    let diff: [C64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = scaled_rms(&diff, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `y' = rhs(t, y)` from `span.0` to `span.1` (forward only) and
/// returns the solution at each point of the sorted `output` grid.
pub fn solve_ode<const N: usize, F>(
    mut rhs: F,
    y0: [C64; N],
    span: (f64, f64),
    spec: &OdeSpec,
    output: &[f64],
) -> Result<Vec<[C64; N]>>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
{
    spec.validate()?;
    let (t0, t1) = span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidInput("integration span must be finite and increasing".into()));
    }
    if output.windows(2).any(|w| !(w[1] >= w[0])) || output.iter().any(|&t| t < t0 || t > t1) {
        return Err(Error::InvalidInput("output grid must be sorted and inside the span".into()));
    }

    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y);
    let mut h = match spec.initial_step {
        Some(h) => h.min(t1 - t0),
        None => initial_step(&mut rhs, t0, &y0, &f, t1 - t0, spec),
    };
    let mut err_old: f64 = 1e-4;
    let mut steps = 0usize;
    let mut k = [[C64::new(0.0, 0.0); N]; STAGES + 1];
    let mut out = Vec::with_capacity(output.len());

    for &target in output {
        while t < target {
            if steps >= spec.max_steps {
                return Err(Error::StepFailure { t, reason: format!("step budget of {} exhausted", spec.max_steps) });
            }
            let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
            if h < min_step {
                return Err(Error::StepFailure { t, reason: format!("step size {h:e} underflowed") });
            }
            let clipped = h >= target - t;
            let step = if clipped { target - t } else { h };

            k[0] = f;
            for s in 1..STAGES {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for (yi, kji) in ys.iter_mut().zip(kj) {
                            *yi += kji * (step * a);
                        }
                    }
                }
                k[s] = rhs(t + C[s] * step, &ys);
            }
            let mut y_new = y;
            for (s, ks) in k.iter().enumerate().take(STAGES) {
                if B[s] != 0.0 {
                    for (yi, ksi) in y_new.iter_mut().zip(ks) {
                        *yi += ksi * (step * B[s]);
                    }
                }
            }
            let t_new = if clipped { target } else { t + step };
            let f_new = rhs(t_new, &y_new);
            k[STAGES] = f_new;

            let scale: [f64; N] =
                std::array::from_fn(|i| spec.abs_tol + spec.rel_tol * y[i].norm().max(y_new[i].norm()));
            let mut e5 = [C64::new(0.0, 0.0); N];
            let mut e3 = [C64::new(0.0, 0.0); N];
            for (s, ks) in k.iter().enumerate() {
                for i in 0..N {
                    e5[i] += ks[i] * E5[s];
                    e3[i] += ks[i] * E3[s];
                }
            }
            let n5: f64 = (0..N).map(|i| (e5[i].norm() / scale[i]).powi(2)).sum();
            let n3: f64 = (0..N).map(|i| (e3[i].norm() / scale[i]).powi(2)).sum();
            let denom = n5 + 0.01 * n3;
            let err = if denom > 0.0 { step * n5 / (denom * N as f64).sqrt() } else { 0.0 };
            steps += 1;

            if !err.is_finite() {
                h = 0.5 * step;
                continue;
            }
            let fac = err.powf(EXPONENT);
            if err <= 1.0 {
                let growth = (err_old.powf(BETA) / fac * SAFETY).clamp(MIN_FACTOR, MAX_FACTOR);
                let proposal = step * growth;
                // A step shortened to land on an output point says little
                // about the natural step size, so keep the earlier proposal.
                h = if clipped { proposal.max(h) } else { proposal };
                err_old = err.max(1e-4);
                t = t_new;
                y = y_new;
                f = f_new;
            } else {
                h = step * (SAFETY / fac).max(MIN_FACTOR);
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const I: C64 = C64 { re: 0.0, im: 1.0 };

    #[test]
    fn tableau_consistency() {
        for s in 0..STAGES {
            let row: f64 = A[s].iter().sum();
            assert_abs_diff_eq!(row, C[s], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(B.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(E5.iter().sum::<f64>(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(E3.iter().sum::<f64>(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let out = solve_ode(|_, _| [C64::new(0.0, 0.0); 2], y0, (0.0, 1.0), &OdeSpec::default(), &[0.0, 0.5, 1.0]).unwrap();
        for y in out {
            assert_eq!(y, y0);
        }
    }

    #[test]
    fn global_phase() {
        let y0 = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let out = solve_ode(|_, y: &[C64; 2]| [-I * y[0], -I * y[1]], y0, (0.0, 1.0), &OdeSpec::default(), &[1.0]).unwrap();
        let ph = (-I).exp();
        assert_abs_diff_eq!((out[0][0] - y0[0] * ph).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((out[0][1] - y0[1] * ph).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn fast_oscillation_matches_closed_form() {
        // y' = -i w(t) y with w(t) = 300 (1 + t): y(t) = exp(-i 300 (t + t^2/2)).
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let out = solve_ode(
            |t, y: &[C64; 1]| [-I * 300.0 * (1.0 + t) * y[0]],
            [C64::new(1.0, 0.0)],
            (0.0, 1.0),
            &OdeSpec::default(),
            &grid,
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&out) {
            let exact = (-I * 300.0 * (t + 0.5 * t * t)).exp();
            assert_abs_diff_eq!((y[0] - exact).norm(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_unsorted_grid() {
        let r = solve_ode(|_, y: &[C64; 1]| *y, [C64::new(1.0, 0.0)], (0.0, 1.0), &OdeSpec::default(), &[0.5, 0.2]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn budget_exhaustion_is_step_failure() {
        let spec = OdeSpec { max_steps: 5, ..OdeSpec::default() };
        let r = solve_ode(|_, y: &[C64; 1]| [-I * 1e4 * y[0]], [C64::new(1.0, 0.0)], (0.0, 1.0), &spec, &[1.0]);
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }
}
