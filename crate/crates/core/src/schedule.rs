//! Gap-powered interpolation schedules `g_alpha(r) = s'(r) = c_alpha Delta(r)^-alpha`.
//!
//! Writing `Delta^2 = a^2 + b^2 x^2` with `x = r - 1/2`, `a^2 = 1/(K+1)` and
//! `b^2 = 4K/(K+1)`, every integral of a power of `Delta` needed here has an
//! elementary antiderivative, so `s(r)` and the phase integral
//! `int_0^r g Delta` are evaluated in closed form. Each antiderivative is odd
//! in `x`, which makes `s(1 - r) = 1 - s(r)` hold to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::twolevel::TwoLevelProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    problem: TwoLevelProblem,
    alpha: u8,
    c_alpha: f64,
}

impl Schedule {
    pub fn new(problem: TwoLevelProblem, alpha: u8) -> Result<Self> {
        let k = problem.kf();
        let c_alpha = match alpha {
            0 => 1.0,
            // log((sqrt(K+1) + sqrt K) / (sqrt(K+1) - sqrt K)) = 2 asinh(sqrt K)
            1 => (k / (k + 1.0)).sqrt() / k.sqrt().asinh(),
            2 => k.sqrt() / ((k + 1.0) * k.sqrt().atan()),
            3 => 1.0 / (k + 1.0),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "schedule exponent must be 0, 1, 2 or 3, got {alpha}"
                )))
            }
        };
        Ok(Self { problem, alpha, c_alpha })
    }

    pub fn problem(&self) -> &TwoLevelProblem {
        &self.problem
    }

    pub fn alpha(&self) -> u8 {
        self.alpha
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    pub fn g(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.g_at(r))
    }

    /// `s(r) = int_0^r g`, with `s(0) = 0` and `s(1) = 1`.
    pub fn s(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.s_at(r))
    }

    /// `g'(r) / g(r) = -alpha Delta'(r) / Delta(r)`.
    pub fn log_derivative(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.log_derivative_at(r))
    }

    /// `int_0^r g(q) Delta(q) dq`, the accumulated gap in schedule time.
    pub fn gap_integral(&self, r: f64) -> Result<f64> {
        check_unit("r", r)?;
        Ok(self.gap_integral_at(r))
    }

    pub(crate) fn g_at(&self, r: f64) -> f64 {
        match self.alpha {
            0 => 1.0,
            alpha => self.c_alpha * self.problem.gap_at(r).powi(-(alpha as i32)),
        }
    }

    pub(crate) fn log_derivative_at(&self, r: f64) -> f64 {
        if self.alpha == 0 {
            return 0.0;
        }
        -(self.alpha as f64) * self.problem.gap_derivative_at(r) / self.problem.gap_at(r)
    }

    pub(crate) fn s_at(&self, r: f64) -> f64 {
        if self.alpha == 0 {
            return r;
        }
        let ad = self.antiderivatives();
        let x = r - 0.5;
        let odd = match self.alpha {
            1 => ad.inv_gap(x),
            2 => ad.inv_gap_sq(x),
            _ => ad.inv_gap_cubed(x),
        };
        0.5 + self.c_alpha * odd
    }

    pub(crate) fn gap_integral_at(&self, r: f64) -> f64 {
        let ad = self.antiderivatives();
        let x = r - 0.5;
        let f = |x: f64| match self.alpha {
            0 => ad.gap(x),
            1 => x,
            2 => ad.inv_gap(x),
            _ => ad.inv_gap_sq(x),
        };
        self.c_alpha * (f(x) + f(0.5))
    }

    fn antiderivatives(&self) -> GapAntiderivatives {
        let k = self.problem.kf();
        GapAntiderivatives {
            a: (1.0 / (k + 1.0)).sqrt(),
            b: 2.0 * (k / (k + 1.0)).sqrt(),
        }
    }
}

/// Odd antiderivatives in `x` of powers of `Delta = sqrt(a^2 + b^2 x^2)`.
struct GapAntiderivatives {
    a: f64,
    b: f64,
}

impl GapAntiderivatives {
    fn delta(&self, x: f64) -> f64 {
        self.a.hypot(self.b * x)
    }

    fn gap(&self, x: f64) -> f64 {
        0.5 * (x * self.delta(x) + self.a * self.a / self.b * (self.b * x / self.a).asinh())
    }

    fn inv_gap(&self, x: f64) -> f64 {
        (self.b * x / self.a).asinh() / self.b
    }

    fn inv_gap_sq(&self, x: f64) -> f64 {
        (self.b * x / self.a).atan() / (self.a * self.b)
    }

    fn inv_gap_cubed(&self, x: f64) -> f64 {
        x / (self.a * self.a * self.delta(x))
    }
}
