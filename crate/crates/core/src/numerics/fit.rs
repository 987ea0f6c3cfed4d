//! Ordinary least-squares line fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when the ordinates are all equal.
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput("need at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all abscissae are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LineFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn collinear_points() {
        let fit = fit_line(&[1.0, 2.0, 3.0], &[0.5, 1.0, 1.5]).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn flat_line() {
        let fit = fit_line(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn noisy_points_have_partial_r_squared() {
        let fit = fit_line(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.2, 1.8, 3.1]).unwrap();
        assert!(fit.r_squared > 0.9 && fit.r_squared < 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_line(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(fit_line(&[1.0], &[1.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(fit_line(&[1.0, 2.0], &[1.0]), Err(Error::InvalidInput(_))));
    }
}
