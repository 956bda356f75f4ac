//! Log-log convergence-rate fits.

use crate::error::{Error, Result};

/// Least-squares line `log err = slope log eps + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
}

/// Fits `err ~ C eps^slope` through at least three `(eps, err)` points.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(e, r)| !(*e > 0.0 && *r > 0.0 && e.is_finite() && r.is_finite())) {
        return Err(Error::InvalidArgument(format!("points must be positive and finite, got {p:?}")));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(e, r)| (e.ln(), r.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("eps values must not all coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared: r_squared.clamp(0.0, 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: [f64; 3] = [0.1, 0.05, 0.025];

    #[test]
    fn exact_power_laws() {
        let fit = fit_rate(&EPS.map(|e| (e, e * e))).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let fit = fit_rate(&EPS.map(|e| (e, 3.0 * e.powf(2.5)))).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perturbed_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, e * e * (1.0 + 0.05 * if k % 2 == 0 { 1.0 } else { -1.0 })))
            .collect();
        let fit = fit_rate(&pts).unwrap();
        assert!((1.9..=2.1).contains(&fit.slope), "{fit:?}");
        assert!(fit.r_squared >= 0.99);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(0.1, 1.0), (0.05, 0.5)]).is_err());
        assert!(fit_rate(&[(0.1, 1.0), (0.05, 0.0), (0.025, 0.1)]).is_err());
        assert!(fit_rate(&[(0.1, 1.0), (-0.05, 0.5), (0.025, 0.1)]).is_err());
        assert!(fit_rate(&[(0.1, 1.0), (0.1, 0.5), (0.1, 0.1)]).is_err());
    }

    #[test]
    fn flat_data_has_zero_slope() {
        let fit = fit_rate(&EPS.map(|e| (e, 0.3))).unwrap();
        assert!(fit.slope.abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
    }

    proptest! {
        #[test]
        fn recovers_any_power_law(p in -3.0f64..4.0, c in 1e-3f64..1e3, e0 in 0.01f64..0.5) {
            let pts: Vec<(f64, f64)> = (0..4).map(|k| {
                let e = e0 / 2f64.powi(k);
                (e, c * e.powf(p))
            }).collect();
            let fit = fit_rate(&pts).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-10);
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }
    }
}
