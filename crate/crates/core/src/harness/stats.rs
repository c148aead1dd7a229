//! Binomial confidence bounds and the log-linear concentration fit.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::ambiguity::ConcentrationConstants;
use crate::error::{Error, Result};

use super::ViolationStats;

/// Quantile of Beta(a, b) by bisection on the regularized incomplete beta.
fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Clopper-Pearson interval at confidence `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    assert!(
        successes <= trials && trials > 0,
        "need 0 <= k <= n and n > 0"
    );
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, k, n - k + 1.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, k + 1.0, n - k)
    };
    (lo, hi)
}

/// One-sided Clopper-Pearson upper bound at confidence `1 - alpha`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, alpha: f64) -> f64 {
    assert!(
        successes <= trials && trials > 0,
        "need 0 <= k <= n and n > 0"
    );
    let (k, n) = (successes as f64, trials as f64);
    if successes == trials {
        1.0
    } else if successes == 0 {
        1.0 - alpha.powf(1.0 / n)
    } else {
        beta_quantile(1.0 - alpha, k + 1.0, n - k)
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least 2",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fitted concentration constants with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFit {
    pub constants: ConcentrationConstants,
    pub fit: LinearFit,
    pub used: usize,
    /// Rows dropped because no violation was observed.
    pub excluded: usize,
}

/// Fits `ln beta_hat = ln c1 - c2 * N * eps^2` over rows with `beta_hat > 0`.
pub fn fit_constants(stats: &[ViolationStats]) -> Result<ConstantsFit> {
    let (kept, dropped): (Vec<&ViolationStats>, Vec<&ViolationStats>) =
        stats.iter().partition(|s| s.beta_hat > 0.0);
    if !dropped.is_empty() {
        log::warn!(
            "excluding {} rows with beta_hat = 0 from the fit",
            dropped.len()
        );
    }
    if kept.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} rows with beta_hat > 0, need at least 3",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept
        .iter()
        .map(|s| s.n as f64 * s.epsilon * s.epsilon)
        .collect();
    let ys: Vec<f64> = kept.iter().map(|s| s.beta_hat.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    if fit.slope.is_nan() || fit.slope >= 0.0 {
        return Err(Error::InsufficientData(format!(
            "fitted slope {} is not negative, no decay to fit",
            fit.slope
        )));
    }
    let constants = ConcentrationConstants::new(fit.intercept.exp(), -fit.slope)?;
    Ok(ConstantsFit {
        constants,
        fit,
        used: kept.len(),
        excluded: dropped.len(),
    })
}

/// Keeps the fitted decay rate and raises `c1` until the curve lies on or
/// above the upper confidence bound of every row in `stats`.
pub fn envelope_constants(
    fit: &ConstantsFit,
    stats: &[ViolationStats],
) -> Result<ConcentrationConstants> {
    let c2 = fit.constants.c2();
    let c1 = stats
        .iter()
        .map(|s| s.ci_hi * (c2 * s.n as f64 * s.epsilon * s.epsilon).exp())
        .fold(fit.constants.c1(), f64::max);
    ConcentrationConstants::new(c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(epsilon: f64, n: usize, beta_hat: f64) -> ViolationStats {
        ViolationStats {
            epsilon,
            n,
            steps: 24,
            trials: 1000,
            violations: (beta_hat * 1000.0).round() as u64,
            beta_hat,
            ci_lo: 0.0,
            ci_hi: 1.0,
            degenerate: false,
        }
    }

    #[test]
    fn zero_successes_upper_bound_has_closed_form() {
        let u = clopper_pearson_upper(0, 100, 0.05);
        assert!((u - (1.0 - 0.05f64.powf(0.01))).abs() < 1e-15);
        assert!((u - 0.0295).abs() < 1e-4);
        // the same value through the generic quantile
        assert!((beta_quantile(0.95, 1.0, 100.0) - u).abs() < 1e-12);
    }

    #[test]
    fn two_sided_interval_known_value() {
        // k = 5, n = 20: the classical interval is (0.0866, 0.4910)
        let (lo, hi) = clopper_pearson(5, 20, 0.05);
        assert!((lo - 0.086_57).abs() < 1e-4, "{lo}");
        assert!((hi - 0.491_04).abs() < 1e-4, "{hi}");
        assert_eq!(clopper_pearson(0, 10, 0.05).0, 0.0);
        assert_eq!(clopper_pearson(10, 10, 0.05).1, 1.0);
    }

    #[test]
    fn recovers_exact_constants() {
        let rows: Vec<_> = [0.1, 0.2, 0.3, 0.4]
            .iter()
            .flat_map(|&e| {
                [5usize, 10].map(move |n| row(e, n, 2.0 * (-1.5 * n as f64 * e * e).exp()))
            })
            .collect();
        let fit = fit_constants(&rows).unwrap();
        assert!((fit.constants.c1() - 2.0).abs() < 1e-6);
        assert!((fit.constants.c2() - 1.5).abs() < 1e-6);
        assert!((fit.fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_covers_every_upper_bound() {
        let mut rows: Vec<_> = [0.1, 0.2, 0.3, 0.4]
            .iter()
            .map(|&e| row(e, 10, 0.5 * (-10.0 * e * e).exp()))
            .collect();
        for (r, hi) in rows.iter_mut().zip([0.6, 0.4, 0.3, 0.3]) {
            r.ci_hi = hi;
        }
        let fit = fit_constants(&rows).unwrap();
        let c = envelope_constants(&fit, &rows).unwrap();
        assert_eq!(c.c2(), fit.constants.c2());
        for r in &rows {
            let predicted = c.c1() * (-c.c2() * r.n as f64 * r.epsilon * r.epsilon).exp();
            assert!(predicted >= r.ci_hi * (1.0 - 1e-12));
        }
    }

    #[test]
    fn zero_rows_are_excluded() {
        let mut rows: Vec<_> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&e| row(e, 10, 2.0 * (-15.0 * e * e).exp()))
            .collect();
        rows.push(row(0.9, 10, 0.0));
        let fit = fit_constants(&rows).unwrap();
        assert_eq!((fit.used, fit.excluded), (3, 1));
        assert!(matches!(
            fit_constants(&rows[2..]),
            Err(Error::InsufficientData(_))
        ));
    }
}
