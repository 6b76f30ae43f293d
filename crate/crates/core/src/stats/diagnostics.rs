//! Residual diagnostics bundle: both portmanteau tests, Shapiro-Wilk and QQ
//! pairs.

use serde::Serialize;

use crate::scalar::Scalar;

use super::{
    box_pierce, default_portmanteau_lags, ljung_box, qq_points, shapiro_wilk, StatsError,
    TestOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport<T> {
    pub lags: usize,
    pub fitted_params: usize,
    pub ljung_box: TestOutcome<T>,
    pub box_pierce: TestOutcome<T>,
    pub shapiro_wilk: TestOutcome<T>,
    /// `(theoretical, empirical)` pairs, sorted.
    pub qq: Vec<(T, T)>,
}

impl<T: Scalar> DiagnosticsReport<T> {
    pub fn outcomes(&self) -> [&TestOutcome<T>; 3] {
        [&self.ljung_box, &self.box_pierce, &self.shapiro_wilk]
    }

    /// No test rejects at `level`.
    pub fn passes_at(&self, level: T) -> bool {
        self.outcomes().iter().all(|o| !o.rejects_at(level))
    }
}

/// Runs all residual tests. `fitted_params` counts ARMA coefficients and is
/// subtracted from the portmanteau degrees of freedom; `lags` defaults to
/// [`default_portmanteau_lags`].
pub fn diagnose<T: Scalar>(
    residuals: &[T],
    fitted_params: usize,
    lags: Option<usize>,
) -> Result<DiagnosticsReport<T>, StatsError> {
    let lags = lags.unwrap_or_else(|| default_portmanteau_lags(residuals.len(), fitted_params));
    Ok(DiagnosticsReport {
        lags,
        fitted_params,
        ljung_box: ljung_box(residuals, lags, fitted_params)?,
        box_pierce: box_pierce(residuals, lags, fitted_params)?,
        shapiro_wilk: shapiro_wilk(residuals)?,
        qq: qq_points(residuals)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn white_noise_passes_and_fields_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = diagnose(&x, 2, None).unwrap();
        assert_eq!(r.lags, 24);
        assert_eq!(r.ljung_box.df_or_n, 22);
        assert_eq!(r.shapiro_wilk.df_or_n, 200);
        assert_eq!(r.qq.len(), 200);
        assert!(r.box_pierce.statistic <= r.ljung_box.statistic);
        assert!(r.passes_at(0.01));
    }

    #[test]
    fn autocorrelated_residuals_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut x = vec![0.0f64; 300];
        for t in 1..300 {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[t] = 0.7 * x[t - 1] + e;
        }
        let r = diagnose(&x, 0, Some(10)).unwrap();
        assert!(r.ljung_box.p_value < 1e-6);
        assert!(!r.passes_at(0.10));
    }

    #[test]
    fn propagates_invalid_df() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        assert!(matches!(
            diagnose(&x, 5, Some(5)),
            Err(StatsError::InvalidDf { .. })
        ));
    }
}
