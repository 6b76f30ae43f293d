//! Ljung-Box and Box-Pierce tests for residual autocorrelation.

use crate::scalar::Scalar;

use super::{chi_square_sf, sample_acf, StatsError, TestName, TestOutcome};

/// Lag count used when none is configured: `min(24, n / 5)`, raised so at
/// least one degree of freedom remains after `fitted_params`.
pub fn default_portmanteau_lags(n: usize, fitted_params: usize) -> usize {
    (n / 5).min(24).max(fitted_params + 1)
}

fn check(n: usize, lags: usize, fitted_params: usize) -> Result<(), StatsError> {
    if lags <= fitted_params {
        return Err(StatsError::InvalidDf {
            lags,
            fitted_params,
        });
    }
    if n <= lags {
        return Err(StatsError::LagTooLarge { lag: lags, n });
    }
    Ok(())
}

/// Ljung-Box statistic from autocorrelations `rho[1..=lags]` (entry 0 ignored).
pub fn ljung_box_from_acf<T: Scalar>(
    rho: &[T],
    n: usize,
    lags: usize,
    fitted_params: usize,
) -> Result<TestOutcome<T>, StatsError> {
    check(n, lags, fitted_params)?;
    let nf = T::of_usize(n);
    let sum: T = (1..=lags)
        .map(|k| rho[k] * rho[k] / (nf - T::of_usize(k)))
        .sum();
    let statistic = nf * (nf + T::of(2.0)) * sum;
    outcome(TestName::LjungBox, statistic, lags - fitted_params)
}

/// Box-Pierce statistic from autocorrelations `rho[1..=lags]` (entry 0 ignored).
pub fn box_pierce_from_acf<T: Scalar>(
    rho: &[T],
    n: usize,
    lags: usize,
    fitted_params: usize,
) -> Result<TestOutcome<T>, StatsError> {
    check(n, lags, fitted_params)?;
    let sum: T = (1..=lags).map(|k| rho[k] * rho[k]).sum();
    let statistic = T::of_usize(n) * sum;
    outcome(TestName::BoxPierce, statistic, lags - fitted_params)
}

fn outcome<T: Scalar>(test: TestName, statistic: T, df: usize) -> Result<TestOutcome<T>, StatsError> {
    Ok(TestOutcome {
        test,
        statistic,
        df_or_n: df,
        p_value: chi_square_sf(statistic, df)?,
    })
}

pub fn ljung_box<T: Scalar>(
    residuals: &[T],
    lags: usize,
    fitted_params: usize,
) -> Result<TestOutcome<T>, StatsError> {
    check(residuals.len(), lags, fitted_params)?;
    let acf = sample_acf(residuals, lags)?;
    ljung_box_from_acf(&acf.rho, residuals.len(), lags, fitted_params)
}

pub fn box_pierce<T: Scalar>(
    residuals: &[T],
    lags: usize,
    fitted_params: usize,
) -> Result<TestOutcome<T>, StatsError> {
    check(residuals.len(), lags, fitted_params)?;
    let acf = sample_acf(residuals, lags)?;
    box_pierce_from_acf(&acf.rho, residuals.len(), lags, fitted_params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_acf_gives_null_statistic() {
        let rho = [1.0, 0.0, 0.0, 0.0];
        let lb = ljung_box_from_acf(&rho, 50, 3, 0).unwrap();
        let bp = box_pierce_from_acf(&rho, 50, 3, 0).unwrap();
        assert_eq!((lb.statistic, lb.p_value), (0.0, 1.0));
        assert_eq!((bp.statistic, bp.p_value), (0.0, 1.0));
    }

    #[test]
    fn direct_formula_values() {
        let rho = [1.0f64, 0.1, -0.05];
        let lb = ljung_box_from_acf(&rho, 100, 2, 0).unwrap();
        let expected = 100.0 * 102.0 * (0.01 / 99.0 + 0.0025 / 98.0);
        assert!((lb.statistic - expected).abs() < 1e-12);
        assert!((lb.statistic - 1.2905).abs() < 1e-4);
        let bp = box_pierce_from_acf(&rho, 100, 2, 0).unwrap();
        assert!((bp.statistic - 1.25).abs() < 1e-12);
        assert_eq!(bp.df_or_n, 2);
        assert!((bp.p_value - (-1.25f64 / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn invalid_degrees_of_freedom() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        assert!(matches!(
            ljung_box(&x, 2, 2),
            Err(StatsError::InvalidDf { .. })
        ));
        assert!(box_pierce(&x, 30, 0).is_err());
        assert_eq!(ljung_box(&x, 5, 2).unwrap().df_or_n, 3);
    }

    #[test]
    fn default_lags() {
        assert_eq!(default_portmanteau_lags(161, 2), 24);
        assert_eq!(default_portmanteau_lags(50, 2), 10);
        assert_eq!(default_portmanteau_lags(20, 6), 7);
    }

    proptest! {
        #[test]
        fn box_pierce_never_exceeds_ljung_box(x in prop::collection::vec(-5.0f64..5.0, 20..60), lags in 1usize..10) {
            if let (Ok(lb), Ok(bp)) = (ljung_box(&x, lags, 0), box_pierce(&x, lags, 0)) {
                prop_assert!(bp.statistic <= lb.statistic);
                prop_assert!(bp.statistic >= 0.0);
            }
        }

        #[test]
        fn statistics_non_decreasing_in_lag(x in prop::collection::vec(-5.0f64..5.0, 30..60)) {
            let mut prev_lb = 0.0;
            let mut prev_bp = 0.0;
            for lags in 1..12 {
                let lb = ljung_box(&x, lags, 0).unwrap().statistic;
                let bp = box_pierce(&x, lags, 0).unwrap().statistic;
                prop_assert!(lb >= prev_lb && bp >= prev_bp);
                prev_lb = lb;
                prev_bp = bp;
            }
        }

        #[test]
        fn p_value_recomputes(x in prop::collection::vec(-5.0f64..5.0, 30..60), lags in 2usize..12) {
            let lb = ljung_box(&x, lags, 1).unwrap();
            let again = chi_square_sf(lb.statistic, lb.df_or_n).unwrap();
            prop_assert!((again - lb.p_value).abs() < 1e-12);
        }
    }
}
