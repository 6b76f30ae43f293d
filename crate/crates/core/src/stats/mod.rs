//! Autocorrelation tools, residual diagnostics and the distribution
//! functions behind them.

mod acf;
mod diagnostics;
mod dist;
mod portmanteau;
mod shapiro;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

pub use acf::{durbin_levinson, sample_acf, sample_pacf, AcfResult};
pub use dist::{
    chi_square_sf, erfc, gamma_p, gamma_q, ln_gamma, normal_cdf, normal_pdf, normal_quantile,
    normal_sf,
};
pub use portmanteau::{
    box_pierce, box_pierce_from_acf, default_portmanteau_lags, ljung_box, ljung_box_from_acf,
};
pub use diagnostics::{diagnose, DiagnosticsReport};
pub use shapiro::shapiro_wilk;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("need at least {needed} observations, got {n}")]
    TooFewObservations { n: usize, needed: usize },
    #[error("lag {lag} is not below the sample size {n}")]
    LagTooLarge { lag: usize, n: usize },
    #[error("Durbin-Levinson recursion broke down at lag {0}")]
    NumericalBreakdown(usize),
    #[error("{lags} lags leave no degrees of freedom after {fitted_params} fitted parameters")]
    InvalidDf { lags: usize, fitted_params: usize },
    #[error("Shapiro-Wilk needs 3..=5000 observations, got {0}")]
    SampleSizeOutOfRange(usize),
    #[error("argument outside the function's domain: {0}")]
    OutOfDomain(String),
    #[error("sample contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TestName {
    LjungBox,
    BoxPierce,
    ShapiroWilk,
}

impl TestName {
    pub fn label(&self) -> &'static str {
        match self {
            TestName::LjungBox => "Ljung-Box",
            TestName::BoxPierce => "Box-Pierce",
            TestName::ShapiroWilk => "Shapiro-Wilk",
        }
    }
}

/// Result of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome<T> {
    pub test: TestName,
    pub statistic: T,
    /// Degrees of freedom for the portmanteau tests, sample size for
    /// Shapiro-Wilk.
    pub df_or_n: usize,
    pub p_value: T,
}

impl<T: Scalar> TestOutcome<T> {
    pub fn rejects_at(&self, level: T) -> bool {
        self.p_value < level
    }
}

/// Normal QQ pairs `(theoretical, empirical)` using Blom plotting positions
/// `(i - 0.375) / (n + 0.25)`.
pub fn qq_points<T: Scalar>(residuals: &[T]) -> Result<Vec<(T, T)>, StatsError> {
    let n = residuals.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations { n, needed: 3 });
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let denom = T::of_usize(n) + T::of(0.25);
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let p = (T::of_usize(i + 1) - T::of(0.375)) / denom;
            Ok((normal_quantile(p)?, e))
        })
        .collect()
}
