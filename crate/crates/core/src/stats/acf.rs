use serde::Serialize;

use crate::scalar::Scalar;

use super::StatsError;

/// Sample autocorrelations for lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfResult<T> {
    /// `rho[k]` is the autocorrelation at lag `k`; `rho[0] == 1`.
    pub rho: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> AcfResult<T> {
    pub fn max_lag(&self) -> usize {
        self.rho.len() - 1
    }

    pub fn at(&self, lag: usize) -> T {
        self.rho[lag]
    }
}

fn check_input<T: Scalar>(x: &[T], max_lag: usize) -> Result<(), StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations {
            n: x.len(),
            needed: 2,
        });
    }
    if max_lag >= x.len() {
        return Err(StatsError::LagTooLarge {
            lag: max_lag,
            n: x.len(),
        });
    }
    Ok(())
}

/// Biased-denominator sample ACF: every lag is divided by the lag-0 sum.
pub fn sample_acf<T: Scalar>(x: &[T], max_lag: usize) -> Result<AcfResult<T>, StatsError> {
    check_input(x, max_lag)?;
    let n = x.len();
    let mean = x.iter().copied().sum::<T>() / T::of_usize(n);
    let centered: Vec<T> = x.iter().map(|&v| v - mean).collect();
    let denom: T = centered.iter().map(|&v| v * v).sum();
    if !(denom > T::zero()) {
        return Err(StatsError::DegenerateSeries);
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    rho.push(T::one());
    for k in 1..=max_lag {
        let num: T = centered[k..]
            .iter()
            .zip(&centered[..n - k])
            .map(|(&a, &b)| a * b)
            .sum();
        rho.push(num / denom);
    }
    Ok(AcfResult { rho, n })
}

/// Partial autocorrelations from an autocorrelation sequence.
///
/// `rho[0]` must be 1. Returns a vector of the same length whose entry `k`
/// is the lag-`k` partial autocorrelation (entry 0 is 1 by convention).
pub fn durbin_levinson<T: Scalar>(rho: &[T]) -> Result<Vec<T>, StatsError> {
    let max_lag = rho.len().saturating_sub(1);
    let mut pacf = Vec::with_capacity(max_lag + 1);
    pacf.push(T::one());
    if max_lag == 0 {
        return Ok(pacf);
    }
    let floor = T::epsilon() * T::of(16.0);
    let mut phi: Vec<T> = vec![rho[1]];
    let mut v = T::one() - rho[1] * rho[1];
    pacf.push(rho[1]);
    for k in 2..=max_lag {
        if !(v > floor) {
            return Err(StatsError::NumericalBreakdown(k));
        }
        let acc: T = (1..k).map(|j| phi[j - 1] * rho[k - j]).sum();
        let kk = (rho[k] - acc) / v;
        let mut next = Vec::with_capacity(k);
        for j in 1..k {
            next.push(phi[j - 1] - kk * phi[k - j - 1]);
        }
        next.push(kk);
        phi = next;
        v *= T::one() - kk * kk;
        pacf.push(kk);
    }
    Ok(pacf)
}

/// Sample PACF (entry `k` is lag `k`, entry 0 is 1).
pub fn sample_pacf<T: Scalar>(x: &[T], max_lag: usize) -> Result<Vec<T>, StatsError> {
    let acf = sample_acf(x, max_lag)?;
    durbin_levinson(&acf.rho)
}
